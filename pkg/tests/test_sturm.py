import csv
import math

import numpy as np
import pytest
from scipy import integrate

from optstop import sturm
from optstop.errors import IntegrationBlowup, OutOfGrid
from scenarios import alphas, bm, bm_pair, ou


def test_scale_of_driftless_bm():
    ss = sturm.scale(bm(), 0.0)
    xs = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(ss.s(xs), xs, atol=1e-12)
    np.testing.assert_allclose(ss.s_prime(xs), 1.0, rtol=1e-14)
    np.testing.assert_allclose(ss.m_density(xs), 2.0, rtol=1e-14)


def test_scale_derivative_with_drift():
    ss = sturm.scale(bm(0.5), 0.0)
    assert ss.s_prime(1.0) == pytest.approx(math.exp(-1.0), rel=1e-10)


def test_exit_probability():
    ss = sturm.scale(bm(), 0.0)
    p = (ss.s(2.0) - ss.s(0.0)) / (ss.s(2.0) - ss.s(-1.0))
    assert p == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_bm_fundamental_pair():
    pair = bm_pair(0.0, 0.5)
    xs = np.linspace(-8, 8, 17)
    np.testing.assert_allclose(pair.h_plus(xs), np.exp(xs), rtol=1e-9)
    np.testing.assert_allclose(pair.h_minus(xs), np.exp(-xs), rtol=1e-9)
    assert pair.wronskian == pytest.approx(2.0, rel=1e-10)


@pytest.mark.parametrize("b", [-0.7, 0.3])
def test_drifted_bm_rate(b):
    pair = bm_pair(b, 1.0)
    a1, _ = alphas(b, 1.0)
    assert pair.h_plus(2.0) == pytest.approx(math.exp(2 * a1), rel=1e-9)


def test_normalisation_at_reference_point():
    pair = sturm.fundamental_solutions(ou(), 0.8, 0.3, half_width=10)
    assert pair.h_plus(0.3) == pytest.approx(1.0, abs=1e-14)
    assert pair.h_minus(0.3) == pytest.approx(1.0, abs=1e-14)


def test_hitting_laplace():
    pair = bm_pair(0.0, 0.5)
    assert sturm.hitting_laplace(pair, 0.4, 0.4) == 1.0
    assert sturm.hitting_laplace(pair, 0.0, 1.0) == pytest.approx(math.exp(-1), rel=1e-10)
    ys = [0.5, 1.0, 2.0, 3.0]
    up = [sturm.hitting_laplace(pair, 0.0, y) for y in ys]
    down = [sturm.hitting_laplace(pair, 0.0, -y) for y in ys]
    assert np.all(np.diff(up) < 0) and np.all(np.diff(down) < 0)
    with pytest.raises(OutOfGrid):
        sturm.hitting_laplace(pair, 0.0, 100.0)


def test_green_function():
    pair = bm_pair(0.0, 0.5)
    ss = pair.scale
    assert sturm.green(pair, ss, 0.0, 0.0) == pytest.approx(0.5, rel=1e-10)
    assert sturm.green(pair, ss, 0.3, 1.1) == sturm.green(pair, ss, 1.1, 0.3)
    # total resolvent mass: int u^q(x, y) m(dy) = 1/q
    mass, _ = integrate.quad(lambda y: sturm.green(pair, ss, 0.2, y) * ss.m_density(y), -35, 35,
                             points=[0.2], limit=200)
    assert mass == pytest.approx(2.0, rel=1e-8)


def test_ou_ode_residual_and_wronskian():
    d = ou(1.0, 0.7)
    pair = sturm.fundamental_solutions(d, 1.3, 0.0, half_width=8)
    xs = np.linspace(-4, 4, 33)
    for which in ("plus", "minus"):
        assert np.max(np.abs(sturm.ode_residual(pair, d, xs, which))) < 1e-6
    w = np.array([pair.wronskian_at(x) for x in xs])
    assert np.ptp(w) / w.mean() < 1e-6


def test_scale_overflow_is_reported():
    with pytest.raises(IntegrationBlowup):
        sturm.fundamental_solutions(ou(), 0.5, 0.0, half_width=30)


def test_export_csv(tmp_path):
    pair = bm_pair(0.0, 1.0, n=64)
    path = tmp_path / "pair.csv"
    sturm.export_csv(path, pair)
    rows = list(csv.reader(open(path)))
    assert rows[0][:5] == ["x", "h_plus", "h_minus", "s", "m_density"]
    assert len(rows) == 65
