import math

import numpy as np
import pytest
from scipy import special

from optstop import catalog, levy, solver
from optstop.errors import BadOrdering, NonPositiveRate, StartAboveThreshold
from optstop.model import CompoundPoissonExp, LevySpec, Pochhammer

FAMILIES = [
    LevySpec(1.0, 0.0),
    LevySpec(0.5, 0.3, CompoundPoissonExp(2.0, 0.5)),
    LevySpec(0.0, 0.0, Pochhammer(1.5, 1.0)),
    LevySpec(0.2, -0.4, Pochhammer(1.3, 0.5)),
]


def test_psi_examples():
    assert levy.psi(LevySpec(1.0, 0.0), 1.0) == 0.5
    assert levy.psi(LevySpec(0.0, 0.0, Pochhammer(1.5)), 1.0) == pytest.approx(
        math.gamma(2.5), rel=1e-14)
    assert math.gamma(2.5) == pytest.approx(1.3293404, abs=5e-8)
    for spec in FAMILIES:
        assert levy.psi(spec, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_compound_poisson_exponent():
    spec = LevySpec(0.5, 0.3, CompoundPoissonExp(2.0, 0.5))
    u = 1.7
    want = 0.25 * u * u + 0.3 * u + 2.0 * (2.0 / (2.0 + u) - 1.0)
    assert levy.psi(spec, u) == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("spec", FAMILIES)
def test_psi_prime_matches_finite_difference(spec):
    u = np.array([0.3, 1.0, 2.5])
    h = 1e-6
    fd = (levy.psi(spec, u + h) - levy.psi(spec, u - h)) / (2 * h)
    np.testing.assert_allclose(levy.psi_prime(spec, u), fd, rtol=1e-6)


@pytest.mark.parametrize("spec", FAMILIES)
def test_phi_inverts_psi(spec):
    le = levy.laplace_exponent(spec)
    for r in (0.01, 0.5, 2.0, 10.0):
        u = le.phi(r)
        assert u >= le.theta
        assert le.psi(u) == pytest.approx(r, rel=1e-12)


def test_theta_of_a_negative_drift():
    # psi(u) = u^2/2 - u vanishes at u = 2
    assert levy.theta(LevySpec(1.0, -1.0)) == pytest.approx(2.0, abs=1e-12)
    assert levy.theta(LevySpec(1.0, 0.5)) == 0.0


def test_martingale_rate():
    assert levy.martingale_rate(LevySpec(1.0, 0.0)) == 0.5
    assert levy.martingale_rate(LevySpec(1.0, 0.25)) == 0.75
    with pytest.raises(NonPositiveRate):
        levy.martingale_rate(LevySpec(1.0, -0.5))


def test_hitting_laplace_up():
    bm = LevySpec(1.0, 0.0)
    assert levy.hitting_laplace_up(bm, 0.3, 0.3, 1.0) == 1.0
    assert levy.hitting_laplace_up(bm, 0.0, 1.0, 0.5) == pytest.approx(math.exp(-1.0), rel=1e-13)
    assert levy.hitting_laplace_up(bm, 0.0, 4.0, 0.0) == 1.0
    with pytest.raises(BadOrdering):
        levy.hitting_laplace_up(bm, 1.0, 0.0, 0.5)


def test_call_with_cost_example():
    r = levy.call_with_cost(LevySpec(1.0, 0.0), 1.0, 0.1, 0.5, 0.0)
    assert r.p_gamma == pytest.approx(0.375, rel=1e-14)
    assert r.x_star == pytest.approx(2.0 * math.log(7.5), abs=1e-12)
    assert r.value == pytest.approx(57.25 / 56.25 - 4.0 / 15.0, abs=1e-12)


def test_threshold_decreases_with_the_cost():
    spec = LevySpec(1.0, 0.0)
    lo = levy.call_with_cost(spec, 1.0, 0.1, 0.5, 0.0)
    hi = levy.call_with_cost(spec, 1.0, 0.2, 0.5, 0.0)
    assert hi.x_star < lo.x_star
    assert hi.value < lo.value


def test_start_above_threshold_is_flagged():
    with pytest.warns(StartAboveThreshold):
        r = levy.call_with_cost(LevySpec(1.0, 0.0), 1.0, 0.1, 0.5, 5.0)
    assert not r.supported and math.isnan(r.value)


def test_p_gamma_is_positive_whenever_the_rate_is():
    # convexity with psi(0) = 0 gives psi(gamma) <= gamma psi(1) < psi(1); the error is a guard only
    for spec in FAMILIES:
        if levy.psi(spec, 1.0) > 0:
            for g in (0.1, 0.5, 0.9):
                assert levy.call_with_cost(spec, 1.0, 0.1, g, -50.0).p_gamma > 0
    with pytest.raises(NonPositiveRate):
        levy.call_with_cost(LevySpec(1.0, -0.75), 1.0, 0.1, 0.5, 0.0)


def test_closed_form_against_generic_solver():
    spec = LevySpec(0.6, 0.1, CompoundPoissonExp(1.0, 0.3))
    q = levy.martingale_rate(spec)
    cf = levy.call_with_cost(spec, 1.0, 0.1, 0.5, 0.0)
    pair = levy.exponential_pair(spec, q, -30.0, 30.0)
    assert pair.rate == pytest.approx(1.0, rel=1e-12)
    d = levy.exp_cost_potential(spec, q, 0.1, 0.5)
    sol = solver.solve_one_sided(pair, d, catalog.call(1.0), 0.0)
    assert sol.u_star == pytest.approx(cf.x_star, abs=1e-8)
    assert sol.value(0.0) == pytest.approx(cf.value, abs=1e-10)
    assert cf.value_at(0.0, 1.0, 0.1, 0.5) == pytest.approx(cf.value, abs=1e-14)


def test_psi_is_convex_on_a_probe_grid():
    u = np.linspace(0.0, 6.0, 61)
    for spec in FAMILIES:
        p = levy.psi(spec, u)
        assert np.all(p[1:-1] <= 0.5 * (p[:-2] + p[2:]) + 1e-12)


def test_pochhammer_exponent_uses_log_gamma():
    spec = LevySpec(0.0, 0.0, Pochhammer(1.3, 0.5))
    u = 2.2
    s0 = -0.5
    want = math.exp(special.gammaln(u + s0 + 1.3) - special.gammaln(u + s0)) - special.poch(s0, 1.3)
    assert levy.psi(spec, u) == pytest.approx(want, rel=1e-12)
