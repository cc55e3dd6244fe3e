import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from optstop import catalog, levy, ssmp
from optstop.errors import BadOrdering, DomainError, InvalidSpec
from optstop.mc import SimConfig, simulate_ssmp_payoff
from optstop.model import LevySpec, SsmpSpec
from scenarios import bessel_problems

PSE = ssmp.PowerSeriesEigenfunction
BESSEL0 = PSE.bessel(0.0)


def test_eval_I_examples():
    assert ssmp.eval_I(BESSEL0, 0.0) == 1.0
    assert ssmp.eval_I(BESSEL0, 2.0) == pytest.approx(special.i0(2.0), rel=1e-14)
    assert ssmp.eval_I(BESSEL0, 2.0) == pytest.approx(2.2795853, abs=5e-8)
    assert ssmp.eval_I(PSE.mittag_leffler(1.0), 1.0) == pytest.approx(math.e, rel=1e-14)


def test_eval_Iq_examples():
    assert ssmp.eval_Iq(BESSEL0, 0.7, 0.0) == 1.0
    assert ssmp.eval_Iq(BESSEL0, 1.0, 0.5) == pytest.approx(math.exp(0.25), rel=1e-14)
    # with psi(u) = u^2/2, I(q; x) = Phi(q, 1, x/2)
    assert ssmp.eval_Iq(BESSEL0, 0.7, 1.0) == pytest.approx(special.hyp1f1(0.7, 1.0, 0.5), rel=1e-13)


def test_mittag_leffler_at_one_is_a_power():
    ml = PSE.mittag_leffler(1.0)
    assert ssmp.eval_Iq(ml, 2.5, 0.4) == pytest.approx(0.6 ** -2.5, rel=1e-12)


def test_hitting_X():
    assert ssmp.hitting_laplace_X(BESSEL0, 1.0, 2.0, 0.0) == 1.0
    assert ssmp.hitting_laplace_X(BESSEL0, 2.0, 2.0, 0.5) == 1.0
    v = ssmp.hitting_laplace_X(BESSEL0, 1.0, 2.0, 0.5)
    assert v == pytest.approx(special.i0(1.0) / special.i0(2.0), rel=1e-13)
    assert v == pytest.approx(0.55539307, abs=5e-9)
    with pytest.raises(BadOrdering):
        ssmp.hitting_laplace_X(BESSEL0, 2.0, 1.0, 0.5)


def test_hitting_U():
    assert ssmp.hitting_laplace_U(BESSEL0, 1.5, 1.5, 0.7) == 1.0
    assert ssmp.hitting_laplace_U(BESSEL0, 0.5, 2.0, 1e-12) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(BadOrdering):
        ssmp.hitting_laplace_U(BESSEL0, 2.0, 1.0, 0.5)


@given(x=st.floats(0.05, 2.0), dx=st.floats(0.01, 2.0), q=st.floats(0.05, 3.0), dq=st.floats(0.01, 1.0))
def test_hitting_monotonicity(x, dx, q, dq):
    a = x + dx
    for f in (ssmp.hitting_laplace_X, ssmp.hitting_laplace_U):
        v = f(BESSEL0, x, a, q)
        assert 0 < v <= 1
        assert f(BESSEL0, x, a + 0.1, q) <= v
        assert f(BESSEL0, min(x + 0.5 * dx, a), a, q) >= v
        assert f(BESSEL0, x, a, q + dq) <= v


@pytest.mark.parametrize("pse", [BESSEL0, PSE.bessel(0.25), PSE.pochhammer(1.5), PSE.mittag_leffler(1.3)])
def test_coefficient_recurrence(pse):
    la = pse.log_coeffs(200)
    k = np.arange(1, la.size)
    step = la[1:] - la[:-1]
    # differences of a running sum carry its rounding, so measure relative to |log a_n|
    err = np.abs(step + np.log(pse.psi(pse.alpha * k))) / np.maximum(1.0, np.abs(la[1:]))
    assert err.max() < 1e-14
    assert la[0] == 0.0 and np.all(np.diff(step) < 0)


def test_bessel_and_mittag_leffler_reductions():
    # the series for psi(u) = u^2/2 + nu u is Gamma(1+nu) (x/2)^{-nu/2} I_nu(sqrt(2x))
    nu, x = 0.25, np.linspace(0.1, 10.0, 25)
    closed = special.gamma(1 + nu) * (x / 2) ** (-nu / 2) * special.iv(nu, np.sqrt(2 * x))
    np.testing.assert_allclose(PSE.bessel(nu).I(x), closed, rtol=1e-10)
    # the form with I_{-nu} and Gamma(1-nu) is a different function once nu != 0
    other = special.gamma(1 - nu) * (x / 2) ** (nu / 2) * special.iv(-nu, np.sqrt(2 * x))
    assert np.max(np.abs(other / closed - 1)) > 1e-2
    # Mittag-Leffler family: I(x) = Gamma(alpha) M_{alpha,alpha}(x), not at alpha x
    from optstop import specfun
    al = 1.5
    ml = PSE.mittag_leffler(al)
    np.testing.assert_allclose(ml.I(x), math.gamma(al) * specfun.mittag_leffler(al, al, x), rtol=1e-10)
    assert abs(ml.I(2.0) / (math.gamma(al) * specfun.mittag_leffler(al, al, al * 2.0)) - 1) > 1e-2


def test_constant_reward():
    res = ssmp.solve_ssmp_problems(BESSEL0, catalog.constant(1.7), 0.5, 1.0, 0.8)
    assert set(res) == set(ssmp.PROBLEMS)
    for s in res.values():
        assert s.a_star == pytest.approx(0.8, abs=1e-12)
        assert s.value == pytest.approx(1.7, rel=1e-12)


def test_problem_selection_and_errors():
    res = ssmp.solve_ssmp_problems(BESSEL0, catalog.call(1.0, "level"), 0.5, 1.0, 0.5, problems=["V_X"])
    assert list(res) == ["V_X"]
    with pytest.raises(InvalidSpec):
        ssmp.solve_ssmp_problems(BESSEL0, catalog.call(1.0, "level"), 0.5, 1.0, 0.5, problems=["V_Y"])
    with pytest.raises(DomainError):
        ssmp.solve_ssmp_problems(BESSEL0, catalog.call(1.0, "level"), 0.5, 1.0, 0.0)


def test_esscher_tilt():
    t = ssmp.esscher(BESSEL0, 0.5)
    assert t.shift == pytest.approx(1.0, abs=1e-12)
    u = np.array([0.5, 1.0, 3.0])
    np.testing.assert_allclose(t.psi(u), 0.5 * (u + 1) ** 2 - 0.5, rtol=1e-14)
    assert ssmp.esscher(BESSEL0, 0.5, gamma=1.0).shift == 1.0
    with pytest.raises(DomainError):
        ssmp.esscher(BESSEL0, 0.5, gamma=0.7)
    with pytest.raises(InvalidSpec):
        ssmp.esscher(PSE.mittag_leffler(1.0), 0.5)


def test_integral_option_dominates_immediate_payoff():
    g = catalog.call(1.0, "level")
    for x in (0.5, 1.0, 1.5, 2.5):
        v = ssmp.solve_ssmp_problems(BESSEL0, g, 0.5, 1.0, x, problems=["V_Sq"])["V_Sq"].value
        assert v >= g(x ** 2) - 1e-12


def test_nonpositive_theta_condition():
    with pytest.raises(InvalidSpec):
        SsmpSpec(LevySpec(1.0, -3.0), 2.0)


@pytest.fixture(scope="module")
def problems():
    return bessel_problems()


@pytest.mark.parametrize("name", ssmp.PROBLEMS)
def test_problem_values_against_monte_carlo(problems, name, warm_jit):
    pse, g, res = problems
    s = res[name]
    kind = ssmp.MC_KIND[name]
    # the Lévy-clock kinds need far more steps per unit of horizon
    dt, horizon = (3e-3, 15.0) if kind in ("U_delta", "S") else (1e-3, 40.0)
    cfg = SimConfig(n_paths=20_000, dt=dt, horizon=horizon, seed=31 + ssmp.PROBLEMS.index(name), bridge=True)
    est = simulate_ssmp_payoff(pse.spec, g, 0.5, s.a_star, cfg, 0.5, kind=kind, beta=1.0)
    assert s.attained
    assert est.within(s.value, 3.0), (est.mean, est.std_error, s.value)


def test_V_X_dominates_other_thresholds(problems, warm_jit):
    pse, g, res = problems
    s = res["V_X"]
    cfg = SimConfig(n_paths=20_000, dt=1e-3, horizon=40.0, seed=41, bridge=True)
    for a in np.linspace(1.2, 4.0, 10):
        est = simulate_ssmp_payoff(pse.spec, g, 0.5, float(a), cfg, 0.5)
        assert est.mean <= s.value + 3 * est.std_error
