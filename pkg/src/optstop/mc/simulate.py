"""Monte Carlo estimates of stopping payoffs and path ensembles."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numba as nb
import numpy as np

from ..errors import HorizonTooShort, InvalidSpec, UnsupportedCallable, UnsupportedFamily
from ..model import CompoundPoissonExp, ConstantRate, LevySpec, ProblemSpec, RandomDiscount, SsmpSpec, evaluate
from ..rules import FixedTime, Interval
from . import kernels as K
from .rng import split_seed

MAX_TRUNCATED = 0.05


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``kill_fraction`` splits the discount between killing at rate
    ``kappa a(x)`` and weighting by ``exp(-(1 - kappa) A)``; 1 is pure killing
    (cheapest), 0 pure weighting (lowest variance for rare stops).
    ``bridge`` turns on the Brownian-bridge barrier correction.
    """
    n_paths: int = 100_000
    dt: float = 1e-3
    horizon: float = 50.0
    seed: int = 0
    antithetic: bool = False
    bridge: bool = False
    kill_fraction: float = 1.0

    def __post_init__(self):
        if self.n_paths < 100:
            raise InvalidSpec(f"n_paths must be at least 100, got {self.n_paths}")
        if not (self.dt > 0 and self.horizon > 0 and self.dt <= self.horizon):
            raise InvalidSpec("need 0 < dt <= horizon")
        if not 0.0 <= self.kill_fraction <= 1.0:
            raise InvalidSpec("kill_fraction must lie in [0, 1]")
        if self.antithetic and self.n_paths % 2:
            raise InvalidSpec("antithetic sampling needs an even n_paths")
        split_seed(self.seed)

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.horizon / self.dt - 1e-9))


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n_effective: int
    truncated_fraction: float
    seed: int

    def to_json(self) -> str:
        d = {"mean": self.mean, "std_error": self.std_error, "n": self.n_effective,
             "truncated_fraction": self.truncated_fraction, "seed": self.seed}
        return json.dumps(d, sort_keys=True)

    def within(self, value, k=3.0) -> bool:
        return abs(self.mean - value) <= k * self.std_error


@dataclass(frozen=True)
class PathOutcome:
    """Per-path results behind an ``Estimate``."""
    x: np.ndarray
    A: np.ndarray
    C: np.ndarray
    t: np.ndarray
    status: np.ndarray
    payoff: np.ndarray


def estimate(samples, cfg: SimConfig, truncated=0.0) -> Estimate:
    y = np.asarray(samples, dtype=float)
    if cfg.antithetic:
        y = 0.5 * (y[0::2] + y[1::2])
    n = y.size
    # a constant sample has no error; np.std would return rounding noise
    se = float(np.std(y, ddof=1) / math.sqrt(n)) if n > 1 and np.ptp(y) > 0 else 0.0
    return Estimate(float(np.mean(y)), se, n, float(truncated), int(cfg.seed))


def _check_truncation(frac):
    if frac > MAX_TRUNCATED:
        raise HorizonTooShort(f"{frac:.1%} of the discounted mass is censored at the horizon", frac)


# -- coefficient compilation ----------------------------------------------------

def coefficient(f):
    """(callable, exp-affine triple) pair understood by the kernels."""
    if f is None:
        return K.zero_fn, np.array([0.0, 0.0, 0.0])
    ea = getattr(f, "exp_affine", None)
    if ea is not None:
        return K.zero_fn, np.array([float(v) for v in ea])
    if isinstance(f, (int, float)):
        return K.zero_fn, np.array([float(f), 0.0, 0.0])
    src = getattr(f, "scalar", f)
    try:
        jf = nb.njit(K.SCALAR_SIG)(src)
        probe = float(jf(0.25))
    except Exception as exc:  # numba raises a zoo of error types
        raise UnsupportedCallable(f"cannot compile {f!r} for simulation: {exc}") from None
    ref = float(np.asarray(f(0.25), dtype=float))
    if not (probe == ref or (math.isnan(probe) and math.isnan(ref)) or abs(probe - ref) <= 1e-12 * (1 + abs(ref))):
        raise UnsupportedCallable(f"compiled {f!r} disagrees with the Python version")
    return jf, np.array([math.nan, 0.0, 0.0])


def _exp_affine(f):
    if f is None:
        return (0.0, 0.0, 0.0)
    if isinstance(f, (int, float)):
        return (float(f), 0.0, 0.0)
    ea = getattr(f, "exp_affine", None)
    return None if ea is None else tuple(float(v) for v in ea)


def _constant(f):
    ea = _exp_affine(f)
    if ea is None or (ea[1] != 0.0 and ea[2] != 0.0):
        return None
    return ea[0] + ea[1]


def _rate_fn(discount):
    if isinstance(discount, ConstantRate):
        return discount.q
    if isinstance(discount, RandomDiscount):
        return discount.a
    raise InvalidSpec(f"unknown discount {discount!r}")


def _rule_bounds(rule, cfg):
    if isinstance(rule, FixedTime):
        return -math.inf, math.inf, int(round(rule.t / cfg.dt)), True
    if isinstance(rule, Interval):
        return rule.lower, rule.upper, cfg.n_steps, False
    if isinstance(rule, (int, float)):
        return -math.inf, float(rule), cfg.n_steps, False
    raise InvalidSpec(f"unknown stopping rule {rule!r}")


def _run(x, drift, vol, rate, cost, rule, cfg, jump_rate=0.0, jump_mean=1.0):
    lower, upper, n_max, fixed = _rule_bounds(rule, cfg)
    k0, k1 = split_seed(cfg.seed)
    n = cfg.n_paths
    out = [np.empty(n) for _ in range(4)] + [np.empty(n, dtype=np.int8)]
    flat = [_constant(f) for f in (drift, vol, rate)]
    ce = _exp_affine(cost)
    if all(v is not None for v in flat) and ce is not None:
        K.constant_kernel(float(x), float(cfg.dt), int(n_max), bool(fixed), float(lower), float(upper),
                          bool(cfg.bridge), float(cfg.kill_fraction), *flat, *ce,
                          float(jump_rate), float(jump_mean), k0, k1, bool(cfg.antithetic), *out)
        return out
    fb, pb = coefficient(drift)
    fs, ps = coefficient(vol)
    fr, pr = coefficient(rate)
    fc, pc = coefficient(cost)
    K.diffusion_kernel(float(x), float(cfg.dt), int(n_max), bool(fixed), float(lower), float(upper),
                       bool(cfg.bridge), float(cfg.kill_fraction), fb, pb, fs, ps, fr, pr, fc, pc,
                       float(jump_rate), float(jump_mean), k0, k1, bool(cfg.antithetic), *out)
    return out


def _finish(g, out, cfg, check=True):
    xs, A, C, t, status = out
    w = np.exp(-(1.0 - cfg.kill_fraction) * A)
    stopped = status == K.STOPPED
    gx = np.zeros_like(xs)
    if stopped.any():
        gx[stopped] = evaluate(g, xs[stopped])
    payoff = np.where(stopped, w * gx, 0.0) - C
    trunc = float(np.sum(w[status == K.CENSORED]) / xs.size)
    if check:
        _check_truncation(trunc)
    return estimate(payoff, cfg, trunc), PathOutcome(xs, A, C, t, status, payoff)


def simulate_payoff(problem: ProblemSpec, rule, cfg: SimConfig, x: float = 0.0, *,
                    check_horizon: bool = True, return_paths: bool = False):
    """Estimate E_x[e^{-A_T} g(X_T) - C_T] for the stopping rule ``rule``.

    ``rule`` is an ``Interval`` (thresholds are ``Interval(-inf, u)``), a
    ``FixedTime`` or a bare number meaning an upper threshold. Paths are
    Euler-Maruyama with crossing points found by linear interpolation.
    """
    d = problem.diffusion
    out = _run(x, d.drift, d.volatility, _rate_fn(problem.discount), problem.cost, rule, cfg)
    est, paths = _finish(problem.reward, out, cfg, check_horizon)
    return (est, paths) if return_paths else est


def _levy_parts(spec: LevySpec):
    j = spec.jumps
    if j is None:
        return 0.0, 1.0
    if isinstance(j, CompoundPoissonExp):
        return j.rate, j.mean_jump
    raise UnsupportedFamily(f"cannot simulate jumps of type {type(j).__name__}")


def simulate_levy_payoff(spec: LevySpec, g, q: float, rule, cfg: SimConfig, x: float = 0.0, cost=None, *,
                         check_horizon: bool = True, return_paths: bool = False):
    """Same as ``simulate_payoff`` for a Lévy process discounted at rate q."""
    lam, mean = _levy_parts(spec)
    out = _run(x, float(spec.drift), math.sqrt(spec.sigma2), float(q), cost, rule, cfg, lam, mean)
    est, paths = _finish(g, out, cfg, check_horizon)
    return (est, paths) if return_paths else est


def hitting_laplace_mc(problem_or_spec, x, y, q, cfg: SimConfig) -> Estimate:
    """E_x[exp(-q T_y)] for the upward passage time, by simulation."""
    one = _Const(1.0)
    if isinstance(problem_or_spec, LevySpec):
        return simulate_levy_payoff(problem_or_spec, one, q, Interval(-math.inf, y), cfg, x)
    d = problem_or_spec.diffusion if isinstance(problem_or_spec, ProblemSpec) else problem_or_spec
    return simulate_payoff(ProblemSpec(d, one, None, ConstantRate(q)), Interval(-math.inf, y), cfg, x)


class _Const:
    def __init__(self, v):
        self.v = float(v)
        self.exp_affine = (self.v, 0.0, 0.0)

    def __call__(self, x):
        return np.full(np.shape(x), self.v) if np.ndim(x) else self.v


# -- self-similar processes ------------------------------------------------------

# objective kinds for simulate_ssmp_payoff
SSMP_KINDS = ("X", "U", "U_delta", "S", "X_nonhom")


@dataclass(frozen=True)
class SsmpOutcome:
    z: np.ndarray
    s: np.ndarray
    tau: np.ndarray
    status: np.ndarray


def _lamperti(spec: SsmpSpec, x, a, cfg, clock, chi, moving, t_fix=math.inf):
    if not x > 0:
        raise InvalidSpec("self-similar processes start from x > 0")
    lam, mean = _levy_parts(spec.levy)
    k0, k1 = split_seed(cfg.seed)
    n = cfg.n_paths
    out = [np.empty(n) for _ in range(3)] + [np.empty(n, dtype=np.int8)]
    log_a = math.log(a) if a < math.inf else math.inf
    max_steps = 50 * cfg.n_steps
    K.lamperti_kernel(math.log(x), float(cfg.dt), float(cfg.horizon), int(clock), float(spec.alpha), float(chi),
                      float(log_a), bool(moving), float(t_fix), math.sqrt(spec.levy.sigma2),
                      float(spec.levy.drift), float(lam), float(mean), k0, k1, bool(cfg.antithetic),
                      int(max_steps), bool(cfg.bridge), *out)
    return SsmpOutcome(*out)


def simulate_ssmp_payoff(spec: SsmpSpec, g, q: float, a: float, cfg: SimConfig, x: float, *,
                         kind: str = "X", beta: float | None = None, check_horizon: bool = True,
                         return_paths: bool = False):
    """Payoff of stopping at the first passage of ``a`` for the self-similar problems.

    kind  objective (Z is the Lévy process, X its Lamperti image, U the OU transform)
    X         E[e^{-q T} g(X_T)],           T = inf{t: X_t >= a}
    U         E[e^{-q T} g(U_T)],           T = inf{t: U_t >= a}
    U_delta   E[e^{-q D_T} g(U_T)],         D_t = int_0^t U_s^{-alpha} ds
    S         E[e^{-q T} g(e^{alpha Z_T}/(1 + beta int_0^T e^{alpha Z_s} ds))],
              stopping when that ratio reaches a**alpha
    X_nonhom  E[(1 + chi T)^{-q} g(X_T (1 + chi T)^{-1/alpha})]
    The OU speed is ``spec.chi``; ``beta`` replaces it for kind S. The
    horizon is read on the X clock for X, the U clock for U and X_nonhom,
    and the Lévy clock for U_delta and S.
    """
    if kind not in SSMP_KINDS:
        raise InvalidSpec(f"unknown kind {kind!r}")
    chi = spec.chi
    if kind == "S":
        if beta is None or not beta > 0:
            raise InvalidSpec("kind S needs beta > 0")
        chi = beta
    # X_nonhom stops at T^U in X-time, so it steps (and is censored) on the U clock
    clock = {"X": K.CLOCK_X, "U": K.CLOCK_U, "U_delta": K.CLOCK_Z, "S": K.CLOCK_Z,
             "X_nonhom": K.CLOCK_U}[kind]
    moving = kind != "X"
    o = _lamperti(spec, x, a, cfg, clock, chi, moving)
    alpha = spec.alpha
    if kind == "X":
        disc = np.exp(-q * o.tau)
        state = np.exp(o.z)
    elif kind == "U":
        disc = (1.0 + chi * o.tau) ** (-q / chi)
        state = np.exp(o.z) * (1.0 + chi * o.tau) ** (-1.0 / alpha)
    elif kind == "X_nonhom":
        disc = (1.0 + chi * o.tau) ** (-q)
        state = np.exp(o.z) * (1.0 + chi * o.tau) ** (-1.0 / alpha)
    else:
        disc = np.exp(-q * o.s)
        state = np.exp(o.z) * (1.0 + chi * o.tau) ** (-1.0 / alpha)
        if kind == "S":
            state = state ** alpha
    stopped = o.status == K.STOPPED
    gx = np.zeros_like(state)
    if stopped.any():
        gx[stopped] = evaluate(g, state[stopped])
    payoff = np.where(stopped, disc * gx, 0.0)
    trunc = float(np.sum(disc[o.status == K.CENSORED]) / payoff.size)
    if check_horizon:
        _check_truncation(trunc)
    est = estimate(payoff, cfg, trunc)
    return (est, o) if return_paths else est


def ssmp_passage(spec: SsmpSpec, x, a, cfg: SimConfig, *, ou: bool = False) -> SsmpOutcome:
    """Raw first-passage output: X above ``a``, or (ou=True) X above a(1 + chi t)^{1/alpha}."""
    return _lamperti(spec, x, a, cfg, K.CLOCK_U if ou else K.CLOCK_X, spec.chi, ou)


# -- path ensembles -------------------------------------------------------------

@dataclass(frozen=True)
class PathEnsemble:
    t: np.ndarray
    paths: np.ndarray
    seed: int


def simulate_levy(spec: LevySpec, cfg: SimConfig, x: float = 0.0, n_out: int | None = None) -> PathEnsemble:
    """Lévy paths on the time grid k*dt (optionally thinned to ``n_out`` times)."""
    lam, mean = _levy_parts(spec)
    n_steps = cfg.n_steps
    k0, k1 = split_seed(cfg.seed)
    keep = np.arange(n_steps + 1) if n_out is None else np.unique(np.linspace(0, n_steps, n_out).round().astype(int))
    out = np.empty((cfg.n_paths, keep.size))
    K.levy_grid_kernel(float(x), float(cfg.dt), float(spec.drift), math.sqrt(spec.sigma2), float(lam), float(mean),
                       k0, k1, bool(cfg.antithetic), keep, out)
    return PathEnsemble(keep * cfg.dt, out, int(cfg.seed))


def simulate_ssmp(spec: SsmpSpec, cfg: SimConfig, x: float = 1.0, times=None) -> PathEnsemble:
    """X = exp(Z_{A_t}) sampled at ``times`` (default: 101 points on [0, horizon]).

    Near X = 0 each Euler step advances the X clock by only about X^alpha,
    so a path that lingers there can exhaust the step budget (50 steps per
    ``dt`` of X-time); its remaining cells are NaN.
    """
    times = np.linspace(0.0, cfg.horizon, 101) if times is None else np.asarray(times, dtype=float)
    return PathEnsemble(times, _ssmp_grid(spec, cfg, x, times), int(cfg.seed))


def _ssmp_grid(spec, cfg, x, taus):
    if not x > 0:
        raise InvalidSpec("self-similar processes start from x > 0")
    lam, mean = _levy_parts(spec.levy)
    k0, k1 = split_seed(cfg.seed)
    out = np.empty((cfg.n_paths, taus.size))
    max_steps = 50 * int(math.ceil(float(taus[-1]) / cfg.dt)) + 1000
    K.lamperti_grid_kernel(math.log(x), float(cfg.dt), float(spec.alpha), math.sqrt(spec.levy.sigma2),
                           float(spec.levy.drift), float(lam), float(mean), k0, k1, bool(cfg.antithetic),
                           np.ascontiguousarray(taus), int(max_steps), out)
    return out


def simulate_ou(spec: SsmpSpec, cfg: SimConfig, x: float = 1.0, times=None) -> PathEnsemble:
    """U_t = e^{-lam t} X_{(e^{chi t} - 1)/chi}, on the U-time grid ``times`` (NaN as in simulate_ssmp)."""
    times = np.linspace(0.0, cfg.horizon, 101) if times is None else np.asarray(times, dtype=float)
    chi = spec.chi
    taus = np.expm1(chi * times) / chi
    xs = _ssmp_grid(spec, cfg, x, taus)
    return PathEnsemble(times, xs * np.exp(-spec.lam * times), int(cfg.seed))
