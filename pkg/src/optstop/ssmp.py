"""Positive self-similar Markov processes of spectrally negative type.

The increasing eigenfunctions come from one power series,

    I(z) = sum_n a_n z^n,        1 / a_n = psi(alpha) psi(2 alpha) ... psi(n alpha),

and its Pochhammer-weighted companion I(q; z) = sum_n (q)_n a_n z^n. First
passage transforms above a level are ratios of these series:

    X:  E_x[exp(-q T_a)]       = I(q x^alpha) / I(q a^alpha)
    U:  E_x[exp(-r T^U_a)]     = I(r/chi; chi x^alpha) / I(r/chi; chi a^alpha)

where U_t = exp(-lam t) X_{(exp(chi t) - 1)/chi} and chi = alpha lam. The
stopping problems are then one-sided ratio problems handed to
``solver.solve_one_sided`` with the matching eigenfunction.

All series are summed in log space. A term count of 10 consecutive terms
below ``tol`` times the running sum ends the sum; more than ``SERIES_CAP``
terms raises ``SeriesDivergence``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy import integrate, special

from . import levy
from .errors import BadOrdering, DomainError, InvalidSpec, SeriesDivergence, SupAtInfinity
from .model import LevySpec, Pochhammer, SsmpSpec, evaluate
from .solver import solve_one_sided
from .specfun import SERIES_CAP, SERIES_RUN, SERIES_TOL

_FIRST_CHUNK = 64


def _run_end(small, run):
    # index of the last term of the first run of `run` consecutive True per row, or -1
    c = np.cumsum(small, axis=1, dtype=np.int64)
    win = c.copy()
    win[:, run:] -= c[:, :-run]
    hit = win >= run
    first = np.argmax(hit, axis=1)
    return np.where(hit.any(axis=1), first, -1)


class PowerSeriesEigenfunction:
    """Coefficients log a_n of I and evaluators for I, I(q; .) and their logs.

    ``psi`` is a vectorised callable; ``alpha`` the self-similarity index and
    ``lam`` the OU speed (only U-quantities depend on it). Coefficients are
    built lazily and cached; every psi(alpha k) must be positive.
    """

    def __init__(self, psi, alpha: float, lam: float = 1.0, spec: SsmpSpec | None = None, *,
                 tol: float = SERIES_TOL, run: int = SERIES_RUN, cap: int = SERIES_CAP):
        if not alpha > 0:
            raise InvalidSpec(f"alpha must be positive, got {alpha}")
        if not lam > 0:
            raise InvalidSpec(f"lam must be positive, got {lam}")
        self.psi = psi
        self.alpha = float(alpha)
        self.lam = float(lam)
        self.spec = spec
        self.tol = tol
        self.run = run
        self.cap = cap
        self._log_psi = np.empty(0)
        self._log_a = np.zeros(1)

    @property
    def chi(self) -> float:
        return self.alpha * self.lam

    # -- construction ----------------------------------------------------------

    @classmethod
    def from_spec(cls, spec: SsmpSpec, **kw) -> "PowerSeriesEigenfunction":
        return cls(partial(levy.psi, spec.levy), spec.alpha, spec.lam, spec, **kw)

    @classmethod
    def bessel(cls, nu: float, lam: float = 1.0, **kw) -> "PowerSeriesEigenfunction":
        """Bessel process of index nu: psi(u) = u^2/2 + nu u, alpha = 2."""
        return cls.from_spec(SsmpSpec(LevySpec(sigma2=1.0, drift=float(nu)), 2.0, lam), **kw)

    @classmethod
    def mittag_leffler(cls, alpha: float, lam: float = 1.0, **kw) -> "PowerSeriesEigenfunction":
        """psi(u) = (u)_alpha = Gamma(u + alpha)/Gamma(u); then 1/a_n = Gamma(alpha(n+1))/Gamma(alpha).

        For alpha in (1, 2) the exponent is a Lévy family and the process can
        be simulated; alpha = 1 gives psi(u) = u, for which only the series
        are available (psi(u)/u stays bounded and I(q; x) diverges at x >= 1).
        """
        if 1 < alpha < 2:
            return cls.pochhammer(alpha, 1.0, lam, **kw)
        if not alpha > 0:
            raise InvalidSpec(f"alpha must be positive, got {alpha}")

        def psi(u):
            u = np.asarray(u, dtype=float)
            return np.exp(special.gammaln(u + alpha) - special.gammaln(u))

        return cls(psi, alpha, lam, **kw)

    @classmethod
    def pochhammer(cls, alpha: float, gamma: float = 1.0, lam: float = 1.0, **kw) -> "PowerSeriesEigenfunction":
        """psi(u) = (u + gamma - 1)_alpha - (gamma - 1)_alpha with self-similarity index alpha."""
        spec = SsmpSpec(LevySpec(sigma2=0.0, drift=0.0, jumps=Pochhammer(alpha, gamma)), alpha, lam)
        return cls.from_spec(spec, **kw)

    def with_tolerance(self, tol: float) -> "PowerSeriesEigenfunction":
        return PowerSeriesEigenfunction(self.psi, self.alpha, self.lam, self.spec,
                                        tol=tol, run=self.run, cap=self.cap)

    # -- coefficients ----------------------------------------------------------

    def _grow(self, n: int):
        have = self._log_psi.size
        if n <= have:
            return
        n = min(max(n, 2 * have, _FIRST_CHUNK), self.cap + 1)
        k = np.arange(have + 1, n + 1, dtype=float)
        vals = np.asarray(self.psi(self.alpha * k), dtype=float)
        bad = ~(vals > 0)
        if bad.any():
            j = int(k[np.argmax(bad)])
            raise InvalidSpec(f"psi(alpha*{j}) = {vals[np.argmax(bad)]:g} is not positive; "
                              "the coefficients need theta < alpha")
        self._log_psi = np.concatenate([self._log_psi, np.log(vals)])
        self._log_a = np.concatenate([[0.0], -np.cumsum(self._log_psi)])

    def log_coeffs(self, n: int) -> np.ndarray:
        """log a_0, ..., log a_{n-1}."""
        self._grow(n)
        return self._log_a[:n].copy()

    def coeffs(self, n: int) -> np.ndarray:
        return np.exp(self.log_coeffs(n))

    # -- series ----------------------------------------------------------------

    def _log_sum(self, extra, z, weight=None):
        """log sum_n exp(log a_n + extra(n) + n log z) [+ log n if weight] for an array z >= 0.

        ``extra`` maps an index array to additional log weights (or is None).
        With ``weight`` the n-th term is multiplied by n (so the result is
        log z I'(z)); then z = 0 gives -inf.
        """
        z = np.asarray(z, dtype=float)
        flat = z.ravel()
        if np.any(flat < 0) or np.any(np.isnan(flat)):
            raise DomainError("series argument must be nonnegative")
        out = np.empty(flat.size)
        zero = flat == 0
        out[zero] = -math.inf if weight else 0.0
        pos = ~zero
        if pos.any():
            out[pos] = self._log_sum_pos(extra, np.log(flat[pos]), weight)
        return out.reshape(z.shape)

    def _log_sum_pos(self, extra, lz, weight):
        n_terms = _FIRST_CHUNK
        log_tol = math.log(self.tol)
        while True:
            self._grow(n_terms)
            n_avail = min(n_terms, self._log_a.size)
            n = np.arange(n_avail)
            logc = self._log_a[:n_avail] if extra is None else self._log_a[:n_avail] + extra(n)
            lt = logc[None, :] + lz[:, None] * n[None, :]
            # the stopping rule always runs on the plain series
            small = lt <= log_tol + np.logaddexp.accumulate(lt, axis=1)
            end = _run_end(small, self.run)
            if np.all(end >= 0):
                break
            if n_avail > self.cap:
                raise SeriesDivergence(f"series did not converge within {self.cap} terms")
            n_terms = 2 * n_avail
        if weight:
            with np.errstate(divide="ignore"):
                lt = lt + np.log(n)[None, :]
        lt = np.where(n[None, :] <= end[:, None], lt, -np.inf)
        m = np.max(lt, axis=1)
        return m + np.log(np.sum(np.exp(lt - m[:, None]), axis=1))

    @staticmethod
    def _poch_extra(q):
        lq = special.gammaln(q)
        return lambda n: special.gammaln(q + n) - lq

    def log_I(self, z):
        out = self._log_sum(None, z)
        return float(out) if out.ndim == 0 else out

    def I(self, z):
        return np.exp(self.log_I(z))

    def log_Iq(self, q: float, z):
        if not q > 0:
            raise DomainError(f"q must be positive, got {q}")
        out = self._log_sum(self._poch_extra(q), z)
        return float(out) if out.ndim == 0 else out

    def Iq(self, q: float, z):
        return np.exp(self.log_Iq(q, z))

    def zdlog(self, z, q: float | None = None):
        """z d/dz log I(z), or of I(q; z) when q is given."""
        extra = None if q is None else self._poch_extra(q)
        num = self._log_sum(extra, z, weight=True)
        den = self._log_sum(extra, z)
        out = np.exp(num - den)
        return float(out) if out.ndim == 0 else out


# -- module-level evaluators -------------------------------------------------------

def eval_I(pse: PowerSeriesEigenfunction, z):
    """I(z) = sum a_n z^n for z >= 0."""
    return pse.I(z)


def eval_Iq(pse: PowerSeriesEigenfunction, q: float, x):
    """I(q; x) = sum (q)_n a_n x^n, with (q)_n = Gamma(q+n)/Gamma(q)."""
    return pse.Iq(q, x)


def eval_Iq_integral(pse: PowerSeriesEigenfunction, q: float, x: float, epsrel: float = 1e-12) -> float:
    """I(q; x) from the gamma-mixture of I: (1/Gamma(q)) int_0^inf I(r x) e^{-r} r^{q-1} dr.

    For q < 1 the substitution t = r^q removes the endpoint singularity.
    """
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if x == 0:
        return 1.0
    if q < 1:
        def f(t):
            r = t ** (1.0 / q)
            return math.exp(pse.log_I(r * x) - r)
        scale = math.gamma(q + 1.0)
        to_var = lambda r: r ** q  # noqa: E731
    else:
        def f(r):
            return math.exp(pse.log_I(r * x) - r + (q - 1.0) * math.log(r)) if r > 0 else (1.0 if q == 1 else 0.0)
        scale = math.gamma(q)
        to_var = lambda r: r  # noqa: E731
    # integrand peaks near the saddle of log I(r x) - r; cut where it is e^-80 of the peak
    r_max = 100.0
    while True:
        rs = np.geomspace(1e-3, r_max, 400)
        logs = pse.log_I(rs * x) - rs + (q - 1.0) * np.log(rs)
        k = int(np.argmax(logs))
        beyond = np.nonzero(logs[k:] < logs[k] - 80.0)[0]
        if beyond.size:
            break
        if r_max > 1e6:
            raise SeriesDivergence("gamma mixture of I does not decay: I(q; x) is infinite here")
        r_max *= 8.0
    r_end = float(rs[k + beyond[0]])
    r_peak = float(rs[k])
    pieces = sorted({0.0, to_var(0.5 * r_peak), to_var(r_peak), to_var(2.0 * r_peak), to_var(r_end)})
    total = 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        v, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=epsrel, limit=200)
        total += v
    return total / scale


def _check_order(x, a):
    if not 0 <= x <= a:
        raise BadOrdering(f"need 0 <= x <= a, got x={x}, a={a}")


def hitting_laplace_X(pse: PowerSeriesEigenfunction, x: float, a: float, q: float) -> float:
    """E_x[exp(-q T_a)] for T_a = inf{t: X_t >= a}."""
    _check_order(x, a)
    if q < 0:
        raise DomainError(f"q must be nonnegative, got {q}")
    if q == 0 or x == a:
        return 1.0
    al = pse.alpha
    return math.exp(pse.log_I(q * x ** al) - pse.log_I(q * a ** al))


def hitting_laplace_U(pse: PowerSeriesEigenfunction, x: float, a: float, r: float) -> float:
    """E_x[exp(-r T^U_a)] for the OU transform U, with the r/chi convention."""
    _check_order(x, a)
    if r < 0:
        raise DomainError(f"r must be nonnegative, got {r}")
    if r == 0 or x == a:
        return 1.0
    chi, al = pse.chi, pse.alpha
    k = r / chi
    return math.exp(pse.log_Iq(k, chi * x ** al) - pse.log_Iq(k, chi * a ** al))


# -- stopping problems ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SeriesPair:
    """h(u) = u^power * J(scale u^alpha) on a grid, in the form the solver expects.

    ``J`` is I (``order=None``) or I(order; .) of ``pse``.
    """
    pse: PowerSeriesEigenfunction = field(repr=False)
    scale: float
    order: float | None
    power: float
    grid: np.ndarray = field(repr=False)

    def log_h_plus(self, u):
        u = np.asarray(u, dtype=float)
        z = self.scale * u ** self.pse.alpha
        s = self.pse.log_I(z) if self.order is None else self.pse.log_Iq(self.order, z)
        if self.power:
            s = s + self.power * np.log(u)
        return s

    def dlog_h_plus(self, u):
        u = np.asarray(u, dtype=float)
        z = self.scale * u ** self.pse.alpha
        return (self.pse.alpha * self.pse.zdlog(z, self.order) + self.power) / u

    def h_plus(self, u):
        return np.exp(self.log_h_plus(u))


def _default_upper(pair_at, x, span=60.0):
    # first u where log h has grown by `span` over its value at x
    base = float(pair_at(x))
    u = max(2.0 * x, x + 1.0)
    for _ in range(200):
        if float(pair_at(u)) - base >= span:
            return u
        u *= 2.0
    raise SeriesDivergence("eigenfunction does not grow; cannot place the grid end")


PROBLEMS = ("V_X", "V_U", "V_X_nonhom", "V_UDelta", "V_Sq")
# simulator kind for each problem
MC_KIND = {"V_X": "X", "V_U": "U", "V_X_nonhom": "X_nonhom", "V_UDelta": "U_delta", "V_Sq": "S"}


@dataclass(frozen=True)
class SsmpSolution:
    """Value and threshold of one self-similar stopping problem.

    ``a_star`` is on the scale of the stopped quantity (X for V_X and the
    nonhomogeneous problem, U otherwise, and S = a_star**alpha for V_Sq).
    """
    name: str
    value: float
    a_star: float
    attained: bool
    D_star: float
    solution: object = field(repr=False, default=None)


def _solve(name, pair_factory, g, x, upper, n):
    if not x > 0:
        raise DomainError(f"self-similar problems start from x > 0, got {x}")
    probe = pair_factory(np.array([x]))
    hi = upper if upper is not None else _default_upper(probe.log_h_plus, x)
    pair = pair_factory(np.linspace(x, hi, n))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SupAtInfinity)
        sol = solve_one_sided(pair, None, g, x)
    for w in caught:
        warnings.warn(f"{name}: {w.message}", w.category)
    v = float(sol.value(x)) if sol.attained else sol.D_star * float(np.exp(pair.log_h_plus(x)))
    return SsmpSolution(name, v, sol.u_star, sol.attained, sol.D_star, sol)


def solve_ssmp_problems(pse: PowerSeriesEigenfunction, g, q: float, beta: float, x: float, *,
                        gamma: float | None = None, upper: float | None = None, n: int = 4096,
                        problems=None) -> dict:
    """The five self-similar problems at start x > 0, keyed V_X, V_U, V_UDelta, V_Sq, V_X_nonhom.

    V_X         sup E_x[e^{-q T} g(X_T)]                       h(u) = I(q u^a)
    V_U         sup E_x[e^{-q T} g(U_T)]                       h(u) = I(q/chi; chi u^a)
    V_UDelta    sup E_x[e^{-q D_T} g(U_T)], D = int U^{-a}      h(u) = u^g I_g(g/a; chi u^a)
    V_Sq        sup E[e^{-q T} g(e^{a Z_T}/(1 + beta int e^{a Z}))]
                = V_UDelta for the reward u -> g(u^a) with chi replaced by beta
    V_X_nonhom  sup E_x[(1 + chi T)^{-q} g(X_T (1 + chi T)^{-1/a})] h(u) = I(q; chi u^a)

    Here a = alpha and I_g is the series of psi_g(u) = psi(u + g) - q with
    g = phi(q), the root that turns e^{g Z - q t} into a martingale. The
    exponent is derived from the Lévy spec; an explicit ``gamma`` must also
    solve psi(gamma) = q. ``problems`` restricts the output to the named keys.
    """
    names = PROBLEMS if problems is None else tuple(problems)
    unknown = set(names) - set(PROBLEMS)
    if unknown:
        raise InvalidSpec(f"unknown self-similar problem(s) {sorted(unknown)}; known: {', '.join(PROBLEMS)}")
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    al, chi = pse.alpha, pse.chi
    out = {}

    def make(scale, order, power, src=pse):
        return lambda grid: SeriesPair(src, scale, order, power, grid)

    if "V_X" in names:
        out["V_X"] = _solve("V_X", make(q, None, 0.0), g, x, upper, n)
    if "V_U" in names:
        out["V_U"] = _solve("V_U", make(chi, q / chi, 0.0), g, x, upper, n)
    if "V_X_nonhom" in names:
        out["V_X_nonhom"] = _solve("V_X_nonhom", make(chi, q, 0.0), g, x, upper, n)
    if "V_UDelta" in names or "V_Sq" in names:
        tilted = esscher(pse, q, gamma)
        gam = tilted.shift
        if "V_UDelta" in names:
            out["V_UDelta"] = _solve("V_UDelta", make(chi, gam / al, gam, tilted), g, x, upper, n)
        if "V_Sq" in names:
            out["V_Sq"] = _solve("V_Sq", make(beta, gam / al, gam, tilted), _PowerReward(g, al), x, upper, n)
    return out


class _PowerReward:
    """u -> g(u^alpha), with a chain-rule derivative when g has one."""

    def __init__(self, g, alpha):
        self.g = g
        self.alpha = alpha
        if getattr(g, "derivative", None) is not None:
            self.derivative = self._derivative

    def __call__(self, u):
        return evaluate(self.g, np.asarray(u, dtype=float) ** self.alpha)

    def _derivative(self, u):
        u = np.asarray(u, dtype=float)
        return evaluate(self.g.derivative, u ** self.alpha) * self.alpha * u ** (self.alpha - 1.0)


def esscher(pse: PowerSeriesEigenfunction, q: float, gamma: float | None = None) -> PowerSeriesEigenfunction:
    """Series of the tilted exponent psi_g(u) = psi(u + g) - q, g = phi(q).

    The tilted series carries ``shift = g``. Needs the Lévy spec unless
    ``gamma`` is supplied (and then psi(gamma) = q is checked).
    """
    if gamma is None:
        if pse.spec is None:
            raise InvalidSpec("the Esscher exponent needs a Lévy spec or an explicit gamma")
        gamma = levy.phi(pse.spec.levy, q)
    resid = float(pse.psi(np.array([gamma]))[0]) - q
    if abs(resid) > 1e-9 * max(1.0, q):
        raise DomainError(f"gamma = {gamma:g} does not solve psi(gamma) = q (residual {resid:g})")
    base = pse.psi

    def psi_g(u):
        return np.asarray(base(np.asarray(u, dtype=float) + gamma), dtype=float) - q

    out = PowerSeriesEigenfunction(psi_g, pse.alpha, pse.lam, tol=pse.tol, run=pse.run, cap=pse.cap)
    out.shift = float(gamma)
    return out
