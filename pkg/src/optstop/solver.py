"""Ratio optimisation for threshold and interval stopping rules.

With a cost potential ``delta`` the costly problem becomes the cost-free one
with reward ``g + delta``, and its value is recovered by subtracting
``delta``. The cost-free problem is solved by maximising

    (g + delta)(u) / h(u)

over the candidate exit points ``u``, where ``h`` is ``h+`` for upward
thresholds and the mixture ``p h+ + (1-p) h-`` (normalised at the start)
for two-sided intervals. All ratios are handled as logarithms.

Any object with ``grid``, ``log_h_plus`` and ``dlog_h_plus`` (and the
``minus`` counterparts for two-sided problems) can serve as the pair.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import NoInteriorSolution, NonSmoothPayoffAtOptimum, OutOfGrid, SupAtInfinity, UnboundedValue
from .model import evaluate
from .potential import zero_potential
from .rules import Interval, Threshold

TAIL_FRACTION = 0.05
P_BOUNDS = (1e-6, 1.0 - 1e-6)
P_MAX_ITER = 200
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_STOP_TOL = 1e-10


def _tol(m):
    return 1e-12 * (1.0 + abs(m))


def _as_potential(delta):
    return zero_potential() if delta is None else delta


def reward_derivative(g, u):
    """g'(u): analytic if the reward exposes ``derivative``, else central differences."""
    d = getattr(g, "derivative", None)
    if d is not None:
        return evaluate(d, u)
    u = np.asarray(u, dtype=float)
    h = 1e-6 * (1.0 + np.abs(u))
    return (evaluate(g, u + h) - evaluate(g, u - h)) / (2.0 * h)


def _log_top(g, delta, u):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(evaluate(g, u) + np.asarray(delta(u), dtype=float))


def _dlog_top(g, delta, u):
    top = evaluate(g, u) + np.asarray(delta(u), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (reward_derivative(g, u) + np.asarray(delta.derivative(u), dtype=float)) / top


def ratio(pair, delta, g, u):
    """(g(u) + delta(u)) / h+(u) with the pair's normalisation."""
    delta = _as_potential(delta)
    lr = _log_top(g, delta, u) - pair.log_h_plus(u)
    out = np.exp(lr)
    return float(out) if np.ndim(out) == 0 else out


# -- one-dimensional maximisation -------------------------------------------------

@dataclass(frozen=True)
class _Sup:
    u: float
    logv: float
    attained: bool


def _golden_max(f, a, b, fa_hint=None):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(200):
        if abs(b - a) <= 1e-12 * max(1.0, abs(a), abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _maximise(f, df, pts, vals, tail_at_end, polish=True):
    """Locate sup of f over the ordered points ``pts`` (values ``vals``).

    ``tail_at_end`` says which end of ``pts`` is the truncation boundary
    (True: last point, False: first point). Returns a ``_Sup``.
    """
    finite = np.isfinite(vals)
    if not finite.any():
        return _Sup(float(pts[0] if tail_at_end else pts[-1]), -math.inf, True)
    m = float(np.max(vals[finite]))
    eps = _tol(m)

    # behaviour at the truncation boundary
    n_t = max(3, int(math.ceil(TAIL_FRACTION * len(pts))))
    t = vals[-n_t:] if tail_at_end else vals[:n_t][::-1]
    if np.all(np.isfinite(t)):
        mid = n_t // 2
        d1, d2 = t[mid] - t[0], t[-1] - t[mid]
        if t[-1] > t[0] + eps:
            if d1 > 0 and d2 >= (1.0 - 1e-3) * d1 and d2 > eps:
                raise UnboundedValue("ratio keeps growing at the truncation boundary")
            if d1 > 0 and d2 > 0:
                rho = d2 / d1
                limit = t[-1] + d2 * rho / (1.0 - rho)
            else:
                limit = t[-1]
            if limit > m + eps:
                return _Sup(math.inf if tail_at_end else -math.inf, float(limit), False)
        if m - t[-1] <= eps and np.max(t) <= t[-1] + eps and t[-1] >= t[0] - eps:
            # flat approach to the boundary: either the first near-maximiser sits
            # in the tail, or the ratio creeps up to its float-saturated limit
            # and never leaves it again
            w = vals if tail_at_end else vals[::-1]
            k = int(np.argmax(w >= m - eps))
            if k >= len(w) - n_t:
                return _Sup(math.inf if tail_at_end else -math.inf, m, False)
            if k > 0 and np.min(w[k:]) >= m - eps:
                step = w[k] - w[k - 1]
                if 0 < step <= 1e3 * eps:
                    return _Sup(math.inf if tail_at_end else -math.inf, m, False)

    # smallest maximiser for upward searches, nearest-to-start for downward ones
    if tail_at_end:
        k = int(np.argmax(vals >= m - eps))
    else:
        k = int(len(vals) - 1 - np.argmax(vals[::-1] >= m - eps))
    best_u, best_v = float(pts[k]), float(vals[k])
    start_end = 0 if tail_at_end else len(pts) - 1
    if k == start_end:
        slope = float(df(best_u))
        if (tail_at_end and slope <= 0) or (not tail_at_end and slope >= 0):
            return _Sup(best_u, best_v, True)
    a = float(pts[max(k - 1, 0)])
    b = float(pts[min(k + 1, len(pts) - 1)])
    u_g, v_g = _golden_max(f, a, b)
    if v_g > best_v:
        best_u, best_v = u_g, v_g
    if polish:
        da, db = float(df(a)), float(df(b))
        if da > 0 > db:
            try:
                u_p = optimize.brentq(df, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
                v_p = float(f(u_p))
                if v_p >= best_v - _tol(best_v):
                    best_u, best_v = u_p, v_p
            except ValueError:
                pass
    return _Sup(best_u, best_v, True)


def _right_points(grid, x):
    if x < grid[0] or x > grid[-1]:
        raise OutOfGrid(f"start {x} outside [{grid[0]:g}, {grid[-1]:g}]")
    return np.concatenate([[x], grid[grid > x]])


def _left_points(grid, x):
    if x < grid[0] or x > grid[-1]:
        raise OutOfGrid(f"start {x} outside [{grid[0]:g}, {grid[-1]:g}]")
    return np.concatenate([grid[grid < x], [x]])


# -- one-sided -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OneSidedSolution:
    """Threshold rule T = inf{t: X_t >= u_star} and its value D* h+(x) - delta(x)."""
    D_star: float
    u_star: float
    attained: bool
    x: float
    log_D: float
    pair: object = field(repr=False)
    delta: object = field(repr=False)
    reward: object = field(repr=False)
    _pts: np.ndarray = field(repr=False, default=None)
    _suffix: np.ndarray = field(repr=False, default=None)

    @property
    def rule(self):
        return Threshold(self.u_star)

    @property
    def thresholds(self):
        return [self.u_star]

    def value(self, y):
        """h+(y) sup_{u >= y} ratio(u) - delta(y)."""
        y = np.asarray(y, dtype=float)
        lr_y = _log_top(self.reward, self.delta, y) - self.pair.log_h_plus(y)
        idx = np.searchsorted(self._pts, y, side="left")
        tail = np.where(idx < self._pts.size, self._suffix[np.minimum(idx, self._pts.size - 1)], -np.inf)
        s = np.maximum(lr_y, tail)
        s = np.where(y <= self.u_star, np.maximum(s, self.log_D), s)
        out = np.exp(s + self.pair.log_h_plus(y)) - np.asarray(self.delta(y), dtype=float)
        return float(out) if out.ndim == 0 else out


def solve_one_sided(pair, delta, g, x: float, *, polish: bool = True) -> OneSidedSolution:
    """Best upward threshold for a start at ``x``.

    Warns ``SupAtInfinity`` (and returns ``attained=False``, ``u_star=inf``)
    when the supremum is only approached at the right end of the grid; raises
    ``UnboundedValue`` when the ratio diverges there.
    """
    delta = _as_potential(delta)
    pts = _right_points(pair.grid, x)

    def f(u):
        return float(_log_top(g, delta, u) - pair.log_h_plus(u))

    def df(u):
        return float(_dlog_top(g, delta, u) - pair.dlog_h_plus(u))

    vals = _log_top(g, delta, pts) - pair.log_h_plus(pts)
    sup = _maximise(f, df, pts, vals, tail_at_end=True, polish=polish)
    if not sup.attained:
        warnings.warn("ratio supremum is approached only at the right end of the grid", SupAtInfinity)
    suffix = np.maximum.accumulate(np.where(np.isfinite(vals), vals, -np.inf)[::-1])[::-1]
    if sup.logv == -math.inf:
        D = 0.0
    else:
        D = math.exp(sup.logv)
    return OneSidedSolution(D, sup.u, sup.attained, x, sup.logv, pair, delta, g, pts, suffix)


# -- two-sided -------------------------------------------------------------------

def _mixture(pair, x, p, u):
    lp = pair.log_h_plus(u) - pair.log_h_plus(x)
    lm = pair.log_h_minus(u) - pair.log_h_minus(x)
    return np.logaddexp(math.log(p) + lp, math.log1p(-p) + lm), lp, lm


def _dlog_mixture(pair, x, p, u):
    lmix, lp, lm = _mixture(pair, x, p, u)
    wp = np.exp(math.log(p) + lp - lmix)
    return wp * pair.dlog_h_plus(u) + (1.0 - wp) * pair.dlog_h_minus(u)


@dataclass(frozen=True, eq=False)
class TwoSidedSolution:
    """Exit rule from (u1_star, u2_star) with value M* h^B(y) - delta(y)."""
    u1_star: float
    u2_star: float
    p_star: float
    M_star: float
    x: float
    pair: object = field(repr=False)
    delta: object = field(repr=False)
    reward: object = field(repr=False)
    smooth_fit: dict = field(default_factory=dict)
    nonsmooth: bool = False
    iterations: int = 0

    @property
    def rule(self):
        return Interval(self.u1_star, self.u2_star)

    @property
    def thresholds(self):
        return [self.u1_star, self.u2_star]

    def value(self, y):
        y = np.asarray(y, dtype=float)
        inside = (y > self.u1_star) & (y < self.u2_star)
        lmix, _, _ = _mixture(self.pair, self.x, self.p_star, y)
        cont = self.M_star * np.exp(lmix) - np.asarray(self.delta(y), dtype=float)
        out = np.where(inside, cont, evaluate(self.reward, y))
        return float(out) if out.ndim == 0 else out


def _has_kink(g, u, h=1e-7):
    gl = (float(evaluate(g, u)) - float(evaluate(g, u - h))) / h
    gr = (float(evaluate(g, u + h)) - float(evaluate(g, u))) / h
    return abs(gl - gr) > 1e-4 * (1.0 + abs(gl) + abs(gr))


def solve_two_sided(pair, delta, g, x: float, *, p_bounds=P_BOUNDS, max_iter: int = P_MAX_ITER) -> TwoSidedSolution:
    """Best exit interval around ``x`` by bisection on the mixture weight p.

    F(p) = sup_{u >= x} G_p - sup_{u <= x} G_p is decreasing in p; its root
    balances the two sides. Raises ``NoInteriorSolution`` when F does not
    change sign or a side has no finite maximiser at the root.
    """
    delta = _as_potential(delta)
    right = _right_points(pair.grid, x)
    left = _left_points(pair.grid, x)
    top_r = _log_top(g, delta, right)
    top_l = _log_top(g, delta, left)
    if not (np.isfinite(top_r).any() and np.isfinite(top_l).any()):
        raise NoInteriorSolution("reward plus potential vanishes on one side of the start")
    lp_r = pair.log_h_plus(right) - pair.log_h_plus(x)
    lm_r = pair.log_h_minus(right) - pair.log_h_minus(x)
    lp_l = pair.log_h_plus(left) - pair.log_h_plus(x)
    lm_l = pair.log_h_minus(left) - pair.log_h_minus(x)

    def sides(p, polish=False):
        lpp, l1p = math.log(p), math.log1p(-p)

        def f(u):
            return float(_log_top(g, delta, u) - _mixture(pair, x, p, u)[0])

        def df(u):
            return float(_dlog_top(g, delta, u) - _dlog_mixture(pair, x, p, u))

        vr = top_r - np.logaddexp(lpp + lp_r, l1p + lm_r)
        vl = top_l - np.logaddexp(lpp + lp_l, l1p + lm_l)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SupAtInfinity)
            sr = _maximise(f, df, right, vr, tail_at_end=True, polish=polish)
            sl = _maximise(f, df, left, vl, tail_at_end=False, polish=polish)
        return sr, sl

    lo, hi = p_bounds
    sr, sl = sides(lo)
    f_lo = sr.logv - sl.logv
    sr, sl = sides(hi)
    f_hi = sr.logv - sl.logv
    if not (f_lo > 0 > f_hi):
        raise NoInteriorSolution(f"F(p) has no sign change on [{lo:g}, {hi:g}] (F = {f_lo:.3g}, {f_hi:.3g})")
    it = 0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        sr, sl = sides(mid)
        fm = sr.logv - sl.logv
        if fm == 0:
            lo = hi = mid
            break
        if fm > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 2e-16:
            break
    p = 0.5 * (lo + hi)
    sr, sl = sides(p, polish=True)
    if not (sr.attained and sl.attained) or not (math.isfinite(sr.u) and math.isfinite(sl.u)):
        raise NoInteriorSolution("one side of the balanced problem has no finite maximiser")
    logM = max(sr.logv, sl.logv)
    u1, u2 = sl.u, sr.u
    kinks = _has_kink(g, u1) or _has_kink(g, u2)
    fit = {}
    if kinks:
        warnings.warn("reward is not differentiable at an optimal boundary", NonSmoothPayoffAtOptimum)
    else:
        for name, u in (("u1", u1), ("u2", u2)):
            fit[name] = float(_dlog_top(g, delta, u) - _dlog_mixture(pair, x, p, u))
    fit["ratio"] = math.expm1(sr.logv - sl.logv)
    return TwoSidedSolution(u1, u2, p, math.exp(logM), x, pair, delta, g, fit, kinks, it)


def solve(pair, delta, g, x: float, mode: str = "auto"):
    """Dispatch to the one- or two-sided solver; ``auto`` falls back to one-sided."""
    if mode == "one_sided":
        return solve_one_sided(pair, delta, g, x)
    if mode == "two_sided":
        return solve_two_sided(pair, delta, g, x)
    if mode != "auto":
        raise ValueError(f"unknown mode {mode!r}")
    if hasattr(pair, "log_h_minus"):
        try:
            return solve_two_sided(pair, delta, g, x)
        except NoInteriorSolution:
            pass
    return solve_one_sided(pair, delta, g, x)


def strangle_residuals(x1, x2, p, *, q, b, gamma, K, L, coeff=1.0):
    """Residuals of the balance and smooth-fit system for the price-space strangle.

    Reward ``(L - e^x)^+ + (e^x - K)^+`` under Brownian motion with drift ``b``,
    cost ``coeff e^{gamma x}`` and rate ``q``; ``x1 > log K`` is the upper and
    ``x2 < log L`` the lower boundary, and ``p`` weights ``e^{alpha1 x}``.
    Each equation is multiplied through by ``kappa = q - gamma b - gamma^2/2``.
    """
    kappa = q - gamma * b - 0.5 * gamma * gamma
    root = math.sqrt(2.0 * q + b * b)
    a1, a2 = -b + root, -b - root

    def mix(x):
        return p * math.exp(a1 * x) + (1 - p) * math.exp(a2 * x)

    def dmix(x):
        return p * a1 * math.exp(a1 * x) + (1 - p) * a2 * math.exp(a2 * x)

    def c(x):
        return coeff * math.exp(gamma * x)

    top1 = kappa * (math.exp(x1) - K) + c(x1)
    top2 = kappa * (L - math.exp(x2)) + c(x2)
    r1 = top1 / mix(x1) - top2 / mix(x2)
    r2 = (-kappa * math.exp(x2) + gamma * c(x2)) / top2 - dmix(x2) / mix(x2)
    r3 = (kappa * math.exp(x1) + gamma * c(x1)) / top1 - dmix(x1) / mix(x1)
    return r1, r2, r3


# -- tabulation ------------------------------------------------------------------

@dataclass(frozen=True)
class ValueTable:
    x: np.ndarray
    value: np.ndarray
    reward: np.ndarray
    delta: np.ndarray
    stop: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value", "reward", "delta", "stop"])
            for row in zip(self.x, self.value, self.reward, self.delta, self.stop):
                w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])),
                            repr(float(row[3])), int(row[4])])


def value_table(solution, grid) -> ValueTable:
    grid = np.asarray(grid, dtype=float)
    v = np.asarray(solution.value(grid), dtype=float)
    g = evaluate(solution.reward, grid)
    d = np.asarray(solution.delta(grid), dtype=float)
    stop = v <= g + _STOP_TOL * (1.0 + np.abs(g))
    return ValueTable(grid, v, g, d, stop)
