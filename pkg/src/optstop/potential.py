"""The observation-cost potential delta(x) = E_x[int_0^inf c(X_s) e^{-q s} ds].

With the Green function ``u(x, y) = h+(x ^ y) h-(x v y) / w``,

    delta(x) = (h-(x) P(x) + h+(x) Q(x)) / w,
    P(x) = int_l^x h+ c dm,   Q(x) = int_x^r h- c dm.

P and Q are built once as cumulative sums of Gauss-Legendre panel integrals
over the sturm grid, all in log space. Infinite ends get a geometric tail
continued from the outermost decade of panels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import NotIntegrable
from .model import evaluate

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_LOG_GL_W = np.log(_GL_W)
TAIL_PANELS = 10
TAIL_RTOL = 1e-9


def _logsumexp(a, axis=-1):
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.log(np.sum(np.exp(a - safe), axis=axis, keepdims=True)) + safe
    return np.squeeze(np.where(np.isfinite(m), s, m), axis=axis)


def _log_cost_density(pair, scale_speed, c, y):
    with np.errstate(divide="ignore"):
        lc = np.log(evaluate(c, y))
    return lc + scale_speed.log_m(y)


def _panel_logs(pair, scale_speed, c, a, b):
    """log int_a^b h+ c dm and log int_a^b h- c dm for arrays of panels."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    y = (0.5 * (a + b))[..., None] + half[..., None] * _GL_X
    base = _log_cost_density(pair, scale_speed, c, y) + _LOG_GL_W
    with np.errstate(divide="ignore"):
        lhalf = np.log(half)
    lp = _logsumexp(base + pair.log_h_plus(y)) + lhalf
    lq = _logsumexp(base + pair.log_h_minus(y)) + lhalf
    return lp, lq


def _tail(logs):
    """Geometric continuation beyond logs[0] (logs ordered outward-last)."""
    ell = np.asarray(logs, dtype=float)
    if not np.all(np.isfinite(ell)):
        if np.all(ell == -np.inf):
            return -np.inf, math.inf
        return -np.inf, -math.inf   # partly empty panels: no reliable rate
    j = np.arange(ell.size)
    slope = np.polyfit(j, ell, 1)[0]          # growth per panel moving inward
    if slope <= 0:
        return math.nan, slope
    rho = math.exp(-slope)
    return ell[0] + math.log(rho / (1.0 - rho)), slope


@dataclass(frozen=True)
class IntegrabilityReport:
    finite: bool
    integral: float
    tail_left: float
    tail_right: float
    tail_error: float
    decay_left: float
    decay_right: float
    message: str = ""

    def __bool__(self):
        return self.finite


def _sweep(pair, scale_speed, c):
    g = pair.grid
    lp, lq = _panel_logs(pair, scale_speed, c, g[:-1], g[1:])
    interval = getattr(getattr(scale_speed, "diffusion", None), "interval", None)
    inf_lo = interval is None or not math.isfinite(interval.lower)
    inf_hi = interval is None or not math.isfinite(interval.upper)
    k = TAIL_PANELS
    diag = {}
    for side, logs, infinite in (("left", lp, inf_lo), ("right", lq[::-1], inf_hi)):
        if not infinite:
            diag[side] = (-np.inf, math.inf, 0.0, "")
            continue
        t1, r1 = _tail(logs[:k])
        t2, r2 = _tail(logs[k:2 * k])
        if math.isnan(t1) or math.isnan(t2):
            diag[side] = (math.nan, min(r1, r2), math.inf, f"{side} tail does not decay")
            continue
        if t2 > -np.inf:
            # continue the inner fit out to the grid end, then past it
            t2 = t2 - k * r2
        err = abs(math.exp(t1) - math.exp(t2)) if t1 > -np.inf or t2 > -np.inf else 0.0
        diag[side] = (t1, r1, err, "")
    return lp, lq, diag


def check_integrability(pair, scale_speed, c) -> IntegrabilityReport:
    """Decide whether int h-(x v y) h+(x ^ y) c(y) m(dy) is finite.

    Finite means: the tails at infinite ends decay geometrically, and the two
    tail extrapolations (outermost decade, next decade) agree to within
    ``TAIL_RTOL`` of the bulk integral.
    """
    if c is None:
        return IntegrabilityReport(True, 0.0, 0.0, 0.0, 0.0, math.inf, math.inf)
    lp, lq, diag = _sweep(pair, scale_speed, c)
    i0 = int(np.searchsorted(pair.grid, pair.x0))
    # bulk integral at the normalisation point, where h+ = h- = 1
    bulk = float(np.exp(_logsumexp(lp[:i0])) + np.exp(_logsumexp(lq[i0:])))
    tl, rl, el, ml = diag["left"]
    tr, rr, er, mr = diag["right"]
    msgs = [m for m in (ml, mr) if m]
    finite = not msgs and math.isfinite(bulk)
    if finite and el + er > TAIL_RTOL * bulk:
        finite = False
        msgs.append(f"tail extrapolations disagree by {el + er:.3g} (bulk {bulk:.3g})")
    return IntegrabilityReport(
        finite=finite,
        integral=bulk + (math.exp(tl) if tl == tl else 0) + (math.exp(tr) if tr == tr else 0),
        tail_left=math.exp(tl) if tl == tl else math.nan,
        tail_right=math.exp(tr) if tr == tr else math.nan,
        tail_error=el + er,
        decay_left=rl,
        decay_right=rr,
        message="; ".join(msgs),
    )


@dataclass(frozen=True, eq=False)
class CostPotential:
    """delta on the sturm grid plus exact evaluation anywhere inside it."""
    pair: object = field(repr=False)
    scale_speed: object = field(repr=False)
    cost: object = field(repr=False)
    log_P: np.ndarray = field(repr=False)
    log_Q: np.ndarray = field(repr=False)
    wronskian: float = 1.0
    finite: bool = True
    tail_bounds: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.pair.grid

    @property
    def delta(self):
        return self(self.grid)

    def _logs(self, x):
        x = np.asarray(x, dtype=float)
        g = self.grid
        k = np.clip(np.searchsorted(g, x, side="right") - 1, 0, g.size - 2)
        lpa, _ = _panel_logs(self.pair, self.scale_speed, self.cost, g[k], x)
        _, lqb = _panel_logs(self.pair, self.scale_speed, self.cost, x, g[k + 1])
        return np.logaddexp(self.log_P[k], lpa), np.logaddexp(self.log_Q[k + 1], lqb)

    def __call__(self, x):
        lP, lQ = self._logs(x)
        out = (np.exp(self.pair.log_h_minus(x) + lP) + np.exp(self.pair.log_h_plus(x) + lQ)) / self.wronskian
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, x):
        lP, lQ = self._logs(x)
        out = (self.pair.dlog_h_minus(x) * np.exp(self.pair.log_h_minus(x) + lP)
               + self.pair.dlog_h_plus(x) * np.exp(self.pair.log_h_plus(x) + lQ)) / self.wronskian
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ClosedFormPotential:
    fn: object
    dfn: object = None

    def __call__(self, x):
        out = self.fn(x)
        return float(out) if np.ndim(out) == 0 else np.asarray(out, dtype=float)

    def derivative(self, x):
        if self.dfn is None:
            h = 1e-6 * (1 + np.abs(x))
            return (self(x + h) - self(x - h)) / (2 * h)
        out = self.dfn(x)
        return float(out) if np.ndim(out) == 0 else np.asarray(out, dtype=float)


def zero_potential() -> ClosedFormPotential:
    return ClosedFormPotential(lambda x: np.zeros(np.shape(x)), lambda x: np.zeros(np.shape(x)))


def delta(pair, scale_speed=None, c=None):
    """Cost potential of ``c`` for the process behind ``pair``.

    Raises ``NotIntegrable`` when ``check_integrability`` fails.
    """
    if c is None:
        return zero_potential()
    ss = pair.scale if scale_speed is None else scale_speed
    report = check_integrability(pair, ss, c)
    if not report.finite:
        raise NotIntegrable(report.message or "cost potential is infinite")
    lp, lq, diag = _sweep(pair, ss, c)
    tl = diag["left"][0]
    tr = diag["right"][0]
    log_P = np.logaddexp.accumulate(np.concatenate([[tl], lp]))
    log_Q = np.logaddexp.accumulate(np.concatenate([[tr], lq[::-1]]))[::-1]
    from .sturm import _wronskian_for
    return CostPotential(
        pair, ss, c, log_P, log_Q, _wronskian_for(pair, ss), True,
        {"left": report.tail_left, "right": report.tail_right, "error": report.tail_error},
    )


def delta_by_green(pair, scale_speed, c, x, epsabs=0.0, epsrel=1e-12):
    """delta(x) as a direct adaptive quadrature of u^q(x, y) c(y) m(y) over the grid range.

    Independent of the cumulative sweep; no tail continuation is added.
    """
    from .sturm import green

    ss = pair.scale if scale_speed is None else scale_speed

    def f(y):
        return green(pair, ss, x, y) * float(evaluate(c, y)) * float(ss.m_density(y))

    lo, hi = pair.grid[0], pair.grid[-1]
    total = 0.0
    for a, b in ((lo, x), (x, hi)):
        if b > a:
            val, _ = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=500)
            total += val
    return total


def residual(pot, diffusion, q, c, x, eps=1e-4):
    """(1/2 sigma^2 delta'' + b delta' - q delta + c) / (1 + q delta)."""
    x = np.asarray(x, dtype=float)
    d2 = (pot.derivative(x + eps) - pot.derivative(x - eps)) / (2 * eps)
    sig = diffusion.sigma(x)
    d = pot(x)
    return (0.5 * sig * sig * d2 + diffusion.b(x) * pot.derivative(x) - q * d + evaluate(c, x)) / (1 + q * d)
