"""Scale, speed and the fundamental solutions of ``(1/2) sigma^2 h'' + b h' = q h``.

The increasing solution is built from its logarithmic derivative
``v = h'/h``, which obeys the Riccati equation

    v' = 2 (q - b v) / sigma^2 - v^2.

Integrating forward from the left end of the working interval is stable for
the increasing solution (the recessive one at the left), and backward from the
right end for the decreasing one. The starting value is the matching root of
the frozen-coefficient characteristic equation, so for constant coefficients
the start is exact and elsewhere the startup error decays geometrically as
the integration moves inwards. ``log h`` is carried as a second state, which
keeps everything in log space: ``h`` itself is never formed during the solve.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, IntegrationBlowup, NonMonotone, OutOfGrid, QuadratureFailure
from .model import DEFAULT_HALF_WIDTH, DiffusionSpec

GRID_POINTS = 4096
RTOL = 1e-12
ATOL = 1e-14
_METHODS = ("DOP853", "LSODA", "Radau")


def _solve(rhs, span, y0, rtol, atol):
    last = None
    for method in _METHODS:
        with np.errstate(all="ignore"):
            sol = solve_ivp(rhs, span, y0, method=method, rtol=rtol, atol=atol, dense_output=True)
        if sol.success and np.all(np.isfinite(sol.y[:, -1])):
            return sol.sol
        last = sol.message
    return last


def _check_range(grid, x):
    x = np.asarray(x, dtype=float)
    slack = 1e-12 * (grid[-1] - grid[0])
    if np.any(x < grid[0] - slack) or np.any(x > grid[-1] + slack):
        raise OutOfGrid(f"point(s) outside [{grid[0]:g}, {grid[-1]:g}]")
    return np.clip(x, grid[0], grid[-1])


@dataclass(frozen=True, eq=False)
class ScaleSpeed:
    """Scale derivative, scale function and speed density, anchored at ``x0``.

    ``s'(x) = exp(-2 int_{x0}^x b/sigma^2)`` so ``s'(x0) = 1`` and ``s(x0) = 0``;
    the speed density is ``m = 2 / (sigma^2 s')``.
    """
    diffusion: DiffusionSpec
    x0: float
    grid: np.ndarray
    _left: object = field(repr=False)
    _right: object = field(repr=False)

    def _state(self, x):
        x = _check_range(self.grid, x)
        flat = np.ravel(x).astype(float)
        out = np.empty((2, flat.size))
        lm = flat < self.x0
        if lm.any():
            out[:, lm] = self._left(flat[lm])
        if (~lm).any():
            out[:, ~lm] = self._right(flat[~lm])
        return out.reshape((2,) + np.shape(x))

    def log_s_prime(self, x):
        return self._state(x)[0]

    def s_prime(self, x):
        return np.exp(self.log_s_prime(x))

    def s(self, x):
        return self._state(x)[1]

    def log_m(self, x):
        sig = self.diffusion.sigma(x)
        return math.log(2.0) - 2.0 * np.log(np.abs(sig)) - self.log_s_prime(x)

    def m_density(self, x):
        return np.exp(self.log_m(x))


def scale(diffusion: DiffusionSpec, x0: float = 0.0, *, half_width: float = DEFAULT_HALF_WIDTH,
          n: int = GRID_POINTS, rtol: float = RTOL, bounds=None) -> ScaleSpeed:
    """Scale function anchored at ``x0`` by adaptive integration of s'."""
    lo, hi = bounds if bounds is not None else diffusion.interval.truncated(x0, half_width)
    b, sig = diffusion.drift, diffusion.volatility

    def rhs(x, st):
        sg = float(sig(x))
        return [-2.0 * float(b(x)) / (sg * sg), math.exp(st[0])]

    parts = []
    for end in (lo, hi):
        if end == x0:
            parts.append(lambda z: np.zeros((2, np.size(z))))
            continue
        try:
            sol = _solve(rhs, (x0, end), [0.0, 0.0], rtol, ATOL)
        except OverflowError:
            raise IntegrationBlowup(f"scale function overflows between {x0:g} and {end:g}; "
                                    "narrow the working interval") from None
        if isinstance(sol, str) or sol is None:
            raise QuadratureFailure(f"scale integral failed towards {end:g}: {sol}")
        parts.append(sol)
    return ScaleSpeed(diffusion, x0, np.linspace(lo, hi, n), parts[0], parts[1])


def _frozen_roots(b, sig2, q):
    # roots of sig2 v^2 / 2 + b v - q = 0, computed without cancellation
    disc = math.sqrt(b * b + 2.0 * q * sig2)
    if b >= 0:
        vm = -(b + disc) / sig2
        vp = -2.0 * q / (sig2 * vm)
    else:
        vp = (disc - b) / sig2
        vm = -2.0 * q / (sig2 * vp)
    return vp, vm


@dataclass(frozen=True, eq=False)
class _Branch:
    sol: object
    shift: float      # subtracted from the integrated log h
    lo: float
    hi: float

    def __call__(self, x):
        st = self.sol(np.ravel(x))
        return st[0].reshape(np.shape(x)), (st[1] - self.shift).reshape(np.shape(x))


@dataclass(frozen=True, eq=False)
class FundamentalPair:
    """Increasing/decreasing solutions of L h = q h, normalised to 1 at ``x0``.

    Values are stored as logarithms. ``wronskian`` is
    ``(h- h+' - h+ h-') / s'`` with the scale anchored at ``x0``.
    """
    q: float
    x0: float
    grid: np.ndarray
    wronskian: float
    scale: ScaleSpeed = field(repr=False)
    _plus: _Branch = field(repr=False)
    _minus: _Branch = field(repr=False)
    log_c_plus: float = 0.0
    log_c_minus: float = 0.0

    # increasing solution
    def log_h_plus(self, x):
        return self._plus(_check_range(self.grid, x))[1] + self.log_c_plus

    def dlog_h_plus(self, x):
        return self._plus(_check_range(self.grid, x))[0]

    def h_plus(self, x):
        return np.exp(self.log_h_plus(x))

    # decreasing solution
    def log_h_minus(self, x):
        return self._minus(_check_range(self.grid, x))[1] + self.log_c_minus

    def dlog_h_minus(self, x):
        return self._minus(_check_range(self.grid, x))[0]

    def h_minus(self, x):
        return np.exp(self.log_h_minus(x))

    def wronskian_at(self, x):
        """Wronskian recomputed locally from the stored solutions."""
        lw = self.log_h_plus(x) + self.log_h_minus(x) - self.scale.log_s_prime(x)
        return np.exp(lw) * (self.dlog_h_plus(x) - self.dlog_h_minus(x))

    def rescaled(self, plus: float = 1.0, minus: float = 1.0) -> "FundamentalPair":
        return replace(
            self,
            log_c_plus=self.log_c_plus + math.log(plus),
            log_c_minus=self.log_c_minus + math.log(minus),
            wronskian=self.wronskian * plus * minus,
        )


def fundamental_solutions(diffusion: DiffusionSpec, q: float, x0: float = 0.0, *,
                          half_width: float = DEFAULT_HALF_WIDTH, n: int = GRID_POINTS,
                          rtol: float = RTOL, bounds=None, left_bc: str = "minimal",
                          right_bc: str = "minimal") -> FundamentalPair:
    """Tabulate h_q^+ and h_q^- on the working interval.

    Parameters
    ----------
    diffusion : DiffusionSpec
    q : float
        Killing rate, must be positive.
    x0 : float
        Normalisation point: h+(x0) = h-(x0) = 1, s'(x0) = 1.
    bounds : (float, float), optional
        Working interval; defaults to the truncation of the state interval.
    left_bc, right_bc : {"minimal", "reflecting"}
        Start the Riccati integration at the frozen-coefficient root
        ("minimal") or with zero slope ("reflecting"). Only "minimal" is
        validated against closed forms.
    """
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")
    lo, hi = bounds if bounds is not None else diffusion.interval.truncated(x0, half_width)
    if not lo < x0 < hi:
        raise OutOfGrid(f"x0={x0} outside the working interval ({lo}, {hi})")
    b, sig = diffusion.drift, diffusion.volatility

    def rhs(x, st):
        sg = float(sig(x))
        s2 = sg * sg
        v = st[0]
        return [2.0 * (q - float(b(x)) * v) / s2 - v * v, v]

    def start(end, bc, plus):
        if bc == "reflecting":
            return 0.0
        if bc != "minimal":
            raise ValueError(f"unknown boundary condition {bc!r}")
        sg = float(sig(end))
        vp, vm = _frozen_roots(float(b(end)), sg * sg, q)
        return vp if plus else vm

    branches = []
    for end, other, bc, plus in ((lo, hi, left_bc, True), (hi, lo, right_bc, False)):
        sol = _solve(rhs, (end, other), [start(end, bc, plus), 0.0], rtol, ATOL)
        if isinstance(sol, str) or sol is None:
            raise IntegrationBlowup(f"Riccati integration failed from {end:g}: {sol}")
        shift = float(sol(x0)[1])
        branches.append(_Branch(sol, shift, lo, hi))
    plus, minus = branches

    grid = np.linspace(lo, hi, n)
    vp, _ = plus(grid)
    vm, _ = minus(grid)
    if not np.all(np.isfinite(vp)) or not np.all(np.isfinite(vm)):
        raise IntegrationBlowup("non-finite log-derivative on the grid")
    if np.any(vp <= 0):
        raise NonMonotone(f"increasing solution loses monotonicity near x={grid[np.argmax(vp <= 0)]:g}")
    if np.any(vm >= 0):
        raise NonMonotone(f"decreasing solution loses monotonicity near x={grid[np.argmax(vm >= 0)]:g}")

    ss = scale(diffusion, x0, n=n, rtol=rtol, bounds=(lo, hi))
    w = float(plus(x0)[0] - minus(x0)[0])
    return FundamentalPair(q, x0, grid, w, ss, plus, minus)


def hitting_laplace(pair, x: float, y: float) -> float:
    """E_x[exp(-q T_y)] from the fundamental solutions."""
    _check_range(pair.grid, [x, y])
    if x <= y:
        return float(np.exp(pair.log_h_plus(x) - pair.log_h_plus(y)))
    return float(np.exp(pair.log_h_minus(x) - pair.log_h_minus(y)))


def _wronskian_for(pair, scale_speed):
    # pair's Wronskian uses s' anchored at pair.x0; convert to scale_speed's anchor
    if scale_speed is None or scale_speed is pair.scale:
        return pair.wronskian
    return pair.wronskian / float(scale_speed.s_prime(pair.x0))


def green(pair, scale_speed, x, y):
    """q-resolvent density u^q(x, y) with respect to the speed measure."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    val = np.exp(pair.log_h_plus(lo) + pair.log_h_minus(hi)) / _wronskian_for(pair, scale_speed)
    return float(val) if val.ndim == 0 else val


def ode_residual(pair, diffusion: DiffusionSpec, x, which: str = "plus", eps: float = 1e-4):
    """Relative residual (L h - q h) / (q h) with h'' from central differences of h'.

    ``h' = h v`` is read off the dense output; only the second derivative is
    differenced, with one Richardson step so the check is fourth order in eps.
    """
    x = np.asarray(x, dtype=float)
    lh = pair.log_h_plus if which == "plus" else pair.log_h_minus
    dl = pair.dlog_h_plus if which == "plus" else pair.dlog_h_minus

    def dh_over_h(z):
        return np.exp(lh(z) - lh(x)) * dl(z)

    def central(e):
        return (dh_over_h(x + e) - dh_over_h(x - e)) / (2 * e)

    h2 = (4.0 * central(0.5 * eps) - central(eps)) / 3.0
    sig = diffusion.sigma(x)
    lhs = 0.5 * sig * sig * h2 + diffusion.b(x) * dl(x)
    return lhs / pair.q - 1.0


def export_csv(path, pair, potential=None):
    """Write x, h_plus, h_minus, s, m_density (and delta if given) on the grid."""
    g = pair.grid
    cols = {
        "x": g,
        "h_plus": pair.h_plus(g),
        "h_minus": pair.h_minus(g),
        "s": pair.scale.s(g),
        "m_density": pair.scale.m_density(g),
    }
    if potential is not None:
        cols["delta"] = potential(g)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in zip(*cols.values()):
            w.writerow([repr(float(v)) for v in row])
