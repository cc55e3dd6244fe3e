"""Spectrally negative Lévy analytics.

Laplace exponent ``psi``, its right inverse ``phi`` on ``[theta, inf)``,
upward hitting transforms and the perpetual call with an exponential
observation cost, whose value is available in closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (
    BadOrdering,
    DomainError,
    InvalidSpec,
    NonPositiveRate,
    NotIntegrable,
    PGammaNonPositive,
    StartAboveThreshold,
)
from .model import CompoundPoissonExp, LevySpec, Pochhammer
from .rules import Threshold

_REL = 1e-14


def psi(spec: LevySpec, u):
    """Laplace exponent log E[e^{u Z_1}] for u >= 0 (vectorised)."""
    u = np.asarray(u, dtype=float)
    out = 0.5 * spec.sigma2 * u * u + spec.drift * u
    j = spec.jumps
    if isinstance(j, CompoundPoissonExp):
        mu = 1.0 / j.mean_jump
        out = out - j.rate * u / (mu + u)
    elif isinstance(j, Pochhammer):
        s0 = j.gamma - 1.0
        out = out + special.poch(u + s0, j.alpha) - special.poch(s0, j.alpha)
    return float(out) if out.ndim == 0 else out


def _dpoch(s, a):
    # d/ds Γ(s+a)/Γ(s); at s = -n the reciprocal gamma has slope (-1)^n n!
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    near = np.abs(s - np.round(s)) < 1e-9
    pole = near & (np.round(s) <= 0)
    n = -np.round(s[pole])
    out[pole] = special.gamma(s[pole] + a) * (-1.0) ** n * special.factorial(n)
    ok = ~pole
    so = s[ok]
    out[ok] = special.poch(so, a) * (special.digamma(so + a) - special.digamma(so))
    return out


def psi_prime(spec: LevySpec, u):
    u = np.asarray(u, dtype=float)
    out = spec.sigma2 * u + spec.drift
    j = spec.jumps
    if isinstance(j, CompoundPoissonExp):
        mu = 1.0 / j.mean_jump
        out = out - j.rate * mu / (mu + u) ** 2
    elif isinstance(j, Pochhammer):
        out = out + _dpoch(u + j.gamma - 1.0, j.alpha)
    return float(out) if out.ndim == 0 else out


def _upper_bracket(spec, level):
    hi = 1.0
    while psi(spec, hi) <= level:
        hi *= 2.0
        if hi > 1e300:
            raise InvalidSpec("Laplace exponent does not grow")
    return hi


def theta(spec: LevySpec) -> float:
    """Largest root of psi (0 when psi is positive on (0, inf))."""
    hi = _upper_bracket(spec, 0.0)
    u = np.linspace(0.0, hi, 2001)[1:]
    vals = psi(spec, u)
    neg = np.nonzero(vals <= 0)[0]
    if neg.size == 0:
        lo_probe = hi * 1e-6
        if psi(spec, lo_probe) > 0:
            return 0.0
        a, b = 0.0, float(u[0])
    else:
        k = neg[-1]
        a, b = float(u[k]), float(u[k + 1])
    for _ in range(200):
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        if psi(spec, m) <= 0:
            a = m
        else:
            b = m
    return b


def phi(spec: LevySpec, r: float, th: float | None = None) -> float:
    """Right inverse of psi: the u >= theta with psi(u) = r."""
    if r < 0:
        raise DomainError(f"phi needs r >= 0, got {r}")
    th = theta(spec) if th is None else th
    if r == 0:
        return th
    lo, hi = th, _upper_bracket(spec, r)
    u = hi
    for _ in range(200):
        f = psi(spec, u) - r
        if f > 0:
            hi = min(hi, u)
        else:
            lo = max(lo, u)
        if abs(f) <= _REL * r or hi - lo <= 4e-16 * hi:
            break
        d = psi_prime(spec, u)
        nxt = u - f / d if d > 0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        u = nxt
    return u


@dataclass(frozen=True)
class LaplaceExponent:
    spec: LevySpec
    theta: float

    def psi(self, u):
        return psi(self.spec, u)

    def phi(self, r):
        return phi(self.spec, r, self.theta)


def laplace_exponent(spec: LevySpec) -> LaplaceExponent:
    return LaplaceExponent(spec, theta(spec))


def martingale_rate(spec: LevySpec) -> float:
    """The rate q = psi(1) that makes e^{-qt + Z_t} a martingale."""
    q = psi(spec, 1.0)
    if not q > 0:
        raise NonPositiveRate(f"psi(1) = {q:g} is not positive")
    return q


def hitting_laplace_up(spec: LevySpec, x: float, y: float, r: float) -> float:
    """E_x[exp(-r T_y)] for y >= x; upward passage is continuous."""
    if y < x:
        raise BadOrdering(f"upward passage needs y >= x, got x={x}, y={y}")
    return math.exp(-phi(spec, r) * (y - x))


@dataclass(frozen=True)
class ExponentialPair:
    """Increasing eigenfunction exp(rate (x - x0)) tabulated on a grid."""
    q: float
    rate: float
    grid: np.ndarray
    x0: float = 0.0

    def log_h_plus(self, x):
        return self.rate * (np.asarray(x, dtype=float) - self.x0)

    def dlog_h_plus(self, x):
        return np.full(np.shape(x), self.rate)

    def h_plus(self, x):
        return np.exp(self.log_h_plus(x))


def exponential_pair(spec: LevySpec, q: float, lower: float, upper: float,
                     x0: float = 0.0, n: int = 4096) -> ExponentialPair:
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")
    return ExponentialPair(q, phi(spec, q), np.linspace(lower, upper, n), x0)


def exp_cost_potential(spec: LevySpec, q: float, coeff: float, gamma: float):
    """Closed-form potential of the cost coeff*e^{gamma x} at rate q."""
    from .potential import ClosedFormPotential

    if gamma < 0:
        raise DomainError("exponential cost needs gamma >= 0 for the closed form")
    kappa = q - psi(spec, gamma)
    if not kappa > 0:
        raise NotIntegrable(f"q - psi(gamma) = {kappa:g} is not positive")
    c = coeff / kappa
    return ClosedFormPotential(
        lambda x: c * np.exp(gamma * np.asarray(x, dtype=float)),
        lambda x: gamma * c * np.exp(gamma * np.asarray(x, dtype=float)),
    )


@dataclass(frozen=True)
class CallWithCost:
    x_star: float
    value: float
    q: float
    p_gamma: float
    rule: object
    supported: bool = True

    def value_at(self, x, K, alpha_cost, gamma):
        """Closed-form value on the continuation region x < x_star."""
        x = np.asarray(x, dtype=float)
        a = alpha_cost / self.p_gamma
        top = max(math.exp(self.x_star) - K, 0.0) + a * math.exp(gamma * self.x_star)
        return np.exp(x - self.x_star) * top - a * np.exp(gamma * x)


def call_with_cost(spec: LevySpec, K: float, alpha_cost: float, gamma: float, x: float) -> CallWithCost:
    """Perpetual call (e^x - K)^+ with cost alpha_cost*e^{gamma x} at rate psi(1).

    The threshold is x* = log(p K / ((1-gamma) alpha_cost)) / gamma with
    p = psi(1) - psi(gamma). For x >= x* the closed form does not apply;
    the result is flagged ``supported=False`` with a NaN value.
    """
    if not (K > 0 and alpha_cost > 0):
        raise DomainError("K and alpha_cost must be positive")
    if not 0 < gamma < 1:
        raise DomainError(f"closed form needs 0 < gamma < 1, got {gamma}")
    q = martingale_rate(spec)
    p = q - psi(spec, gamma)
    if not p > 0:
        raise PGammaNonPositive(f"p_gamma = {p:g} is not positive")
    x_star = math.log(p * K / ((1.0 - gamma) * alpha_cost)) / gamma
    if x >= x_star:
        warnings.warn(f"start {x} is not below the threshold {x_star}", StartAboveThreshold)
        return CallWithCost(x_star, math.nan, q, p, Threshold(x_star), supported=False)
    a = alpha_cost / p
    value = (math.exp(x - x_star) * (max(math.exp(x_star) - K, 0.0) + a * math.exp(gamma * x_star))
             - a * math.exp(gamma * x))
    return CallWithCost(x_star, value, q, p, Threshold(x_star))


def check_ssmp_conditions(spec: LevySpec, alpha: float, strict: bool = True) -> None:
    th = theta(spec)
    if not th < alpha:
        raise InvalidSpec(f"theta = {th:g} must be below the index alpha = {alpha:g}")
    if strict:
        r1 = psi(spec, 1e3) / 1e3
        r2 = psi(spec, 1e9) / 1e9
        if not (r2 > 0 and r2 > 10 * abs(r1)):
            raise InvalidSpec("psi(u)/u does not appear to diverge; pass strict=False to override")
