"""Problem description types and the random-discount time change.

A problem is ``sup_T E_x[e^{-A_T} g(X_T) - C_T]`` where ``X`` solves
``dX = b(X) dt + sigma(X) dW`` on an open interval, ``A_t = int_0^t a(X_s) ds``
and ``C_t = int_0^t c(X_s) e^{-A_s} ds``. With a constant rate ``a = q``.

Callables are expected to be pure. Vectorised callables (numpy ufunc style)
are used as such; scalar-only callables are broadcast with ``np.vectorize``.
The path property ``A_inf = inf`` is the caller's responsibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    InvalidSpec,
    NegativeCost,
    NegativeReward,
    NonPositiveDiscount,
    NonPositiveVolatility,
)

Fn = Callable[[float], float]

DEFAULT_HALF_WIDTH = 40.0
VALIDATION_POINTS = 1001


def evaluate(f, x):
    """Evaluate ``f`` on an array, falling back to elementwise calls."""
    x = np.asarray(x, dtype=float)
    try:
        with np.errstate(all="ignore"):
            y = np.asarray(f(x), dtype=float)
        if y.shape == x.shape:
            return y
        if y.ndim == 0:
            return np.full(x.shape, float(y))
    except (TypeError, ValueError):
        pass
    out = np.vectorize(lambda t: float(f(float(t))), otypes=[float])(x)
    return out


def _scalar_or_array(x, y):
    return float(y) if np.ndim(x) == 0 else y


@dataclass(frozen=True)
class StateInterval:
    lower: float = -math.inf
    upper: float = math.inf
    lower_open: bool = True
    upper_open: bool = True

    def __post_init__(self):
        if not self.lower < self.upper:
            raise InvalidSpec(f"empty state interval ({self.lower}, {self.upper})")

    def contains(self, x) -> bool:
        return self.lower < x < self.upper

    def truncated(self, x0: float = 0.0, half_width: float = DEFAULT_HALF_WIDTH, rel_eps: float = 1e-6):
        """Finite working interval around ``x0``.

        Infinite ends are cut at ``x0 -+ half_width``; finite ends are pulled
        inwards by ``rel_eps`` times the working length.
        """
        if not self.contains(x0):
            raise InvalidSpec(f"reference point {x0} outside ({self.lower}, {self.upper})")
        lo = self.lower if math.isfinite(self.lower) else x0 - half_width
        hi = self.upper if math.isfinite(self.upper) else x0 + half_width
        span = hi - lo
        if math.isfinite(self.lower):
            lo += rel_eps * span
        if math.isfinite(self.upper):
            hi -= rel_eps * span
        return lo, hi


@dataclass(frozen=True)
class DiffusionSpec:
    drift: Fn
    volatility: Fn
    interval: StateInterval = field(default_factory=StateInterval)

    def b(self, x):
        return _scalar_or_array(x, evaluate(self.drift, x))

    def sigma(self, x):
        return _scalar_or_array(x, evaluate(self.volatility, x))


@dataclass(frozen=True)
class ConstantRate:
    q: float


@dataclass(frozen=True)
class RandomDiscount:
    a: Fn


Discount = Union[ConstantRate, RandomDiscount]


@dataclass(frozen=True)
class ProblemSpec:
    diffusion: DiffusionSpec
    reward: Fn
    cost: Optional[Fn] = None
    discount: Discount = field(default_factory=lambda: ConstantRate(1.0))

    @property
    def rate(self) -> float:
        if not isinstance(self.discount, ConstantRate):
            raise InvalidSpec("problem has a random discount; reduce it first")
        return self.discount.q

    def g(self, x):
        return _scalar_or_array(x, evaluate(self.reward, x))

    def c(self, x):
        if self.cost is None:
            return _scalar_or_array(x, np.zeros(np.shape(x)))
        return _scalar_or_array(x, evaluate(self.cost, x))


@dataclass(frozen=True)
class ValidatedProblem:
    problem: ProblemSpec
    grid: np.ndarray


def validate(problem: ProblemSpec, x0: float = 0.0, n: int = VALIDATION_POINTS,
             half_width: float = DEFAULT_HALF_WIDTH) -> ValidatedProblem:
    """Check the standing assumptions on a sample grid over the truncated interval.

    Only ``sigma**2`` enters the law of the diffusion, so a volatility is
    rejected where it vanishes (or is not finite), not where it is negative.
    """
    lo, hi = problem.diffusion.interval.truncated(x0, half_width)
    grid = np.linspace(lo, hi, n)

    def first_bad(mask):
        return float(grid[np.argmax(mask)])

    sig = evaluate(problem.diffusion.volatility, grid)
    bad = ~(np.isfinite(sig) & (sig * sig > 0))
    if bad.any():
        x = first_bad(bad)
        raise NonPositiveVolatility(f"volatility vanishes at x={x:g}", x)

    g = evaluate(problem.reward, grid)
    bad = ~(np.isfinite(g) & (g >= 0))
    if bad.any():
        x = first_bad(bad)
        raise NegativeReward(f"reward negative or undefined at x={x:g}", x)

    if problem.cost is not None:
        c = evaluate(problem.cost, grid)
        bad = ~(np.isfinite(c) & (c >= 0))
        if bad.any():
            x = first_bad(bad)
            raise NegativeCost(f"cost negative or undefined at x={x:g}", x)

    disc = problem.discount
    if isinstance(disc, ConstantRate):
        if not (math.isfinite(disc.q) and disc.q > 0):
            raise NonPositiveDiscount(f"discount rate must be positive, got {disc.q}")
    else:
        a = evaluate(disc.a, grid)
        bad = ~(np.isfinite(a) & (a > 0))
        if bad.any():
            x = first_bad(bad)
            raise NonPositiveDiscount(f"discount density non-positive at x={x:g}", x)
    return ValidatedProblem(problem, grid)


def time_change_reduce(problem: ProblemSpec) -> ProblemSpec:
    """Trade a random discount density ``a`` for a unit rate.

    Running the diffusion on the clock ``A_t`` gives drift ``b/a``, volatility
    ``sigma/sqrt(a)`` and cost ``c/a`` with the reward unchanged; value
    functions coincide. Constant-rate problems are returned as they are.
    """
    if isinstance(problem.discount, ConstantRate):
        return problem
    a = problem.discount.a
    d = problem.diffusion

    def drift(x):
        return _scalar_or_array(x, evaluate(d.drift, x) / evaluate(a, x))

    def vol(x):
        return _scalar_or_array(x, evaluate(d.volatility, x) / np.sqrt(evaluate(a, x)))

    cost = None
    if problem.cost is not None:
        c = problem.cost

        def cost(x):
            return _scalar_or_array(x, evaluate(c, x) / evaluate(a, x))

    return ProblemSpec(
        diffusion=DiffusionSpec(drift, vol, d.interval),
        reward=problem.reward,
        cost=cost,
        discount=ConstantRate(1.0),
    )


# -- spectrally negative families ------------------------------------------------

@dataclass(frozen=True)
class CompoundPoissonExp:
    """Negative jumps arriving at ``rate`` with exponential sizes of mean ``mean_jump``."""
    rate: float
    mean_jump: float

    def __post_init__(self):
        if not (self.rate > 0 and self.mean_jump > 0):
            raise InvalidSpec("compound Poisson rate and mean jump must be positive")


@dataclass(frozen=True)
class Pochhammer:
    """Exponent (u+gamma-1)_alpha - (gamma-1)_alpha with 1 < alpha < 2."""
    alpha: float
    gamma: float = 1.0

    def __post_init__(self):
        if not 1 < self.alpha < 2:
            raise InvalidSpec(f"Pochhammer family needs 1 < alpha < 2, got {self.alpha}")
        if not self.gamma > 1 - self.alpha:
            raise InvalidSpec(f"Pochhammer family needs gamma > 1 - alpha, got {self.gamma}")


@dataclass(frozen=True)
class LevySpec:
    """Spectrally negative Lévy process by its Laplace exponent.

    ``drift`` is the linear coefficient of the exponent, so
    ``psi(u) = sigma2 u^2 / 2 + drift u + jump part`` with the jump part
    vanishing at 0 (compensation is folded into ``drift``).
    """
    sigma2: float = 1.0
    drift: float = 0.0
    jumps: Optional[Union[CompoundPoissonExp, Pochhammer]] = None

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise InvalidSpec(f"sigma2 must be nonnegative, got {self.sigma2}")
        if self.jumps is None and self.sigma2 == 0 and self.drift <= 0:
            raise InvalidSpec("degenerate exponent: no Gaussian part, no jumps, drift <= 0")


@dataclass(frozen=True)
class SsmpSpec:
    """Positive self-similar process with index ``alpha`` built from ``levy``.

    ``lam`` is the speed of the associated Ornstein-Uhlenbeck transform and
    ``chi = alpha * lam``. Construction checks ``theta < alpha`` and that
    ``psi(u)/u`` keeps growing on a large-u probe (skip with ``strict=False``).
    """
    levy: LevySpec
    alpha: float
    lam: float = 1.0
    strict: bool = True

    def __post_init__(self):
        from .levy import check_ssmp_conditions

        if not self.alpha > 0:
            raise InvalidSpec(f"self-similarity index must be positive, got {self.alpha}")
        if not self.lam > 0:
            raise InvalidSpec(f"OU speed must be positive, got {self.lam}")
        check_ssmp_conditions(self.levy, self.alpha, strict=self.strict)

    @property
    def chi(self) -> float:
        return self.alpha * self.lam
