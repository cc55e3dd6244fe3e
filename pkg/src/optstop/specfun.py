"""Special functions used by the self-similar machinery.

All evaluators are plain power series with one truncation policy: stop once
``SERIES_RUN`` consecutive terms are each below ``tol`` times the running sum,
and give up after ``SERIES_CAP`` terms. Terms are formed in log space when the
argument is positive so that large factorials never overflow, and the partial
sums are accumulated with ``math.fsum``.

Arguments are meant to be of desk scale (say ``x <= 50``); no asymptotic
expansions are provided.
"""

import math

import numpy as np

from .errors import DomainError, PoleInDenominator, SeriesDivergence

SERIES_TOL = 1e-16
SERIES_RUN = 10
SERIES_CAP = 10_000


def sum_series(terms, tol=SERIES_TOL, run=SERIES_RUN, cap=SERIES_CAP):
    """Sum an iterable of terms under the package truncation policy.

    Parameters
    ----------
    terms : iterable of float
        Successive series terms, possibly infinite.
    tol : float
        Relative size below which a term counts as negligible.
    run : int
        Number of consecutive negligible terms needed to stop.
    cap : int
        Maximum number of terms before ``SeriesDivergence`` is raised.
    """
    kept = []
    partial = 0.0
    small = 0
    for n, t in enumerate(terms):
        if n >= cap:
            raise SeriesDivergence(f"series did not converge within {cap} terms")
        kept.append(t)
        partial += t
        if not math.isfinite(partial):
            raise SeriesDivergence("series terms overflowed")
        if abs(t) <= tol * abs(partial):
            small += 1
            if small >= run:
                break
        else:
            small = 0
    return math.fsum(kept)


def _elementwise(fn):
    # scalar kernels, broadcast over array arguments when needed
    vec = np.vectorize(fn, otypes=[float])

    def wrapper(*args, **kwargs):
        if all(np.ndim(a) == 0 for a in args):
            return fn(*args, **kwargs)
        return vec(*args, **kwargs)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    wrapper.__wrapped__ = fn
    return wrapper


def log_gamma(x):
    """log Γ(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def gamma(x):
    """Γ(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"gamma requires x > 0, got {x}")
    return math.gamma(x)


def log_pochhammer(q, n):
    if not q > 0:
        raise DomainError(f"pochhammer requires q > 0, got {q}")
    if not n >= 0:
        raise DomainError(f"pochhammer requires n >= 0, got {n}")
    return math.lgamma(q + n) - math.lgamma(q)


def pochhammer(q, n):
    """Rising factorial (q)_n = Γ(q+n)/Γ(q), for q > 0 and real n >= 0."""
    if n == 0:
        if not q > 0:
            raise DomainError(f"pochhammer requires q > 0, got {q}")
        return 1.0
    return math.exp(log_pochhammer(q, n))


def _log_terms(logt, sign=None):
    # exponentiate log-terms lazily; sign(n) gives +-1 for alternating series
    n = 0
    while True:
        v = math.exp(logt(n))
        yield v if sign is None else sign(n) * v
        n += 1


@_elementwise
def bessel_I(nu, x, tol=SERIES_TOL):
    """Modified Bessel function I_ν(x) by its ascending series (ν > -1, x >= 0)."""
    if not nu > -1:
        raise DomainError(f"bessel_I series needs nu > -1, got {nu}")
    if x < 0:
        raise DomainError(f"bessel_I needs x >= 0, got {x}")
    if x == 0:
        if nu == 0:
            return 1.0
        return 0.0 if nu > 0 else math.inf
    lh = math.log(x / 2.0)
    return sum_series(
        _log_terms(lambda n: (nu + 2 * n) * lh - math.lgamma(n + 1) - math.lgamma(nu + n + 1)),
        tol=tol,
    )


def _phi_terms(q, nu, x):
    t = 1.0
    n = 0
    while True:
        yield t
        t *= (q + n) / ((nu + n) * (n + 1)) * x
        n += 1


@_elementwise
def confluent_phi(q, nu, x, tol=SERIES_TOL):
    """Kummer's function Φ(q, ν, x) = Σ (q)_n x^n / ((ν)_n n!)."""
    if nu <= 0 and float(nu).is_integer():
        raise PoleInDenominator(f"confluent_phi undefined for nu = {nu}")
    if x == 0:
        return 1.0
    return sum_series(_phi_terms(q, nu, x), tol=tol)


def _ml_sum(logcoef, x, tol):
    if x == 0:
        return math.exp(logcoef(0))
    lx = math.log(abs(x))
    sign = None if x > 0 else (lambda n: -1.0 if n % 2 else 1.0)
    return sum_series(_log_terms(lambda n: logcoef(n) + n * lx, sign), tol=tol)


@_elementwise
def mittag_leffler(alpha, beta, x, tol=SERIES_TOL):
    """Two-parameter Mittag-Leffler function M_{α,β}(x) = Σ x^n / Γ(αn+β)."""
    if not (alpha > 0 and beta > 0):
        raise DomainError("mittag_leffler needs alpha, beta > 0")
    return _ml_sum(lambda n: -math.lgamma(alpha * n + beta), x, tol)


@_elementwise
def mittag_leffler_q(q, alpha, beta, x, tol=SERIES_TOL):
    """Three-parameter (Prabhakar) function M^q_{α,β}(x) = Σ (q)_n x^n / Γ(αn+β)."""
    if not (q > 0 and alpha > 0 and beta > 0):
        raise DomainError("mittag_leffler_q needs q, alpha, beta > 0")
    lq = math.lgamma(q)
    return _ml_sum(lambda n: math.lgamma(q + n) - lq - math.lgamma(alpha * n + beta), x, tol)
