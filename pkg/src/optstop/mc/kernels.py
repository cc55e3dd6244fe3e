"""Compiled per-path simulation loops.

Coefficients arrive either as first-class compiled callables or, on the fast
path, as ``(k0, k1, gamma)`` triples meaning ``k0 + k1 exp(gamma x)``; a NaN
``k0`` selects the callable. Status codes: 0 stopped by the rule, 1 killed,
2 censored at the horizon.

Gaussian increments are drawn sequentially from stream 0 of the path key,
bridge uniforms are indexed by step on stream 1, jump arrivals and sizes are
sequential on stream 2 and the kill clock is word 0 of stream 3.
"""

import math

import numba as nb
import numpy as np
from numba import types

from .rng import (
    STREAM_BRIDGE,
    STREAM_JUMP,
    STREAM_KILL,
    STREAM_NORMAL,
    next_normal,
    next_uniform,
    philox4x32,
    reset_state,
    to_unit,
)

SCALAR_SIG = types.float64(types.float64)
SCALAR_FN = types.FunctionType(SCALAR_SIG)

STOPPED, KILLED, CENSORED = 0, 1, 2

# Lamperti step clocks
CLOCK_X, CLOCK_U, CLOCK_Z = 0, 1, 2

# half-width of the window around the anchor where exp_small replaces exp
_EXP_WINDOW = 0.2
_BRIDGE_CUTOFF = 40.0


@nb.njit(SCALAR_SIG, cache=True)
def zero_fn(x):
    return 0.0


@nb.njit(inline="always")
def _coef(f, p, x):
    if p[0] == p[0]:
        if p[1] == 0.0:
            return p[0]
        return p[0] + p[1] * math.exp(p[2] * x)
    return f(x)


@nb.njit(inline="always")
def word_at(k0, k1, path, stream, i):
    """i-th uniform of a (path, stream) by direct counter access."""
    r0, r1, r2, r3 = philox4x32(np.uint32(i >> 2), np.uint32(path), np.uint32(stream), np.uint32(0), k0, k1)
    j = i & 3
    if j == 0:
        return to_unit(r0)
    if j == 1:
        return to_unit(r1)
    if j == 2:
        return to_unit(r2)
    return to_unit(r3)


@nb.njit(inline="always")
def exp_small(y):
    """e^y for |y| < 0.2: degree 7 in Estrin form, relative error below 1e-10."""
    y2 = y * y
    return ((1.0 + y) + y2 * (0.5 + y * (1.0 / 6.0))) + (y2 * y2) * (
        (1.0 / 24.0 + y * (1.0 / 120.0)) + y2 * (1.0 / 720.0 + y * (1.0 / 5040.0)))


@nb.njit(inline="always")
def _bridge_hit(k0, k1, key, step, x, x1, lower, upper, inv_v):
    # +1 / -1 when the Brownian bridge touched the upper / lower barrier
    e_up = 2.0 * (upper - x) * (upper - x1) * inv_v
    e_lo = 2.0 * (x - lower) * (x1 - lower) * inv_v
    if e_up < _BRIDGE_CUTOFF or e_lo < _BRIDGE_CUTOFF:
        uu = word_at(k0, k1, key, STREAM_BRIDGE, step)
        if e_up < _BRIDGE_CUTOFF and uu < math.exp(-e_up):
            return 1
        if e_lo < _BRIDGE_CUTOFF and uu < math.exp(-e_lo):
            return -1
    return 0


@nb.njit(cache=True, error_model="numpy")
def diffusion_kernel(x0, dt, n_max, fixed_stop, lower, upper, bridge, kill_fraction,
                     fb, pb, fs, ps, fr, pr, fc, pc, jump_rate, jump_mean,
                     k0, k1, antithetic, out_x, out_A, out_C, out_t, out_status):
    n_paths = out_x.size
    sq = math.sqrt(dt)
    discount_cost = kill_fraction < 1.0
    nbuf = np.zeros(4, dtype=np.uint32)
    nst = np.zeros(2, dtype=np.int64)
    jbuf = np.zeros(4, dtype=np.uint32)
    jst = np.zeros(2, dtype=np.int64)
    for p in range(n_paths):
        key = p // 2 if antithetic else p
        sign = -1.0 if (antithetic and (p & 1) == 1) else 1.0
        reset_state(nst)
        reset_state(jst)
        x = x0
        A = 0.0
        C = 0.0
        t = 0.0
        status = STOPPED if fixed_stop else CENSORED
        if x <= lower or x >= upper:
            out_x[p] = x
            out_A[p] = 0.0
            out_C[p] = 0.0
            out_t[p] = 0.0
            out_status[p] = STOPPED
            continue
        kill_at = math.inf
        if kill_fraction > 0.0:
            kill_at = -math.log(word_at(k0, k1, key, STREAM_KILL, 0)) / kill_fraction
        next_jump = math.inf
        if jump_rate > 0.0:
            next_jump = -math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP)) / jump_rate
        r0 = _coef(fr, pr, x)
        c0 = _coef(fc, pc, x)
        w0 = 1.0
        for step in range(n_max):
            z = next_normal(nbuf, nst, k0, k1, key, STREAM_NORMAL)
            s = _coef(fs, ps, x)
            x1 = x + _coef(fb, pb, x) * dt + sign * s * sq * z
            theta = 1.0
            hit = False
            if x1 >= upper:
                theta = (upper - x) / (x1 - x)
                x1 = upper
                hit = True
            elif x1 <= lower:
                theta = (x - lower) / (x - x1)
                x1 = lower
                hit = True
            elif bridge:
                side = _bridge_hit(k0, k1, key, step, x, x1, lower, upper, 1.0 / (s * s * dt))
                if side != 0:
                    x1 = upper if side > 0 else lower
                    theta = 0.5
                    hit = True
            if not hit and jump_rate > 0.0:
                next_jump -= dt
                while next_jump <= 0.0:
                    x1 += jump_mean * math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP))
                    next_jump -= math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP)) / jump_rate
                if x1 <= lower:
                    hit = True
            h = dt * theta
            r1 = _coef(fr, pr, x1)
            c1 = _coef(fc, pc, x1)
            dA = 0.5 * (r0 + r1) * h
            if A + dA >= kill_at:
                f = (kill_at - A) / dA
                w1 = math.exp(-(1.0 - kill_fraction) * (A + dA)) if discount_cost else 1.0
                C += h * f * (c0 * w0 + 0.5 * f * (c1 * w1 - c0 * w0))
                A = kill_at
                t += h * f
                x = x + f * (x1 - x)
                status = KILLED
                break
            A += dA
            w1 = math.exp(-(1.0 - kill_fraction) * A) if discount_cost else 1.0
            C += 0.5 * (c0 * w0 + c1 * w1) * h
            x = x1
            t += h
            r0 = r1
            c0 = c1
            w0 = w1
            if hit:
                status = STOPPED
                break
        out_x[p] = x
        out_A[p] = A
        out_C[p] = C
        out_t[p] = t
        out_status[p] = status


@nb.njit(cache=True, error_model="numpy")
def constant_kernel(x0, dt, n_max, fixed_stop, lower, upper, bridge, kill_fraction,
                    b, s, q, ck0, ck1, cg, jump_rate, jump_mean,
                    k0, k1, antithetic, out_x, out_A, out_C, out_t, out_status):
    """``diffusion_kernel`` for constant drift, volatility and rate.

    Same random numbers and bookkeeping. An exponential cost is expanded
    around an anchor point that moves only when the path leaves a small
    window, which saves a libm call on most steps.
    """
    n_paths = out_x.size
    sq = math.sqrt(dt)
    drift_step = b * dt
    vol_step = s * sq
    inv_v = 1.0 / (s * s * dt)
    lam = (1.0 - kill_fraction) * q     # weighting part of the discount
    decay = math.exp(-lam * dt)
    c_exp = ck1 != 0.0 and cg != 0.0
    ck0 = ck0 if c_exp else ck0 + ck1
    nbuf = np.zeros(4, dtype=np.uint32)
    nst = np.zeros(2, dtype=np.int64)
    jbuf = np.zeros(4, dtype=np.uint32)
    jst = np.zeros(2, dtype=np.int64)
    for p in range(n_paths):
        key = p // 2 if antithetic else p
        sign = -1.0 if (antithetic and (p & 1) == 1) else 1.0
        reset_state(nst)
        reset_state(jst)
        x = x0
        C = 0.0
        t = 0.0
        status = STOPPED if fixed_stop else CENSORED
        if x <= lower or x >= upper:
            out_x[p] = x
            out_A[p] = 0.0
            out_C[p] = 0.0
            out_t[p] = 0.0
            out_status[p] = STOPPED
            continue
        t_kill = math.inf
        if kill_fraction > 0.0 and q > 0.0:
            t_kill = -math.log(word_at(k0, k1, key, STREAM_KILL, 0)) / (kill_fraction * q)
        next_jump = math.inf
        if jump_rate > 0.0:
            next_jump = -math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP)) / jump_rate
        x_ref = x
        e_ref = math.exp(cg * x) if c_exp else 0.0
        c0 = ck0 + ck1 * e_ref
        w0 = 1.0
        for step in range(n_max):
            z = next_normal(nbuf, nst, k0, k1, key, STREAM_NORMAL)
            x1 = x + drift_step + sign * vol_step * z
            theta = 1.0
            hit = False
            if x1 >= upper:
                theta = (upper - x) / (x1 - x)
                x1 = upper
                hit = True
            elif x1 <= lower:
                theta = (x - lower) / (x - x1)
                x1 = lower
                hit = True
            elif bridge:
                side = _bridge_hit(k0, k1, key, step, x, x1, lower, upper, inv_v)
                if side != 0:
                    x1 = upper if side > 0 else lower
                    theta = 0.5
                    hit = True
            if not hit and jump_rate > 0.0:
                next_jump -= dt
                while next_jump <= 0.0:
                    x1 += jump_mean * math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP))
                    next_jump -= math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP)) / jump_rate
                if x1 <= lower:
                    hit = True
            h = dt * theta
            c1 = ck0
            if c_exp:
                y = cg * (x1 - x_ref)
                if -_EXP_WINDOW < y < _EXP_WINDOW:
                    c1 += ck1 * e_ref * exp_small(y)
                else:
                    x_ref = x1
                    e_ref = math.exp(cg * x1)
                    c1 += ck1 * e_ref
            if lam == 0.0:
                w1 = 1.0
            elif theta == 1.0:
                w1 = w0 * decay
            else:
                w1 = math.exp(-lam * (t + h))
            if t + h >= t_kill:
                f = (t_kill - t) / h
                C += h * f * (c0 * w0 + 0.5 * f * (c1 * w1 - c0 * w0))
                t = t_kill
                x = x + f * (x1 - x)
                status = KILLED
                break
            C += 0.5 * (c0 * w0 + c1 * w1) * h
            x = x1
            t += h
            c0 = c1
            w0 = w1
            if hit:
                status = STOPPED
                break
        out_x[p] = x
        out_A[p] = q * t
        out_C[p] = C
        out_t[p] = t
        out_status[p] = status


@nb.njit(cache=True, error_model="numpy")
def lamperti_kernel(z0, dt, horizon, clock, alpha, chi, log_a, moving, t_fix,
                    sigma, drift, jump_rate, jump_mean, k0, k1, antithetic, max_steps, bridge,
                    out_z, out_s, out_tau, out_status):
    """Z-time Euler scheme for log X, with X-time tau = int e^{alpha Z} ds.

    Stops when Z reaches log_a (+ log(1 + chi tau)/alpha when ``moving``), or
    at X-time ``t_fix``; the horizon is measured on ``clock``. A Z-step
    advances the chosen clock by about ``dt`` but never more than 1% of the
    squared distance to the barrier. With ``bridge`` a step that ends below
    the barrier still stops with the probability that the Brownian bridge
    touched the (linearly interpolated) barrier, and the crossing is placed
    mid-step.
    """
    n_paths = out_z.size
    nbuf = np.zeros(4, dtype=np.uint32)
    nst = np.zeros(2, dtype=np.int64)
    jbuf = np.zeros(4, dtype=np.uint32)
    jst = np.zeros(2, dtype=np.int64)
    for p in range(n_paths):
        key = p // 2 if antithetic else p
        sign = -1.0 if (antithetic and (p & 1) == 1) else 1.0
        reset_state(nst)
        reset_state(jst)
        z = z0
        s = 0.0
        tau = 0.0
        status = CENSORED
        next_jump = math.inf
        if jump_rate > 0.0:
            next_jump = -math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP)) / jump_rate
        bar = log_a
        n_here = max_steps
        if z >= bar:
            status = STOPPED
            n_here = 0
        for step in range(n_here):
            if clock == CLOCK_X:
                now = tau
            elif clock == CLOCK_U:
                now = math.log1p(chi * tau) / chi
            else:
                now = s
            if now >= horizon:
                break
            e = math.exp(alpha * z)
            if clock == CLOCK_X:
                ds = dt / e
            elif clock == CLOCK_U:
                ds = dt * (1.0 + chi * tau) / e
            else:
                ds = dt
            d = bar - z
            ds = min(ds, max(dt, 0.01 * d * d))
            zn = next_normal(nbuf, nst, k0, k1, key, STREAM_NORMAL)
            z1 = z + drift * ds + sign * sigma * math.sqrt(ds) * zn
            if jump_rate > 0.0:
                next_jump -= ds
                while next_jump <= 0.0:
                    z1 += jump_mean * math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP))
                    next_jump -= math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP)) / jump_rate
            tau1 = tau + 0.5 * (e + math.exp(alpha * z1)) * ds
            bar1 = log_a + math.log1p(chi * tau1) / alpha if moving else log_a
            crossed = z1 >= bar1
            if crossed:
                f = (bar - z) / ((z1 - bar1) - (z - bar))
            elif bridge and sigma > 0.0:
                ex = 2.0 * (bar - z) * (bar1 - z1) / (sigma * sigma * ds)
                if ex < _BRIDGE_CUTOFF and word_at(k0, k1, key, STREAM_BRIDGE, step) < math.exp(-ex):
                    crossed = True
                    f = 0.5
            if crossed:
                z = bar + f * (bar1 - bar)
                tau = tau + f * (tau1 - tau)
                s += f * ds
                status = STOPPED
                break
            if tau1 >= t_fix:
                f = (t_fix - tau) / (tau1 - tau)
                z = z + f * (z1 - z)
                tau = t_fix
                s += f * ds
                status = STOPPED
                break
            z = z1
            tau = tau1
            s += ds
            bar = bar1
        out_z[p] = z
        out_s[p] = s
        out_tau[p] = tau
        out_status[p] = status


@nb.njit(cache=True, error_model="numpy")
def lamperti_grid_kernel(z0, dt, alpha, sigma, drift, jump_rate, jump_mean, k0, k1, antithetic,
                         taus, max_steps, out):
    """exp(Z) read off at the X-times ``taus`` (clock inversion on the Euler grid)."""
    n_paths, n_t = out.shape
    nbuf = np.zeros(4, dtype=np.uint32)
    nst = np.zeros(2, dtype=np.int64)
    jbuf = np.zeros(4, dtype=np.uint32)
    jst = np.zeros(2, dtype=np.int64)
    for p in range(n_paths):
        key = p // 2 if antithetic else p
        sign = -1.0 if (antithetic and (p & 1) == 1) else 1.0
        reset_state(nst)
        reset_state(jst)
        z = z0
        tau = 0.0
        next_jump = math.inf
        if jump_rate > 0.0:
            next_jump = -math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP)) / jump_rate
        k = 0
        while k < n_t and taus[k] <= 0.0:
            out[p, k] = math.exp(z)
            k += 1
        step = 0
        while k < n_t and step < max_steps:
            e = math.exp(alpha * z)
            ds = min(dt / e, max(dt, 1.0))
            zn = next_normal(nbuf, nst, k0, k1, key, STREAM_NORMAL)
            z1 = z + drift * ds + sign * sigma * math.sqrt(ds) * zn
            if jump_rate > 0.0:
                next_jump -= ds
                while next_jump <= 0.0:
                    z1 += jump_mean * math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP))
                    next_jump -= math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP)) / jump_rate
            tau1 = tau + 0.5 * (e + math.exp(alpha * z1)) * ds
            while k < n_t and taus[k] <= tau1:
                f = (taus[k] - tau) / (tau1 - tau)
                out[p, k] = math.exp(z + f * (z1 - z))
                k += 1
            z = z1
            tau = tau1
            step += 1
        while k < n_t:
            out[p, k] = math.nan
            k += 1


@nb.njit(cache=True, error_model="numpy")
def levy_grid_kernel(x0, dt, drift, sigma, jump_rate, jump_mean, k0, k1, antithetic, keep, out):
    """Lévy paths on k*dt, stored at the step indices in ``keep``."""
    n_paths = out.shape[0]
    sq = math.sqrt(dt)
    last = keep[-1]
    nbuf = np.zeros(4, dtype=np.uint32)
    nst = np.zeros(2, dtype=np.int64)
    jbuf = np.zeros(4, dtype=np.uint32)
    jst = np.zeros(2, dtype=np.int64)
    for p in range(n_paths):
        key = p // 2 if antithetic else p
        sign = -1.0 if (antithetic and (p & 1) == 1) else 1.0
        reset_state(nst)
        reset_state(jst)
        x = x0
        next_jump = math.inf
        if jump_rate > 0.0:
            next_jump = -math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP)) / jump_rate
        j = 0
        if keep[0] == 0:
            out[p, 0] = x
            j = 1
        for step in range(last):
            x += drift * dt + sign * sigma * sq * next_normal(nbuf, nst, k0, k1, key, STREAM_NORMAL)
            if jump_rate > 0.0:
                next_jump -= dt
                while next_jump <= 0.0:
                    x += jump_mean * math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP))
                    next_jump -= math.log(next_uniform(jbuf, jst, k0, k1, key, STREAM_JUMP)) / jump_rate
            if j < keep.size and keep[j] == step + 1:
                out[p, j] = x
                j += 1
