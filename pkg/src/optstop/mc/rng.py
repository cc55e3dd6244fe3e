"""Counter-based random numbers: Philox4x32-10 keyed by the 64-bit seed.

Every draw is a pure function of ``(seed, path, stream, position)``, so a path
sees the same numbers no matter how many paths run or in which order.
Normals come from a ziggurat fed by the same words.
Streams: 0 Gaussian increments, 1 bridge uniforms, 2 jumps, 3 kill clock.
"""

import math

import numba as nb
import numpy as np

STREAM_NORMAL = 0
STREAM_BRIDGE = 1
STREAM_JUMP = 2
STREAM_KILL = 3

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_LO = np.uint64(0xFFFFFFFF)
_SH = np.uint64(32)
_INV32 = 2.3283064365386963e-10


@nb.njit(inline="always", cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = np.uint64(c0) * _M0
        p1 = np.uint64(c2) * _M1
        hi0 = np.uint32(p0 >> _SH)
        lo0 = np.uint32(p0 & _LO)
        hi1 = np.uint32(p1 >> _SH)
        lo1 = np.uint32(p1 & _LO)
        c0, c1, c2, c3 = np.uint32(hi1 ^ c1 ^ k0), lo1, np.uint32(hi0 ^ c3 ^ k1), lo0
        k0 = np.uint32(k0 + _W0)
        k1 = np.uint32(k1 + _W1)
    return c0, c1, c2, c3


@nb.njit(inline="always", cache=True)
def to_unit(r):
    """uint32 -> uniform on the open interval (0, 1)."""
    return (np.float64(r) + 0.5) * _INV32


# Ziggurat tables (Marsaglia and Tsang, 128 layers); layer 0 carries the tail
_ZR = 3.442619855899
_ZV = 9.91256303526217e-3


def _zig_tables():
    x = np.zeros(129)
    x[0] = _ZV / math.exp(-0.5 * _ZR * _ZR)
    x[1] = _ZR
    for i in range(1, 128):
        x[i + 1] = math.sqrt(-2.0 * math.log(_ZV / x[i] + math.exp(-0.5 * x[i] * x[i])))
    x[128] = 0.0
    return x, np.exp(-0.5 * x * x)


ZIG_X, ZIG_F = _zig_tables()
_INV24 = 1.0 / 16777216.0


@nb.njit(inline="always", cache=True)
def next_word(buf, st, k0, k1, key, stream):
    """Next uint32 of a (path, stream) sequence; ``st`` = [position, block]."""
    if st[0] == 4:
        a0, a1, a2, a3 = philox4x32(np.uint32(st[1]), np.uint32(key), np.uint32(stream), np.uint32(0), k0, k1)
        buf[0] = a0
        buf[1] = a1
        buf[2] = a2
        buf[3] = a3
        st[0] = 0
        st[1] += 1
    w = buf[st[0]]
    st[0] += 1
    return w


@nb.njit(inline="always", cache=True)
def next_uniform(buf, st, k0, k1, key, stream):
    return to_unit(next_word(buf, st, k0, k1, key, stream))


@nb.njit(inline="always", cache=True)
def next_normal(buf, st, k0, k1, key, stream):
    """Standard normal by the ziggurat; one word per draw on the fast path.

    Bits 0-6 pick the layer, bit 7 the sign and bits 8-31 the abscissa.
    """
    while True:
        w = np.int64(next_word(buf, st, k0, k1, key, stream))
        i = w & 127
        x = ((w >> 8) + 0.5) * _INV24 * ZIG_X[i]
        if x < ZIG_X[i + 1]:
            return -x if w & 128 else x
        if i == 0:
            while True:
                a = -math.log(next_uniform(buf, st, k0, k1, key, stream)) / _ZR
                b = -math.log(next_uniform(buf, st, k0, k1, key, stream))
                if b + b > a * a:
                    break
            x = _ZR + a
            return -x if w & 128 else x
        y = ZIG_F[i + 1] + next_uniform(buf, st, k0, k1, key, stream) * (ZIG_F[i] - ZIG_F[i + 1])
        if y < math.exp(-0.5 * x * x):
            return -x if w & 128 else x


def new_state():
    """Scratch (buffer, state) pair for next_word; reset with reset_state."""
    return np.zeros(4, dtype=np.uint32), np.array([4, 0], dtype=np.int64)


@nb.njit(inline="always", cache=True)
def reset_state(st):
    st[0] = 4
    st[1] = 0


def split_seed(seed):
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.uint32(seed & 0xFFFFFFFF), np.uint32(seed >> 32)


@nb.njit(cache=True)
def _fill(k0, k1, path, stream, n, gaussian, out):
    buf = np.zeros(4, dtype=np.uint32)
    st = np.array([4, 0], dtype=np.int64)
    for i in range(n):
        out[i] = next_normal(buf, st, k0, k1, path, stream) if gaussian else next_uniform(buf, st, k0, k1, path, stream)


def uniforms(seed, path, n, stream=STREAM_BRIDGE):
    """The first ``n`` uniforms of one (path, stream); mostly for tests."""
    k0, k1 = split_seed(seed)
    out = np.empty(n)
    _fill(k0, k1, int(path), int(stream), n, False, out)
    return out


def normals(seed, path, n, stream=STREAM_NORMAL):
    k0, k1 = split_seed(seed)
    out = np.empty(n)
    _fill(k0, k1, int(path), int(stream), n, True, out)
    return out


def philox_block(counter, key):
    """Raw Philox4x32-10 output for a 4-word counter and 2-word key."""
    c = [np.uint32(v) for v in counter]
    k = [np.uint32(v) for v in key]
    return tuple(int(v) for v in philox4x32(c[0], c[1], c[2], c[3], k[0], k[1]))
