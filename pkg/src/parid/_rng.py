"""Counter-seeded PRNG and binomial sampling for the jitted kernels.

The simulator needs a random stream that (a) lives inside ``@njit`` code,
(b) is seeded explicitly per run so results are a pure function of the
seed, and (c) supports splitting one master seed into many replica seeds
without coordination.  numpy's ``Generator`` objects cannot be used inside
nopython kernels, so we carry our own xoshiro256++ stream (Blackman &
Vigna) seeded through the SplitMix64 avalanche permutation, plus a
binomial sampler following numpy's classic inversion/BTPE split
(Kachitvichyanukul & Schmeiser 1988).
"""

from __future__ import annotations

import numpy as np
from numba import njit

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)


@njit(cache=True, nogil=True)
def splitmix64(x):
    """One SplitMix64 output for input ``x`` (a bijection on uint64)."""
    z = x + _U64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@njit(cache=True, nogil=True)
def mix_seed(master_seed, index):
    """Derive a per-replica seed from (master_seed, index).

    The map ``index -> seed`` is SplitMix64 applied to distinct inputs,
    hence injective: replica seeds never collide for any number of
    replicas representable in 64 bits.
    """
    return splitmix64(master_seed + (_U64(index) + _U64(1)) * _GOLDEN)


@njit(cache=True, nogil=True)
def seed_state(seed):
    """Initialise a 4-word xoshiro256++ state from a 64-bit seed."""
    state = np.empty(4, dtype=np.uint64)
    x = _U64(seed)
    for i in range(4):
        x = x + _GOLDEN
        state[i] = splitmix64(x)
    # all-zero state is unreachable: splitmix64 outputs of distinct inputs
    # cannot all be zero, but guard anyway
    if state[0] == _U64(0) and state[1] == _U64(0) and state[2] == _U64(0) and state[3] == _U64(0):
        state[0] = _GOLDEN
    return state


@njit(cache=True, nogil=True)
def next_u64(state):
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    t = s0 + s3
    result = ((t << _U64(23)) | (t >> _U64(41))) + s0
    t = s1 << _U64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = (s3 << _U64(45)) | (s3 >> _U64(19))
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return result


@njit(cache=True, nogil=True)
def next_double(state):
    """Uniform double in [0, 1) with 53 random bits."""
    return (next_u64(state) >> _U64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def _binomial_inversion(state, n, p):
    # numpy's rk_binomial_inversion; valid for n*p <= 30 and p <= 0.5
    q = 1.0 - p
    qn = np.exp(n * np.log(q))
    npv = n * p
    bound = min(float(n), npv + 10.0 * np.sqrt(npv * q + 1.0))
    x = 0
    px = qn
    u = next_double(state)
    while u > px:
        x += 1
        if x > bound:
            x = 0
            px = qn
            u = next_double(state)
        else:
            u -= px
            px = ((n - x + 1) * p * px) / (x * q)
    return x


@njit(cache=True, nogil=True)
def _binomial_btpe(state, n, p):
    # numpy's rk_binomial_btpe; valid for n*p > 30 and p <= 0.5
    r = p
    q = 1.0 - r
    fm = n * r + r
    m = np.int64(np.floor(fm))
    p1 = np.floor(2.195 * np.sqrt(n * r * q) - 4.6 * q) + 0.5
    xm = m + 0.5
    xl = xm - p1
    xr = xm + p1
    c = 0.134 + 20.5 / (15.3 + m)
    a = (fm - xl) / (fm - xl * r)
    laml = a * (1.0 + a / 2.0)
    a = (xr - fm) / (xr * q)
    lamr = a * (1.0 + a / 2.0)
    p2 = p1 * (1.0 + 2.0 * c)
    p3 = p2 + c / laml
    p4 = p3 + c / lamr
    nrq = n * r * q

    while True:
        u = next_double(state) * p4
        v = next_double(state)
        if u <= p1:
            y = np.int64(np.floor(xm - p1 * v + u))
            return y
        if u <= p2:
            x = xl + (u - p1) / c
            v = v * c + 1.0 - abs(m - x + 0.5) / p1
            if v > 1.0:
                continue
            y = np.int64(np.floor(x))
        elif u <= p3:
            y = np.int64(np.floor(xl + np.log(v) / laml))
            if y < 0:
                continue
            v = v * (u - p2) * laml
        else:
            y = np.int64(np.floor(xr - np.log(v) / lamr))
            if y > n:
                continue
            v = v * (u - p3) * lamr

        # squeeze/acceptance tests
        k = abs(y - m)
        if k <= 20 or k >= nrq / 2.0 - 1.0:
            s = r / q
            a2 = s * (n + 1)
            f = 1.0
            if m < y:
                for i in range(m + 1, y + 1):
                    f *= a2 / i - s
            elif m > y:
                for i in range(y + 1, m + 1):
                    f /= a2 / i - s
            if v <= f:
                return y
            continue

        rho = (k / nrq) * ((k * (k / 3.0 + 0.625) + 0.16666666666666666) / nrq + 0.5)
        t = -k * k / (2.0 * nrq)
        big_a = np.log(v)
        if big_a < t - rho:
            return y
        if big_a > t + rho:
            continue

        x1 = float(y + 1)
        f1 = float(m + 1)
        z = float(n + 1 - m)
        w = float(n - y + 1)
        x2 = x1 * x1
        f2 = f1 * f1
        z2 = z * z
        w2 = w * w
        bound = (
            xm * np.log(f1 / x1)
            + (n - m + 0.5) * np.log(z / w)
            + (y - m) * np.log(w * r / (x1 * q))
            + (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / f2) / f2) / f2) / f2) / f1 / 166320.0
            + (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / z2) / z2) / z2) / z2) / z / 166320.0
            + (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / x2) / x2) / x2) / x2) / x1 / 166320.0
            + (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / w2) / w2) / w2) / w2) / w / 166320.0
        )
        if big_a <= bound:
            return y


@njit(cache=True, nogil=True)
def binomial(state, n, p):
    """Draw Binomial(n, p); exact algorithm, no normal approximation."""
    if n <= 0 or p <= 0.0:
        return np.int64(0)
    if p >= 1.0:
        return np.int64(n)
    if p <= 0.5:
        if p * n <= 30.0:
            return np.int64(_binomial_inversion(state, n, p))
        return _binomial_btpe(state, n, p)
    q = 1.0 - p
    if q * n <= 30.0:
        return np.int64(n - _binomial_inversion(state, n, q))
    return np.int64(n) - _binomial_btpe(state, n, q)
