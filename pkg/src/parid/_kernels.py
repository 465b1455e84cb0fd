"""Jitted kernels: inverse-CDF sampling, Fenwick-tree selection, PARID core.

Everything here is deliberately free of Python objects so the hot loops
compile to machine code.  The public modules (`sampling`, `process`,
`ensemble`, `theory`) wrap these kernels behind typed interfaces.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._rng import binomial, next_double, seed_state

# status codes returned by simulate_core
STATUS_OK = 0
STATUS_OVERFLOW = 1

# beyond this a draw can no longer be held in an int64 degree counter
_INT64_DRAW_LIMIT = 4.0e18

# weight updates between full Fenwick rebuilds when delta != 0
_REBUILD_EVERY = 1 << 20


@njit(cache=True, nogil=True)
def em_tail(alpha, k):
    """Tail sum  sum_{i>=k} i^(-alpha)  by fourth-order Euler-Maclaurin.

    Accurate to ~1e-16 relative for k >= 1e4; the dense-table region
    covers smaller k so the kernels never call this below the switch.
    """
    integral = k ** (1.0 - alpha) / (alpha - 1.0)
    half = 0.5 * k ** (-alpha)
    d1 = alpha * k ** (-alpha - 1.0) / 12.0
    d3 = alpha * (alpha + 1.0) * (alpha + 2.0) * k ** (-alpha - 3.0) / 720.0
    return integral + half + d1 - d3


@njit(cache=True, nogil=True)
def _bisect_left(cdf, u, lo, hi):
    # smallest idx in [lo, hi) with cdf[idx] >= u
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] < u:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True)
def inv_cdf(cdf, alpha, beta_eff, tail_offset, cap, u):
    """Smallest support value k with CDF(k) >= u, returned as float64.

    ``cdf[i]`` holds CDF(i+1) for the dense head of the support.  Beyond
    the table the survival function is ``beta_eff * (ztail(k+1) -
    tail_offset)`` and k is located by doubling plus bisection on the
    Euler-Maclaurin tail.  ``cap < 0`` means unbounded support.  Values
    beyond 2^53 are resolved only to float precision.
    """
    size = cdf.shape[0]
    last = cdf[size - 1]
    if u < last:
        if size > 80 and u < cdf[63]:
            idx = _bisect_left(cdf, u, 0, 64)
        else:
            idx = _bisect_left(cdf, u, 0, size)
        while cdf[idx] <= 0.0:
            idx += 1
        return float(idx + 1)
    if beta_eff <= 0.0 or (cap >= 0 and size >= cap):
        # finite law fully tabulated: clamp to the largest massive value
        idx = size - 1
        while idx > 0 and cdf[idx - 1] >= last:
            idx -= 1
        return float(idx + 1)
    target = (1.0 - u) / beta_eff + tail_offset
    lo = float(size)
    hi = lo
    while True:
        hi = hi * 2.0
        if cap >= 0 and hi >= cap:
            hi = float(cap)
            break
        if em_tail(alpha, hi + 1.0) <= target:
            break
    while hi - lo > 1.0 and hi - lo > lo * 1e-15:
        mid = np.floor(0.5 * (lo + hi))
        if mid <= lo:
            mid = lo + 1.0
        if mid >= hi:
            break
        if em_tail(alpha, mid + 1.0) <= target:
            hi = mid
        else:
            lo = mid
    return hi


@njit(cache=True, nogil=True)
def draw_many(cdf, alpha, beta_eff, tail_offset, cap, n, seed):
    """n independent draws as float64 (huge tail values stay representable)."""
    state = seed_state(seed)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = inv_cdf(cdf, alpha, beta_eff, tail_offset, cap, next_double(state))
    return out


@njit(cache=True, nogil=True)
def sums_of_draws(cdf, alpha, beta_eff, tail_offset, cap, n_sums, per_sum, seed):
    """Row sums of an (n_sums, per_sum) array of draws, without storing it."""
    state = seed_state(seed)
    out = np.empty(n_sums, dtype=np.float64)
    for i in range(n_sums):
        acc = 0.0
        for _ in range(per_sum):
            acc += inv_cdf(cdf, alpha, beta_eff, tail_offset, cap, next_double(state))
        out[i] = acc
    return out


# ----------------------------------------------------------------------
# Fenwick tree over per-vertex weights (1-based positions)


@njit(cache=True, nogil=True)
def _fenwick_update(tree, pos, value, size):
    j = pos
    while j <= size:
        tree[j] += value
        j += j & (-j)


@njit(cache=True, nogil=True)
def _fenwick_find(tree, mask, value, size):
    # largest position p with prefix(p) <= value; selected slot is p+1
    idx = 0
    rem = value
    bit = mask
    while bit != 0:
        nxt = idx + bit
        if nxt <= size and tree[nxt] <= rem:
            idx = nxt
            rem -= tree[nxt]
        bit >>= 1
    return idx  # 0-based vertex index of position idx+1


@njit(cache=True, nogil=True)
def _fenwick_rebuild(tree, degrees, delta, count, size):
    for j in range(size + 1):
        tree[j] = 0.0
    for i in range(count):
        tree[i + 1] = degrees[i] + delta
    for i in range(1, size + 1):
        j = i + (i & (-i))
        if j <= size:
            tree[j] += tree[i]


@njit(cache=True, nogil=True)
def select_counts(weights, n_draws, seed):
    """Frequency of Fenwick-guided selection per slot, for a frozen state."""
    m = weights.shape[0]
    size = m
    mask = 1
    while (mask << 1) <= size:
        mask <<= 1
    tree = np.zeros(size + 1, dtype=np.float64)
    total = 0.0
    for i in range(m):
        tree[i + 1] = weights[i]
        total += weights[i]
    for i in range(1, size + 1):
        j = i + (i & (-i))
        if j <= size:
            tree[j] += tree[i]
    state = seed_state(seed)
    counts = np.zeros(m, dtype=np.int64)
    for _ in range(n_draws):
        v = _fenwick_find(tree, mask, next_double(state) * total, size)
        if v >= m:
            v = m - 1
        counts[v] += 1
    return counts


# ----------------------------------------------------------------------
# PARID core


@njit(cache=True, nogil=True)
def simulate_core(
    cdf,
    alpha,
    beta_eff,
    tail_offset,
    cap,
    delta,
    steps,
    seed,
    checkpoints,
    k_max,
    mean_x,
):
    """Run the attachment process for ``steps`` steps.

    Per-step semantics: draw X, add vertex v_tau, aim each of the X edges
    independently at an existing vertex with probability proportional to
    its pre-step weight ``degree + delta`` (weights frozen within the
    step), then apply all degree increments at once.  Steps whose X
    exceeds 8x the vertex count sample the per-vertex hit counts through
    a chain of conditional binomials instead of per-edge tree descents;
    the joint law of the increments is identical.

    Returns (counts, lam_trace, degrees, lam, max_edge_dev, status,
    fail_tau) where ``counts[c, k-1]`` is the number of degree-k vertices
    at checkpoint c for k <= k_max, ``counts[c, k_max]`` the overflow
    bucket, and ``max_edge_dev`` the largest |L(tau) - tau * mean_x| seen
    (skipped when mean_x <= 0).
    """
    n = steps + 1
    degrees = np.zeros(n, dtype=np.int64)
    tree = np.zeros(n + 1, dtype=np.float64)
    pend = np.zeros(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    suffix = np.empty(n, dtype=np.float64)
    ncp = checkpoints.shape[0]
    counts = np.zeros((ncp, k_max + 1), dtype=np.int64)
    lam_trace = np.zeros(ncp, dtype=np.int64)

    mask = 1
    while (mask << 1) <= n:
        mask <<= 1

    state = seed_state(seed)
    status = STATUS_OK
    fail_tau = np.int64(0)
    max_dev = 0.0
    next_cp = 0
    updates_since_rebuild = 0

    # step 1: two vertices joined by X_1 parallel edges
    x1f = inv_cdf(cdf, alpha, beta_eff, tail_offset, cap, next_double(state))
    if x1f > _INT64_DRAW_LIMIT:
        return counts, lam_trace, degrees, np.int64(0), max_dev, STATUS_OVERFLOW, np.int64(1)
    x1 = np.int64(x1f)
    degrees[0] = x1
    degrees[1] = x1
    lam = x1
    count = 2
    _fenwick_update(tree, 1, x1 + delta, n)
    _fenwick_update(tree, 2, x1 + delta, n)
    if mean_x > 0.0:
        dev = abs(float(lam) - mean_x)
        if dev > max_dev:
            max_dev = dev
    if next_cp < ncp and checkpoints[next_cp] == 1:
        _snapshot(degrees, count, counts, next_cp, k_max)
        lam_trace[next_cp] = lam
        next_cp += 1

    for tau in range(2, steps + 1):
        xf = inv_cdf(cdf, alpha, beta_eff, tail_offset, cap, next_double(state))
        if xf > _INT64_DRAW_LIMIT or float(lam) + xf > _INT64_DRAW_LIMIT:
            status = STATUS_OVERFLOW
            fail_tau = np.int64(tau)
            break
        x = np.int64(xf)
        total_w = 2.0 * float(lam) + count * delta
        n_touched = 0

        if x > 8 * count:
            # multinomial via conditional binomials over frozen weights
            acc = 0.0
            for i in range(count - 1, -1, -1):
                acc += degrees[i] + delta
                suffix[i] = acc
            rem = x
            for i in range(count):
                if rem <= 0:
                    break
                if i == count - 1:
                    c = rem
                else:
                    p = (degrees[i] + delta) / suffix[i]
                    if p >= 1.0:
                        c = rem
                    elif p <= 0.0:
                        c = np.int64(0)
                    else:
                        c = binomial(state, rem, p)
                if c > 0:
                    pend[i] = c
                    touched[n_touched] = i
                    n_touched += 1
                    rem -= c
        else:
            for _ in range(x):
                v = _fenwick_find(tree, mask, next_double(state) * total_w, n)
                if v >= count:
                    v = count - 1
                if pend[v] == 0:
                    touched[n_touched] = v
                    n_touched += 1
                pend[v] += 1

        # end of step: apply the buffered increments, then add v_tau
        for j in range(n_touched):
            v = touched[j]
            inc = pend[v]
            pend[v] = 0
            degrees[v] += inc
            _fenwick_update(tree, v + 1, float(inc), n)
        degrees[count] = x
        _fenwick_update(tree, count + 1, x + delta, n)
        count += 1
        lam += x
        updates_since_rebuild += n_touched + 1
        if delta != 0.0 and updates_since_rebuild >= _REBUILD_EVERY:
            _fenwick_rebuild(tree, degrees, delta, count, n)
            updates_since_rebuild = 0

        if mean_x > 0.0:
            dev = abs(float(lam) - tau * mean_x)
            if dev > max_dev:
                max_dev = dev
        if next_cp < ncp and checkpoints[next_cp] == tau:
            _snapshot(degrees, count, counts, next_cp, k_max)
            lam_trace[next_cp] = lam
            next_cp += 1

    return counts, lam_trace, degrees, np.int64(lam), max_dev, status, fail_tau


@njit(cache=True, nogil=True)
def _snapshot(degrees, count, counts, cp_index, k_max):
    for i in range(count):
        d = degrees[i]
        if d <= k_max:
            counts[cp_index, d - 1] += 1
        else:
            counts[cp_index, k_max] += 1


# ----------------------------------------------------------------------
# Batched tiny runs for oracle comparison and within-step statistics


@njit(cache=True, nogil=True)
def run_batch_encoded(cdf, delta, steps, n_runs, seed, sort_degrees):
    """Run ``n_runs`` tiny processes; encode final degrees into int64 codes.

    Each vertex degree takes a 10-bit field (vertex 0 in the lowest
    bits); ``sort_degrees`` nonzero encodes the sorted degree multiset
    instead of the vertex-ordered vector.  The initial-degree law must be
    fully covered by the table (finite support).  Runs where a degree
    reaches 1024 are encoded as -1.
    """
    state = seed_state(seed)
    out = np.empty(n_runs, dtype=np.int64)
    nv = steps + 1
    degs = np.empty(nv, dtype=np.int64)
    frozen = np.empty(nv, dtype=np.float64)
    for r in range(n_runs):
        u = next_double(state)
        x1 = np.int64(inv_cdf(cdf, 0.0, 0.0, 0.0, cdf.shape[0], u))
        for i in range(nv):
            degs[i] = 0
        degs[0] = x1
        degs[1] = x1
        lam = x1
        count = 2
        for _tau in range(2, steps + 1):
            u = next_double(state)
            x = np.int64(inv_cdf(cdf, 0.0, 0.0, 0.0, cdf.shape[0], u))
            total_w = 0.0
            for i in range(count):
                frozen[i] = degs[i] + delta
                total_w += frozen[i]
            for _e in range(x):
                val = next_double(state) * total_w
                acc = 0.0
                v = count - 1
                for i in range(count):
                    acc += frozen[i]
                    if val < acc:
                        v = i
                        break
                degs[v] += 1
            degs[count] = x
            count += 1
            lam += x
        code = np.int64(0)
        ok = True
        if sort_degrees != 0:
            # insertion sort, count <= 6
            for i in range(1, count):
                key = degs[i]
                j = i - 1
                while j >= 0 and degs[j] > key:
                    degs[j + 1] = degs[j]
                    j -= 1
                degs[j + 1] = key
        for i in range(count):
            if degs[i] >= 1024:
                ok = False
                break
            code |= degs[i] << (10 * i)
        out[r] = code if ok else np.int64(-1)
    return out
