"""Monte Carlo helpers: tiny-run distributions and sampler diagnostics."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np
from scipy import stats

from ._kernels import draw_many, run_batch_encoded
from .sampling import FiniteLaw, InitialDegreeLaw, PowerLawSpec


def _decode(code: int, n_vertices: int) -> tuple[int, ...]:
    return tuple((code >> (10 * i)) & 0x3FF for i in range(n_vertices))


def _batch(law: FiniteLaw, delta: float, t: int, n_runs: int, seed: int,
           sort_degrees: bool) -> dict[tuple[int, ...], float]:
    table = law.kernel_args()[0]
    codes = run_batch_encoded(
        table, float(delta), np.int64(t), np.int64(n_runs), np.uint64(seed),
        np.int64(1 if sort_degrees else 0),
    )
    values, counts = np.unique(codes, return_counts=True)
    out: dict[tuple[int, ...], float] = {}
    for code, cnt in zip(values, counts):
        if code < 0:
            raise OverflowError("degree >= 1024 in a tiny-run batch")
        out[_decode(int(code), t + 1)] = cnt / n_runs
    return out


def small_run_distribution(law: FiniteLaw, delta: float, t: int,
                           n_runs: int, seed: int) -> dict[tuple[int, ...], float]:
    """Empirical law of the final sorted degree multiset over n_runs."""
    return _batch(law, delta, t, n_runs, seed, sort_degrees=True)


def small_run_vectors(law: FiniteLaw, delta: float, t: int,
                      n_runs: int, seed: int) -> dict[tuple[int, ...], float]:
    """Empirical law of the vertex-ordered degree vector over n_runs."""
    return _batch(law, delta, t, n_runs, seed, sort_degrees=False)


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def sample_counts(law: InitialDegreeLaw, n_draws: int, seed: int) -> Counter:
    """Value counts of n_draws inverse-CDF samples from the law."""
    table, alpha, beta_eff, tail_offset, cap = law.kernel_args()
    values = draw_many(table, alpha, beta_eff, tail_offset, np.int64(cap),
                       np.int64(n_draws), np.uint64(seed))
    counter: Counter = Counter()
    ints, cnts = np.unique(values, return_counts=True)
    for v, c in zip(ints, cnts):
        counter[int(v)] += int(c)
    return counter


def chi_square_pmf_test(
    law: PowerLawSpec, n_draws: int, seed: int, min_expected: float = 10.0
) -> tuple[float, float, int]:
    """Chi-square goodness of fit of sampler draws against the exact pmf.

    Individual bins for values with expected count >= min_expected, one
    collapsed tail bin for the rest.  Returns (statistic, p_value, dof).
    """
    counts = sample_counts(law, n_draws, seed)
    # widest value kept as its own bin
    b = 1
    while law.pmf(b + 1) * n_draws >= min_expected:
        b += 1
        if law.cap is not None and b >= law.cap:
            break
    observed = []
    expected = []
    for i in range(1, b + 1):
        observed.append(counts.pop(i, 0))
        expected.append(law.pmf(i) * n_draws)
    tail_obs = sum(counts.values())
    tail_exp = law.survival(b + 1) * n_draws
    if tail_exp > 0:
        observed.append(tail_obs)
        expected.append(tail_exp)
    observed_arr = np.asarray(observed, dtype=np.float64)
    expected_arr = np.asarray(expected, dtype=np.float64)
    # renormalize the tiny float mismatch so the test compares shapes
    expected_arr *= observed_arr.sum() / expected_arr.sum()
    stat = float(np.sum((observed_arr - expected_arr) ** 2 / expected_arr))
    dof = len(observed_arr) - 1
    p_value = float(stats.chi2.sf(stat, dof))
    return stat, p_value, dof
