"""RNG kernel tests against independent pure-Python references."""

import numpy as np
import pytest
from scipy import stats

from parid._rng import binomial, mix_seed, next_double, next_u64, seed_state, splitmix64

M64 = (1 << 64) - 1


def py_splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return (z ^ (z >> 31)) & M64


def py_rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & M64


class PyXoshiro:
    def __init__(self, seed: int):
        self.s = []
        x = seed
        for _ in range(4):
            x = (x + 0x9E3779B97F4A7C15) & M64
            self.s.append(py_splitmix64(x))

    def next(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (py_rotl((s0 + s3) & M64, 23) + s0) & M64
        t = (s1 << 17) & M64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = py_rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result


@pytest.mark.parametrize("x", [0, 1, 42, 2**63, 0xDEADBEEF])
def test_splitmix64_matches_reference(x):
    assert int(splitmix64(np.uint64(x))) == py_splitmix64(x)


@pytest.mark.parametrize("seed", [0, 1, 123456789, 2**64 - 1])
def test_xoshiro_matches_reference(seed):
    state = seed_state(np.uint64(seed))
    ref = PyXoshiro(seed)
    for _ in range(200):
        assert int(next_u64(state)) == ref.next()


def test_next_double_range_and_determinism():
    state = seed_state(np.uint64(7))
    values = [float(next_double(state)) for _ in range(10_000)]
    assert all(0.0 <= v < 1.0 for v in values)
    state2 = seed_state(np.uint64(7))
    assert values[:100] == [float(next_double(state2)) for _ in range(100)]
    # crude uniformity check
    assert abs(np.mean(values) - 0.5) < 0.02


def test_mix_seed_no_collisions_on_million_indices():
    n = 1_000_000
    seeds = np.empty(n, dtype=np.uint64)
    master = np.uint64(123)
    for i in range(n):
        seeds[i] = mix_seed(master, np.uint64(i))
    assert len(np.unique(seeds)) == n


def test_mix_seed_differs_across_masters():
    a = mix_seed(np.uint64(1), np.uint64(0))
    b = mix_seed(np.uint64(2), np.uint64(0))
    assert a != b


@pytest.mark.parametrize(
    "n,p",
    [
        (50, 0.1),  # inversion regime (n p <= 30)
        (40, 0.9),  # symmetry + inversion
        (1000, 0.3),  # BTPE regime
        (5000, 0.5),  # BTPE, symmetric
        (200, 0.37),
    ],
)
def test_binomial_chi_square_against_scipy(n, p):
    draws = 40_000
    state = seed_state(np.uint64(n * 1000 + int(p * 100)))
    counts = np.zeros(n + 1, dtype=np.int64)
    for _ in range(draws):
        counts[int(binomial(state, np.int64(n), p))] += 1
    # collapse bins with expected < 10
    pmf = stats.binom.pmf(np.arange(n + 1), n, p) * draws
    keep = pmf >= 10
    observed = np.concatenate((counts[keep], [counts[~keep].sum()]))
    expected = np.concatenate((pmf[keep], [pmf[~keep].sum()]))
    if expected[-1] == 0:
        observed, expected = observed[:-1], expected[:-1]
    expected *= observed.sum() / expected.sum()
    stat = float(np.sum((observed - expected) ** 2 / expected))
    dof = len(expected) - 1
    assert stats.chi2.sf(stat, dof) > 1e-4


def test_binomial_huge_n_moments():
    # far beyond the exact-table regimes; mean/std must track n p
    state = seed_state(np.uint64(99))
    n, p = np.int64(10**12), 1e-9
    vals = np.array([float(binomial(state, n, p)) for _ in range(20_000)])
    mu, sd = n * p, np.sqrt(n * p * (1 - p))
    assert abs(np.mean(vals) - mu) < 5 * sd / np.sqrt(len(vals))
    assert abs(np.std(vals) - sd) / sd < 0.05


def test_binomial_edge_cases():
    state = seed_state(np.uint64(5))
    assert binomial(state, np.int64(0), 0.5) == 0
    assert binomial(state, np.int64(10), 0.0) == 0
    assert binomial(state, np.int64(10), 1.0) == 10
