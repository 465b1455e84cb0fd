"""Closed forms, oracles, and inequality checks for the degree process.

Contents: the alpha=2 limit degree distribution b_k and its finite-t
variant b'_k(t) with their defining recursion; a deterministic mean-field
iteration for E[R_k(t)]; an exact small-instance enumeration oracle; and
the inequality lemmas of the analysis turned into checkable predicates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import numpy as np

from ._kernels import sums_of_draws
from .sampling import (
    FiniteLaw,
    InitialDegreeLaw,
    PowerLawSpec,
    beta_normalizer,
    scale_constants,
    truncation_point,
    zeta_tail,
)


# ----------------------------------------------------------------------
# Limit law b_k and finite-t b'_k


def b_k(k: int) -> float:
    """Limit proportion of degree-k vertices at alpha = 2.

    b_k = 2 beta(2) / (k (k+1) (k+2)) * sum_{i<=k} (1 + 1/i).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    beta2 = beta_normalizer(2.0)
    s = k + math.fsum(1.0 / i for i in range(1, k + 1))
    return 2.0 * beta2 * s / (k * (k + 1.0) * (k + 2.0))


def b_k_prime(k: int, t: int) -> float:
    """Finite-t variant of b_k, built from the t-truncated law; b'_0 = 0."""
    if k == 0:
        return 0.0
    if k < 0:
        raise ValueError("k must be >= 0")
    bpp, cap = _truncated_normalizer(t)
    m = min(k, cap)
    s = m + math.fsum(1.0 / i for i in range(1, m + 1))
    return 2.0 * bpp * s / (k * (k + 1.0) * (k + 2.0))


@lru_cache(maxsize=16)
def _truncated_normalizer(t: int) -> tuple[float, int]:
    spec = PowerLawSpec.paper_truncated(2.0, t)
    return spec.normalizer, spec.cap


@dataclass(frozen=True)
class TheoryTable:
    """b_k, b'_k(t) and the recursion residual over a k range."""

    alpha: float
    t: int
    k_values: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray
    residual: np.ndarray
    tail_remainder: float  # exact 1 - sum_{k<=k_max} b_k


def theory_table(k_max: int, t: int) -> TheoryTable:
    """Tabulate b_k, b'_k(t), and the recursion residual for k = 1..k_max.

    The residual is b'_k - [(k-1)/2 b'_{k-1} - k/2 b'_k + P(Z=k)] and is
    zero in exact arithmetic for every k.
    """
    beta2 = beta_normalizer(2.0)
    bpp, cap = _truncated_normalizer(t)
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    # prefix sums of (1 + 1/i), capped at the truncation point
    ones_over = np.cumsum(1.0 / ks) + ks
    if k_max > cap:
        capped = float(ones_over[cap - 1])
        s = np.where(ks <= cap, ones_over, capped)
    else:
        s = ones_over
    denom = ks * (ks + 1.0) * (ks + 2.0)
    b = 2.0 * beta2 * ones_over / denom
    b_prime = 2.0 * bpp * s / denom

    pz = np.where(ks <= cap, bpp * ks ** (-2.0), 0.0)
    b_prev = np.concatenate(([0.0], b_prime[:-1]))
    residual = b_prime - ((ks - 1.0) / 2.0 * b_prev - ks / 2.0 * b_prime + pz)

    # exact identity: 1 - sum_{k<=K} b_k = P(X > K) + (K/2) b_K
    tail = beta2 * zeta_tail(2.0, k_max + 1) + 0.5 * k_max * float(b[-1])
    return TheoryTable(
        alpha=2.0,
        t=t,
        k_values=np.arange(1, k_max + 1, dtype=np.int64),
        b=b,
        b_prime=b_prime,
        residual=residual,
        tail_remainder=tail,
    )


def b_prime_total(t: int, k_terms: int | None = None) -> float:
    """sum_{k>=1} b'_k as a finite sum plus the exact cubic-decay tail.

    Beyond the truncation cap the recursion is source-free and b'_k
    telescopes, so sum_{k>K} b'_k = beta'' S_cap / ((K+1)(K+2)) exactly.
    The identity value is 1.
    """
    bpp, cap = _truncated_normalizer(t)
    big_k = cap if k_terms is None else max(k_terms, cap)
    tbl = theory_table(big_k, t)
    s_cap = cap + math.fsum(1.0 / i for i in range(1, cap + 1))
    tail = bpp * s_cap / ((big_k + 1.0) * (big_k + 2.0))
    return float(np.sum(tbl.b_prime)) + tail


# ----------------------------------------------------------------------
# Mean-field iteration for E[R_k(t)]


def mean_field_expectation(
    t: int,
    k_max: int,
    law: InitialDegreeLaw | None = None,
) -> np.ndarray:
    """Deterministic iteration of the expected degree-count update.

    E[R_k(tau+1)] = E[R_k] + ((k-1)/2) E[R_{k-1}]/tau - (k/2) E[R_k]/tau
    + P(X=k), iterated from E[R_k(1)] = 2 P(X=k).  This drops all error
    terms of the exact dynamics, so it is a mean-field approximation (it
    is exact only when X is deterministic); it conserves
    sum_k E[R_k(tau)] = tau + 1 by construction.  The default law is the
    t-truncated alpha=2 law (delta = 0 dynamics).

    Returns E[R_k(t)] for k = 1..k_max; the overflow mass lives in the
    last extra slot, so the array has k_max + 1 entries.
    """
    if law is None:
        law = PowerLawSpec.paper_truncated(2.0, t)
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    pz = np.array([law.pmf(k) for k in range(1, k_max + 1)], dtype=np.float64)
    if isinstance(law, FiniteLaw):
        p_tail = max(0.0, 1.0 - float(np.sum(pz)))
    else:
        p_tail = law.survival(k_max + 1)
    r = 2.0 * pz
    overflow = 2.0 * p_tail
    half_in = (ks - 1.0) / 2.0
    half_out = ks / 2.0
    for tau in range(1, t):
        shifted = np.concatenate(([0.0], r[:-1]))
        out_top = half_out[-1] * r[-1] / tau
        r = r + (half_in * shifted - half_out * r) / tau + pz
        overflow += out_top + p_tail
    return np.concatenate((r, [overflow]))


# ----------------------------------------------------------------------
# Exact enumeration oracle for tiny instances


class EnumerationGuardError(RuntimeError):
    """Enumeration refused: expanded state space exceeds the work guard."""


_WORK_GUARD = 10_000_000


def exact_enumeration_oracle(
    pmf: Mapping[int, float] | FiniteLaw,
    delta: float,
    t: int,
) -> dict[tuple[int, ...], Fraction]:
    """Exact joint law of the final degree multiset after t steps.

    Exhaustive expansion over initial-degree values and per-step edge
    placements, merged on the sorted degree multiset (vertex identities
    are exchangeable given degrees).  All arithmetic is rational, so the
    returned probabilities are exact for the given (binary-float) inputs.
    Guaranteed cheap for cap <= 3 and t <= 4; anything bigger runs until
    the 1e7 expanded-work guard trips.
    """
    if isinstance(pmf, FiniteLaw):
        law = {i + 1: p for i, p in enumerate(pmf.probs) if p > 0}
    else:
        law = {int(k): float(p) for k, p in pmf.items() if p > 0}
    if not law or min(law) < 1:
        raise ValueError("pmf support must be positive integers")
    fr_law = {k: Fraction(p) for k, p in law.items()}
    d = Fraction(delta)
    if d + min(law) <= 0:
        raise ValueError("delta + min support must be positive")

    work = 0
    states: dict[tuple[int, ...], Fraction] = {}
    for x, px in fr_law.items():
        states[(x, x)] = states.get((x, x), Fraction(0)) + px

    for _tau in range(2, t + 1):
        new_states: dict[tuple[int, ...], Fraction] = {}
        for degs, prob in states.items():
            classes: dict[int, int] = {}
            for deg in degs:
                classes[deg] = classes.get(deg, 0) + 1
            cls = sorted(classes.items())
            total_w = Fraction(sum(degs)) + len(degs) * d
            cls_w = [(Fraction(deg) + d) * m / total_w for deg, m in cls]
            for x, px in fr_law.items():
                for comp, p_comp in _class_compositions(x, cls_w):
                    work += 1
                    if work > _WORK_GUARD:
                        raise EnumerationGuardError(
                            f"expanded work exceeds {_WORK_GUARD}; shrink cap or t"
                        )
                    base = prob * px * p_comp
                    _expand_splits(cls, comp, 0, base, [x], new_states)
        states = new_states
    return dict(sorted(states.items()))


def _class_compositions(x, cls_w):
    """All (composition, multinomial probability) over degree classes."""
    n_cls = len(cls_w)
    results = []

    def rec(ci, rem, p_acc, acc):
        if ci == n_cls - 1:
            results.append((acc + (rem,), p_acc * cls_w[ci] ** rem / math.factorial(rem)))
            return
        for j in range(rem + 1):
            rec(ci + 1, rem - j, p_acc * cls_w[ci] ** j / math.factorial(j), acc + (j,))

    rec(0, x, Fraction(math.factorial(x)), ())
    return results


def _partitions_at_most(j: int, parts: int):
    """Partitions of j into at most ``parts`` parts (descending tuples)."""
    def rec(rem, max_part, length):
        if rem == 0:
            yield ()
            return
        if length == 0:
            return
        for p in range(min(rem, max_part), 0, -1):
            for rest in rec(rem - p, p, length - 1):
                yield (p,) + rest

    yield from rec(j, j, parts)


def _expand_splits(cls, comp, ci, p_acc, degs_acc, out):
    """Distribute each class's edge count over its identical vertices."""
    if ci == len(cls):
        key = tuple(sorted(degs_acc))
        out[key] = out.get(key, Fraction(0)) + p_acc
        return
    (deg, m), j = cls[ci], comp[ci]
    if j == 0:
        _expand_splits(cls, comp, ci + 1, p_acc, degs_acc + [deg] * m, out)
        return
    for lam in _partitions_at_most(j, m):
        lam_full = lam + (0,) * (m - len(lam))
        # ordered assignments of j uniform edges realising this multiset
        n_assign = math.factorial(j)
        for v in lam_full:
            n_assign //= math.factorial(v)
        mult: dict[int, int] = {}
        for v in lam_full:
            mult[v] = mult.get(v, 0) + 1
        n_orders = math.factorial(m)
        for c in mult.values():
            n_orders //= math.factorial(c)
        p_split = Fraction(n_assign * n_orders, m**j)
        new_degs = degs_acc + [deg + inc for inc in lam_full]
        _expand_splits(cls, comp, ci + 1, p_acc * p_split, new_degs, out)


def oracle_expected_counts(
    dist: Mapping[tuple[int, ...], Fraction], k_max: int
) -> np.ndarray:
    """E[R_k] for k = 1..k_max under an enumerated multiset law."""
    out = np.zeros(k_max, dtype=np.float64)
    for degs, p in dist.items():
        fp = float(p)
        for deg in degs:
            if 1 <= deg <= k_max:
                out[deg - 1] += fp
    return out


def oracle_total_mass(dist: Mapping[tuple[int, ...], Fraction]) -> Fraction:
    return sum(dist.values(), Fraction(0))


# ----------------------------------------------------------------------
# Inequality lemmas as checkable predicates


@dataclass(frozen=True)
class BoundVerdict:
    """Outcome of one inequality check."""

    lemma_id: str  # 'L31' | 'L32' | 'edge_conc' | 'inv_moment'
    parameters: dict
    bound_value: float
    observed_value: float
    margin: float
    holds: bool

    def to_record(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "parameters": self.parameters,
            "bound_value": self.bound_value,
            "observed_value": self.observed_value,
            "margin": self.margin,
            "holds": self.holds,
        }


def check_lemma31(
    alpha: float, t: int, z: float, n_samples: int, seed: int
) -> BoundVerdict:
    """Total-edge upper bound: P(sum_{i<=t} X_i < z C t^(1/(alpha-1))) > 7/8 - 1/z.

    Monte Carlo with a one-sided 3-sigma margin: the verdict holds when
    estimate - 3 sigma still clears the bound.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("lemma requires alpha in (1,2)")
    if z <= 0:
        raise ValueError("z must be positive")
    cst = scale_constants(alpha)
    if t < cst.c ** (1.0 - alpha):
        raise ValueError(f"t={t} below c**(1-alpha)")
    threshold = z * cst.big_c(t) * float(t) ** (1.0 / (alpha - 1.0))
    spec = PowerLawSpec.untruncated(alpha)
    table, a, beta_eff, tail_offset, cap = spec.kernel_args()
    sums = sums_of_draws(
        table, a, beta_eff, tail_offset, np.int64(cap),
        np.int64(n_samples), np.int64(t), np.uint64(seed),
    )
    estimate = float(np.mean(sums < threshold))
    sigma = math.sqrt(max(estimate * (1.0 - estimate), 1e-12) / n_samples)
    bound = 7.0 / 8.0 - 1.0 / z
    margin = estimate - 3.0 * sigma - bound
    return BoundVerdict(
        lemma_id="L31",
        parameters={"alpha": alpha, "t": t, "z": z, "n_samples": n_samples, "seed": seed},
        bound_value=bound,
        observed_value=estimate,
        margin=margin,
        holds=margin >= 0.0,
    )


def check_lemma32(alpha: float, t: int, gamma: float) -> BoundVerdict:
    """Tail lower bound: P(X >= y) >= beta (2 gamma C)^(1-alpha) / ((alpha-1) t)
    at y = gamma C t^(1/(alpha-1)).  Fully analytic, no randomness.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("lemma requires alpha in (1,2)")
    cst = scale_constants(alpha)
    big_c = cst.big_c(t)
    y = gamma * big_c * float(t) ** (1.0 / (alpha - 1.0))
    if y <= 1.0:
        raise ValueError(f"gamma C t^(1/(alpha-1)) = {y} must exceed 1")
    beta = beta_normalizer(alpha)
    observed = beta * zeta_tail(alpha, math.ceil(y))
    bound = beta * (2.0 * gamma * big_c) ** (1.0 - alpha) / ((alpha - 1.0) * t)
    return BoundVerdict(
        lemma_id="L32",
        parameters={"alpha": alpha, "t": t, "gamma": gamma},
        bound_value=bound,
        observed_value=observed,
        margin=observed - bound,
        holds=observed >= bound,
    )


def check_inverse_moments(
    t: int, s: int, ell: int, n_samples: int, seed: int
) -> BoundVerdict:
    """Inverse-moment bound E[(sum_{j<=s} Z_j)^(-ell)] <= (1+o(1)) / (beta'' s ln t)^ell.

    The asymptotic slack is fixed at 1.1 for the verdict; the true ratio
    is recorded in ``observed_value`` for inspection.
    """
    if ell not in (1, 2):
        raise ValueError("ell must be 1 or 2")
    t0 = t / math.log(math.log(t))
    if not t0 <= s <= t:
        raise ValueError(f"s={s} outside [t/lnln t, t] = [{t0:.1f}, {t}]")
    spec = PowerLawSpec.paper_truncated(2.0, t)
    table, a, beta_eff, tail_offset, cap = spec.kernel_args()
    sums = sums_of_draws(
        table, a, beta_eff, tail_offset, np.int64(cap),
        np.int64(n_samples), np.int64(s), np.uint64(seed),
    )
    estimate = float(np.mean(sums ** (-float(ell))))
    denom = (spec.normalizer * s * math.log(t)) ** ell
    ratio = estimate * denom
    return BoundVerdict(
        lemma_id="inv_moment",
        parameters={"t": t, "s": s, "ell": ell, "n_samples": n_samples, "seed": seed},
        bound_value=1.1,
        observed_value=ratio,
        margin=1.1 - ratio,
        holds=ratio < 1.1,
    )


def check_product_inequality(xi, zeta_arr) -> bool:
    """Product-difference bound:

        prod(xi) - prod(zeta) <= prod(xi) * sum_j |1 - zeta_j / xi_j|

    for positive reals with prod(xi) >= prod(zeta) (caller swaps).  The
    comparison falls back to exact rational arithmetic whenever floats
    put the two sides within rounding distance of each other.
    """
    xi = list(map(float, xi))
    zeta_arr = list(map(float, zeta_arr))
    if len(xi) != len(zeta_arr):
        raise ValueError("length mismatch")
    if any(v <= 0 for v in xi) or any(v <= 0 for v in zeta_arr):
        raise ValueError("entries must be positive")
    prod_xi = math.prod(xi)
    prod_zeta = math.prod(zeta_arr)
    if prod_xi < prod_zeta:
        raise ValueError("precondition prod(xi) >= prod(zeta) violated; swap the arrays")
    lhs = prod_xi - prod_zeta
    rhs = prod_xi * math.fsum(abs(1.0 - zb / xb) for xb, zb in zip(xi, zeta_arr))
    gap = rhs - lhs
    if abs(gap) > 1e-9 * (abs(lhs) + abs(rhs) + 1e-30):
        return gap >= 0
    fx = [Fraction(v) for v in xi]
    fz = [Fraction(v) for v in zeta_arr]
    pf = math.prod(fx)
    lhs_f = pf - math.prod(fz)
    rhs_f = pf * sum(abs(1 - zb / xb) for xb, zb in zip(fx, fz))
    return lhs_f <= rhs_f


def product_inequality_sweep(
    n_cases: int, seed: int, max_len: int = 20, high: float = 10.0
) -> tuple[int, int]:
    """Randomized sweep; returns (cases checked, violations)."""
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(n_cases):
        n = int(rng.integers(1, max_len + 1))
        xi = rng.uniform(1e-9, high, size=n)
        zeta_arr = rng.uniform(1e-9, high, size=n)
        if math.prod(map(float, xi)) < math.prod(map(float, zeta_arr)):
            xi, zeta_arr = zeta_arr, xi
        if not check_product_inequality(xi, zeta_arr):
            violations += 1
    return n_cases, violations
