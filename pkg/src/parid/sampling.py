"""Exact discrete power laws: normalizers, truncations, sampling, moments.

The initial-degree law is ``P(X = i) = normalizer * i**(-alpha)`` on the
positive integers, optionally conditioned below a cap.  Everything is
evaluated through one numeric primitive, :func:`zeta_tail`, so the pmf,
CDF, normalizers and tail probabilities are mutually consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._kernels import em_tail, inv_cdf

#: dense inverse-CDF table size; draws beyond it resolve analytically
TABLE_LIMIT = 1 << 20

# switch from explicit summation to the Euler-Maclaurin remainder;
# the extra summed stretch is capped so huge k stays O(1)-ish
_EM_FLOOR = 10_000
_MAX_EXTRA_TERMS = 5_000_000
_PURE_EM_BEYOND = 1e12


def zeta_tail(alpha: float, k) -> float:
    """Tail sum  sum_{i>=k} i**(-alpha)  to ~1e-12 relative accuracy.

    Explicit partial summation up to a switch point, then a fourth-order
    Euler-Maclaurin remainder.  ``zeta_tail(alpha, 1)`` is the zeta
    function itself.
    """
    if alpha <= 1.0:
        raise ValueError(f"tail sum diverges for alpha={alpha} <= 1")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    kf = float(k)
    if kf > _PURE_EM_BEYOND:
        # the remainder alone is far below 1e-12 error here, and float64
        # can no longer step through consecutive integers anyway
        return float(em_tail(alpha, kf))
    k = int(k)
    switch = max(_EM_FLOOR, 10 * k)
    switch = min(switch, k + _MAX_EXTRA_TERMS)
    total = 0.0
    chunk = 1 << 20
    for start in range(k, switch, chunk):
        stop = min(switch, start + chunk)
        total += float(np.sum(np.arange(start, stop, dtype=np.float64) ** (-alpha)))
    return total + float(em_tail(alpha, float(switch)))


def beta_normalizer(alpha: float) -> float:
    """Normalizing constant of the untruncated law, 1 / zeta(alpha)."""
    return 1.0 / zeta_tail(alpha, 1)


def truncation_point(alpha: float, t: int) -> int:
    """Inclusive support cap for the t-dependent truncation scheme.

    The support is {i : i < M} with M = c * t**(1/(alpha-1)) + 1 for
    alpha in (1,2) and M = t*log(log t) + 1 for alpha = 2 (natural logs),
    i.e. the cap is the largest integer strictly below M.
    """
    if t < 1:
        raise ValueError("t must be a positive integer")
    if alpha == 2.0:
        if t < 3:
            raise ValueError("alpha=2 truncation needs t >= 3 (log log t > 0)")
        x = t * math.log(math.log(t))
    elif 1.0 < alpha < 2.0:
        c = scale_constants(alpha, None).c
        if t < c ** (1.0 - alpha):
            raise ValueError(f"t={t} below the minimum c**(1-alpha) for alpha={alpha}")
        x = c * float(t) ** (1.0 / (alpha - 1.0))
    else:
        raise ValueError(f"no truncation scheme for alpha={alpha}")
    m = math.floor(x)
    return int(m) + (1 if m < x else 0)


@dataclass(frozen=True)
class PowerLawSpec:
    """A (possibly truncated) discrete power law, ready for sampling.

    ``normalizer`` multiplies i**(-alpha) on the support; for a truncated
    law it equals the untruncated normalizer divided by P(X <= cap).
    """

    alpha: float
    normalizer: float
    cap: int | None = None  # inclusive; None = unbounded support
    kind: str = "untruncated"

    def __post_init__(self):
        if self.alpha <= 1.0:
            raise ValueError(f"alpha must be > 1, got {self.alpha}")
        if self.cap is not None and self.cap < 1:
            raise ValueError(f"cap must be >= 1, got {self.cap}")

    @classmethod
    def untruncated(cls, alpha: float) -> "PowerLawSpec":
        return cls(alpha=alpha, normalizer=beta_normalizer(alpha))

    @classmethod
    def truncated(cls, alpha: float, cap: int) -> "PowerLawSpec":
        beta = beta_normalizer(alpha)
        p_below = 1.0 - beta * zeta_tail(alpha, cap + 1)
        return cls(alpha=alpha, normalizer=beta / p_below, cap=cap, kind="truncated")

    @classmethod
    def paper_truncated(cls, alpha: float, t: int) -> "PowerLawSpec":
        """Truncate at the t-dependent threshold of the analysis."""
        return cls.truncated(alpha, truncation_point(alpha, t))

    def pmf(self, i: int) -> float:
        if i < 1 or (self.cap is not None and i > self.cap):
            return 0.0
        return self.normalizer * float(i) ** (-self.alpha)

    def survival(self, k: int) -> float:
        """P(X >= k)."""
        if k <= 1:
            return 1.0
        if self.cap is not None and k > self.cap:
            return 0.0
        tail = zeta_tail(self.alpha, k)
        if self.cap is not None:
            tail -= zeta_tail(self.alpha, self.cap + 1)
        return self.normalizer * tail

    def cdf(self, k: int) -> float:
        return 1.0 - self.survival(k + 1)

    @cached_property
    def _table(self) -> np.ndarray:
        size = TABLE_LIMIT if self.cap is None else min(self.cap, TABLE_LIMIT)
        i = np.arange(1, size + 1, dtype=np.float64)
        return np.cumsum(self.normalizer * i ** (-self.alpha))

    @cached_property
    def _tail_args(self) -> tuple[float, float, int]:
        """(beta_eff, tail_offset, cap) for the analytic-tail kernels."""
        if self.cap is not None and self.cap <= TABLE_LIMIT:
            return 0.0, 0.0, self.cap
        if self.cap is None:
            return self.normalizer, 0.0, -1
        return self.normalizer, zeta_tail(self.alpha, self.cap + 1), self.cap

    def kernel_args(self) -> tuple[np.ndarray, float, float, float, int]:
        """Argument pack consumed by the jitted kernels."""
        beta_eff, tail_offset, cap = self._tail_args
        return self._table, self.alpha, beta_eff, tail_offset, cap

    @property
    def min_support(self) -> int:
        return 1


def sample(spec: PowerLawSpec, u: float) -> int:
    """Inverse-CDF draw: the smallest k with CDF(k) >= u, u in [0, 1)."""
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must lie in [0, 1), got {u}")
    table, alpha, beta_eff, tail_offset, cap = spec.kernel_args()
    return int(inv_cdf(table, alpha, beta_eff, tail_offset, cap, u))


def truncated_moments(spec: PowerLawSpec) -> tuple[float, float]:
    """Exact (mean, second moment) of the law.

    Truncated laws get exact finite sums; an untruncated law is accepted
    only when both moments converge (alpha > 3).
    """
    if spec.cap is None:
        if spec.alpha <= 3.0:
            raise ValueError(f"moments diverge for untruncated alpha={spec.alpha}")
        mean = spec.normalizer * zeta_tail(spec.alpha - 1.0, 1)
        second = spec.normalizer * zeta_tail(spec.alpha - 2.0, 1)
        return mean, second
    mean = spec.normalizer * _finite_power_sum(1.0 - spec.alpha, spec.cap)
    second = spec.normalizer * _finite_power_sum(2.0 - spec.alpha, spec.cap)
    return mean, second


def _finite_power_sum(exponent: float, cap: int) -> float:
    """sum_{i=1}^{cap} i**exponent, chunked."""
    total = 0.0
    chunk = 1 << 22
    for start in range(1, cap + 1, chunk):
        stop = min(cap + 1, start + chunk)
        total += float(np.sum(np.arange(start, stop, dtype=np.float64) ** exponent))
    return total


@dataclass(frozen=True)
class HeavyTailConstants:
    """Scale constants of the alpha in (1,2) regime.

    ``c`` sets the truncation threshold c * t**(1/(alpha-1)); ``big_c(t)``
    is the edge-growth constant whose t -> infinity limit is ``c_inf``.
    """

    alpha: float
    c: float
    c_inf: float

    def big_c(self, t: int) -> float:
        beta = beta_normalizer(self.alpha)
        cap = truncation_point(self.alpha, t)
        p_below = 1.0 - beta * zeta_tail(self.alpha, cap + 1)
        return beta * (2.0 * self.c) ** (2.0 - self.alpha) / ((2.0 - self.alpha) * p_below)

    def edge_scale(self, t: int) -> float:
        """Typical total-edge scale C(alpha,t) * t**(1/(alpha-1))."""
        return self.big_c(t) * float(t) ** (1.0 / (self.alpha - 1.0))


def scale_constants(alpha: float, t: int | None = None) -> HeavyTailConstants:
    """Constants c(alpha) and C limit for alpha in (1,2).

    ``t`` is accepted for interface symmetry but the returned object
    evaluates C at any t via ``big_c``.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"scale constants are defined for alpha in (1,2), got {alpha}")
    beta = beta_normalizer(alpha)
    c = ((alpha - 1.0) / (8.0 * beta)) ** (1.0 / (1.0 - alpha))
    c_inf = (2.0 * c) ** (2.0 - alpha) * beta / (2.0 - alpha)
    return HeavyTailConstants(alpha=alpha, c=c, c_inf=c_inf)


@dataclass(frozen=True)
class FiniteLaw:
    """Arbitrary finite initial-degree law on {1, ..., m}.

    Used by the exact-enumeration comparisons and by tests that need
    degenerate laws a power law cannot express (e.g. X identically 2).
    """

    probs: tuple[float, ...]  # probs[i] = P(X = i+1)

    def __post_init__(self):
        if not self.probs:
            raise ValueError("empty pmf")
        if any(p < 0 for p in self.probs):
            raise ValueError("negative probability")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"pmf sums to {total}, not 1 within 1e-9")
        if self.probs[-1] == 0:
            raise ValueError("top support value has zero mass; shrink the pmf")

    @classmethod
    def from_dict(cls, pmf: dict[int, float]) -> "FiniteLaw":
        m = max(pmf)
        if min(pmf) < 1:
            raise ValueError("support must be positive integers")
        return cls(tuple(float(pmf.get(i, 0.0)) for i in range(1, m + 1)))

    def pmf(self, i: int) -> float:
        if 1 <= i <= len(self.probs):
            return self.probs[i - 1]
        return 0.0

    @cached_property
    def _table(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.probs, dtype=np.float64))

    def kernel_args(self) -> tuple[np.ndarray, float, float, float, int]:
        return self._table, 0.0, 0.0, 0.0, len(self.probs)

    @property
    def min_support(self) -> int:
        for i, p in enumerate(self.probs):
            if p > 0:
                return i + 1
        raise ValueError("all-zero pmf")

    @property
    def cap(self) -> int:
        return len(self.probs)

    @property
    def mean(self) -> float:
        return math.fsum((i + 1) * p for i, p in enumerate(self.probs))


InitialDegreeLaw = PowerLawSpec | FiniteLaw
