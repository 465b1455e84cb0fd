"""The PARID multigraph generator.

Growth rule: step 1 joins v0 and v1 with X_1 parallel edges; step tau >= 2
adds vertex v_tau with X_tau edges, each aimed independently at an
existing vertex v_i with probability (d_i + delta) / (2*Lambda + tau*delta)
evaluated on the pre-step degrees (edges landed within a step do not
shift the step's own probabilities).  Loops never occur, parallel edges
may.  Only degrees are tracked, never an edge list.

Two implementations share the same draw sequence: a plain-Python
reference (`init` / `step`, convenient for forcing draws in tests) and
the jitted kernel behind :func:`run` for production-size runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from ._rng import next_double, seed_state
from .sampling import (
    FiniteLaw,
    InitialDegreeLaw,
    PowerLawSpec,
    truncated_moments,
    zeta_tail,
)

#: untruncated alpha in (1,2) runs whose typical endpoint total exceeds
#: this are refused unless forced
ENDPOINT_GUARD = 1e8

UniformStream = Callable[[], float]


class ResourceGuardError(RuntimeError):
    """Run refused because its expected size exceeds the desk-scale guard."""


class EdgeCounterOverflow(RuntimeError):
    """The cumulative edge counter left the int64-safe range."""

    def __init__(self, tau: int):
        self.tau = tau
        super().__init__(f"edge counter overflow at step {tau}")


def xoshiro_stream(seed: int) -> UniformStream:
    """The kernel's own uniform stream, exposed to Python callers."""
    state = seed_state(np.uint64(seed))
    return lambda: float(next_double(state))


def fixed_stream(values: Iterable[float]) -> UniformStream:
    """Deterministic stream from a finite list (for forcing draws)."""
    it = iter(values)
    return lambda: next(it)


@dataclass(frozen=True)
class ParidConfig:
    """Parameters of one simulation run."""

    alpha: float
    delta: float
    steps: int
    seed: int
    truncation: str | int = "none"  # 'none' | 'paper_alpha_lt2' | 'paper_alpha_eq2' | cap
    checkpoints: tuple[int, ...] = ()
    k_max_tracked: int = 1000
    law: InitialDegreeLaw | None = None  # explicit law override (alpha/truncation ignored)

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.k_max_tracked < 1:
            raise ValueError("k_max_tracked must be >= 1")
        cps = tuple(sorted(set(int(c) for c in self.checkpoints)))
        object.__setattr__(self, "checkpoints", cps)
        if cps and (cps[0] < 1 or cps[-1] > self.steps):
            raise ValueError("checkpoints must lie in [1, steps]")
        law = self.resolved_law()
        if self.delta + law.min_support <= 0:
            raise ValueError(
                f"delta={self.delta} with minimum initial degree {law.min_support} "
                "gives non-positive attachment weights"
            )

    def resolved_law(self) -> InitialDegreeLaw:
        if self.law is not None:
            return self.law
        if self.truncation == "none":
            return PowerLawSpec.untruncated(self.alpha)
        if self.truncation == "paper_alpha_lt2":
            if not 1.0 < self.alpha < 2.0:
                raise ValueError("paper_alpha_lt2 truncation needs alpha in (1,2)")
            return PowerLawSpec.paper_truncated(self.alpha, self.steps)
        if self.truncation == "paper_alpha_eq2":
            if self.alpha != 2.0:
                raise ValueError("paper_alpha_eq2 truncation needs alpha = 2")
            return PowerLawSpec.paper_truncated(2.0, self.steps)
        if isinstance(self.truncation, int):
            return PowerLawSpec.truncated(self.alpha, self.truncation)
        raise ValueError(f"unknown truncation {self.truncation!r}")

    def law_mean(self) -> float | None:
        """Exact E[X], or None when it diverges."""
        law = self.resolved_law()
        if isinstance(law, FiniteLaw):
            return law.mean
        if law.cap is not None:
            return truncated_moments(law)[0]
        if law.alpha > 2.0:
            return law.normalizer * zeta_tail(law.alpha - 1.0, 1)
        return None

    def guard_value(self) -> float | None:
        """Typical endpoint total for untruncated alpha in (1,2), else None."""
        law = self.resolved_law()
        if isinstance(law, PowerLawSpec) and law.cap is None and 1.0 < law.alpha < 2.0:
            from .sampling import scale_constants

            cst = scale_constants(law.alpha)
            return cst.c_inf * float(self.steps) ** (1.0 / (law.alpha - 1.0))
        return None


class _PyFenwick:
    """Prefix-sum tree over per-vertex weights; mirrors the kernel's one."""

    def __init__(self, size: int):
        self.size = size
        self.tree = np.zeros(size + 1, dtype=np.float64)
        self.mask = 1
        while (self.mask << 1) <= size:
            self.mask <<= 1

    def update(self, pos: int, value: float) -> None:
        j = pos
        while j <= self.size:
            self.tree[j] += value
            j += j & (-j)

    def prefix(self, pos: int) -> float:
        s = 0.0
        j = pos
        while j > 0:
            s += self.tree[j]
            j -= j & (-j)
        return s

    def find(self, value: float) -> int:
        """0-based slot of the first position whose prefix exceeds value."""
        idx = 0
        rem = value
        bit = self.mask
        while bit:
            nxt = idx + bit
            if nxt <= self.size and self.tree[nxt] <= rem:
                idx = nxt
                rem -= self.tree[nxt]
            bit >>= 1
        return idx


class ParidState:
    """Reference implementation state; one instance per run, single-threaded.

    Suitable for small runs and for tests that force specific draws; the
    production path is :func:`run`.
    """

    def __init__(self, config: ParidConfig):
        self.config = config
        self.law = config.resolved_law()
        n = config.steps + 1
        self.degrees = np.zeros(n, dtype=np.int64)
        self.initial_degrees = np.zeros(n, dtype=np.int64)
        self.lam = 0
        self.step_index = 0
        self.vertex_count = 0
        self.weight_index = _PyFenwick(n)

    def _draw_x(self, rng: UniformStream) -> int:
        table, alpha, beta_eff, tail_offset, cap = self.law.kernel_args()
        value = float(_kernels.inv_cdf(table, alpha, beta_eff, tail_offset, cap, rng()))
        if value > 4.0e18 or self.lam + value > 4.0e18:
            raise EdgeCounterOverflow(self.step_index + 1)
        return int(value)

    @property
    def total_weight(self) -> float:
        return 2.0 * self.lam + self.vertex_count * self.config.delta


def init(config: ParidConfig, rng: UniformStream) -> ParidState:
    """Step 1: two vertices joined by X_1 parallel edges."""
    state = ParidState(config)
    x1 = state._draw_x(rng)
    delta = config.delta
    state.degrees[0] = x1
    state.degrees[1] = x1
    state.initial_degrees[0] = x1
    state.initial_degrees[1] = x1
    state.lam = x1
    state.vertex_count = 2
    state.step_index = 1
    state.weight_index.update(1, x1 + delta)
    state.weight_index.update(2, x1 + delta)
    return state


def step(state: ParidState, rng: UniformStream) -> ParidState:
    """One growth step; weights are frozen until its last edge landed."""
    tau = state.step_index + 1
    x = state._draw_x(rng)
    delta = state.config.delta
    count = state.vertex_count
    total_w = state.total_weight
    pending: dict[int, int] = {}
    for _ in range(x):
        v = state.weight_index.find(rng() * total_w)
        if v >= count:
            v = count - 1
        pending[v] = pending.get(v, 0) + 1
    for v, inc in pending.items():
        state.degrees[v] += inc
        state.weight_index.update(v + 1, float(inc))
    state.degrees[count] = x
    state.initial_degrees[count] = x
    state.weight_index.update(count + 1, x + delta)
    state.vertex_count = count + 1
    state.lam += x
    state.step_index = tau
    return state


@dataclass(frozen=True)
class DegreeSequence:
    """Degree-count snapshot after step t (t+1 vertices present)."""

    t: int
    counts: np.ndarray  # counts[k-1] = R_k for 1 <= k <= k_max
    overflow: int  # vertices of degree > k_max
    lam: int  # cumulative edge count Lambda(t)

    @property
    def k_max(self) -> int:
        return len(self.counts)

    @property
    def vertex_count(self) -> int:
        return self.t + 1

    def R(self, k: int) -> int:
        if 1 <= k <= self.k_max:
            return int(self.counts[k - 1])
        return 0

    def r(self, k: int) -> float:
        return self.R(k) / self.vertex_count

    def proportions(self) -> np.ndarray:
        return self.counts / self.vertex_count

    def cumulative(self) -> np.ndarray:
        """Q_k = number of vertices of degree <= k, for k = 1..k_max."""
        return np.cumsum(self.counts)

    def Q(self, k: int) -> int:
        if k < 1:
            return 0
        if k >= self.k_max:
            return int(self.counts.sum())
        return int(self.counts[:k].sum())

    @classmethod
    def from_degrees(cls, degrees: Sequence[int], t: int, k_max: int, lam: int) -> "DegreeSequence":
        counts = np.zeros(k_max, dtype=np.int64)
        overflow = 0
        for d in degrees:
            if 1 <= d <= k_max:
                counts[d - 1] += 1
            else:
                overflow += 1
        return cls(t=t, counts=counts, overflow=overflow, lam=lam)


def degree_sequence(state: ParidState, k_max: int) -> DegreeSequence:
    return DegreeSequence.from_degrees(
        state.degrees[: state.vertex_count], state.step_index, k_max, state.lam
    )


@dataclass(frozen=True)
class ParidRun:
    """Everything a single run emits."""

    config: ParidConfig
    final: DegreeSequence
    snapshots: tuple[DegreeSequence, ...]  # one per requested checkpoint
    edge_trace: tuple[tuple[int, int], ...]  # (tau, Lambda(tau)) per checkpoint
    max_edge_deviation: float | None  # max_tau |L(tau) - tau E[X]|, when E[X] finite
    final_degrees: np.ndarray


def run(config: ParidConfig, force: bool = False) -> ParidRun:
    """Execute a full run on the jitted kernel; deterministic in (config, seed)."""
    guard = config.guard_value()
    if guard is not None and guard > ENDPOINT_GUARD and not force:
        raise ResourceGuardError(
            f"expected endpoint total ~{guard:.3g} exceeds {ENDPOINT_GUARD:.0e}; "
            "truncate, shorten, or force"
        )
    law = config.resolved_law()
    table, alpha, beta_eff, tail_offset, cap = law.kernel_args()
    cps = list(config.checkpoints)
    if config.steps not in cps:
        cps.append(config.steps)
    cps_arr = np.asarray(sorted(cps), dtype=np.int64)
    mean_x = config.law_mean()
    counts, lam_trace, degrees, lam, max_dev, status, fail_tau = _kernels.simulate_core(
        table,
        alpha,
        beta_eff,
        tail_offset,
        np.int64(cap),
        float(config.delta),
        np.int64(config.steps),
        np.uint64(config.seed),
        cps_arr,
        np.int64(config.k_max_tracked),
        float(mean_x) if mean_x is not None else 0.0,
    )
    if status == _kernels.STATUS_OVERFLOW:
        raise EdgeCounterOverflow(int(fail_tau))

    snapshots = []
    trace = []
    final = None
    for i, tau in enumerate(cps_arr):
        seq = DegreeSequence(
            t=int(tau),
            counts=counts[i, : config.k_max_tracked].copy(),
            overflow=int(counts[i, config.k_max_tracked]),
            lam=int(lam_trace[i]),
        )
        if int(tau) in config.checkpoints:
            snapshots.append(seq)
            trace.append((int(tau), int(lam_trace[i])))
        if int(tau) == config.steps:
            final = seq
    assert final is not None
    return ParidRun(
        config=config,
        final=final,
        snapshots=tuple(snapshots),
        edge_trace=tuple(trace),
        max_edge_deviation=float(max_dev) if mean_x is not None else None,
        final_degrees=degrees[: config.steps + 1],
    )
