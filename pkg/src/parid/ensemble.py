"""Parallel replica execution and concentration diagnostics.

Replicas are independent runs of the same configuration under seeds
derived from a master seed by a SplitMix64 avalanche, executed on a
bounded thread pool (the simulation kernel releases the GIL).  Results
are aggregated in replica order, so summaries do not depend on the
parallelism degree or scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rng import mix_seed
from .process import ParidConfig, ParidRun, run
from .sampling import PowerLawSpec
from .theory import BoundVerdict


def replica_seed(master_seed: int, index: int) -> int:
    """Stateless per-replica seed; injective in the index."""
    return int(mix_seed(np.uint64(master_seed), np.uint64(index)))


@dataclass(frozen=True)
class EnsembleConfig:
    base: ParidConfig  # its seed field is ignored
    replicas: int
    master_seed: int
    parallelism: int = 1
    tracked_k: tuple[int, ...] = (1, 2, 3)
    checkpoints: tuple[int, ...] = ()  # empty = use base.checkpoints

    def __post_init__(self):
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if not self.tracked_k:
            raise ValueError("tracked_k must be nonempty")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        cps = tuple(sorted(set(self.checkpoints))) or self.base.checkpoints
        if not cps:
            cps = (self.base.steps,)
        object.__setattr__(self, "checkpoints", cps)
        if max(self.tracked_k) > self.base.k_max_tracked:
            raise ValueError("tracked_k exceeds base.k_max_tracked")

    def effective_base(self) -> ParidConfig:
        return ParidConfig(
            alpha=self.base.alpha,
            delta=self.base.delta,
            steps=self.base.steps,
            seed=0,
            truncation=self.base.truncation,
            checkpoints=self.checkpoints,
            k_max_tracked=self.base.k_max_tracked,
            law=self.base.law,
        )


class EnsembleError(RuntimeError):
    """A replica failed; carries the partial-results manifest."""

    def __init__(self, manifest: dict[int, str]):
        self.manifest = manifest
        failed = [i for i, s in manifest.items() if s != "ok"]
        super().__init__(f"replicas failed: {failed}")


@dataclass
class EnsembleSummary:
    """Cross-replica statistics of r_k and the edge trace per checkpoint."""

    config: EnsembleConfig
    checkpoints: tuple[int, ...]
    tracked_k: tuple[int, ...]
    seeds: tuple[int, ...]
    # raw per-replica material the statistics are computed from
    r_values: np.ndarray  # (replicas, n_checkpoints, n_tracked_k)
    lam_values: np.ndarray  # (replicas, n_checkpoints)
    max_edge_dev: np.ndarray | None  # (replicas,) or None when E[X] diverges
    stats: dict = field(default_factory=dict)  # (tau, k) -> summary record

    def stat(self, tau: int, k: int) -> dict:
        return self.stats[(tau, k)]

    def edge_ratio_stats(self, tau: int) -> tuple[float, float]:
        """(mean, std) of L(tau)/tau across replicas."""
        i = self.checkpoints.index(tau)
        vals = self.lam_values[:, i] / tau
        return float(np.mean(vals)), float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0

    def records(self):
        """Raw (replica, tau, k, r_k) and (replica, tau, L) records."""
        for rep in range(self.r_values.shape[0]):
            for ci, tau in enumerate(self.checkpoints):
                for ki, k in enumerate(self.tracked_k):
                    yield {
                        "replica": rep,
                        "tau": int(tau),
                        "k": int(k),
                        "r_k": float(self.r_values[rep, ci, ki]),
                    }
                yield {"replica": rep, "tau": int(tau), "L": int(self.lam_values[rep, ci])}


def _summarize(values: np.ndarray) -> dict:
    q5, q50, q95 = np.quantile(values, [0.05, 0.50, 0.95])
    return {
        "mean": float(np.mean(values)),
        "std": float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
        "min": float(np.min(values)),
        "q5": float(q5),
        "median": float(q50),
        "q95": float(q95),
        "max": float(np.max(values)),
    }


def run_ensemble(config: EnsembleConfig, force: bool = False) -> EnsembleSummary:
    """Run all replicas; identical output for any parallelism degree."""
    base = config.effective_base()
    seeds = tuple(replica_seed(config.master_seed, i) for i in range(config.replicas))

    def worker(i: int) -> ParidRun:
        cfg = ParidConfig(
            alpha=base.alpha,
            delta=base.delta,
            steps=base.steps,
            seed=seeds[i],
            truncation=base.truncation,
            checkpoints=base.checkpoints,
            k_max_tracked=base.k_max_tracked,
            law=base.law,
        )
        return run(cfg, force=force)

    results: list[ParidRun | None] = [None] * config.replicas
    manifest: dict[int, str] = {}
    if config.parallelism == 1:
        for i in range(config.replicas):
            try:
                results[i] = worker(i)
                manifest[i] = "ok"
            except Exception as exc:  # noqa: BLE001 - manifest records the cause
                manifest[i] = f"failed: {exc}"
                raise EnsembleError(manifest) from exc
    else:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            futures = {i: pool.submit(worker, i) for i in range(config.replicas)}
            first_exc = None
            for i in range(config.replicas):
                try:
                    results[i] = futures[i].result()
                    manifest[i] = "ok"
                except Exception as exc:  # noqa: BLE001
                    manifest[i] = f"failed: {exc}"
                    if first_exc is None:
                        first_exc = exc
            if first_exc is not None:
                raise EnsembleError(manifest) from first_exc

    n_cp = len(config.checkpoints)
    n_k = len(config.tracked_k)
    r_values = np.zeros((config.replicas, n_cp, n_k), dtype=np.float64)
    lam_values = np.zeros((config.replicas, n_cp), dtype=np.int64)
    dev = np.zeros(config.replicas, dtype=np.float64)
    have_dev = True
    for rep, res in enumerate(results):
        assert res is not None
        for ci, seq in enumerate(res.snapshots):
            for ki, k in enumerate(config.tracked_k):
                r_values[rep, ci, ki] = seq.r(k)
            lam_values[rep, ci] = seq.lam
        if res.max_edge_deviation is None:
            have_dev = False
        else:
            dev[rep] = res.max_edge_deviation

    summary = EnsembleSummary(
        config=config,
        checkpoints=config.checkpoints,
        tracked_k=config.tracked_k,
        seeds=seeds,
        r_values=r_values,
        lam_values=lam_values,
        max_edge_dev=dev if have_dev else None,
    )
    for ci, tau in enumerate(config.checkpoints):
        for ki, k in enumerate(config.tracked_k):
            summary.stats[(int(tau), int(k))] = _summarize(r_values[:, ci, ki])
    return summary


@dataclass(frozen=True)
class ConcentrationReport:
    tau1: int
    tau2: int
    theta_conc: float
    theta_nonc: float
    std_ratio: dict[int, float]  # k -> std(r_k(tau2)) / std(r_k(tau1))
    degenerate: tuple[int, ...]  # k values with zero std at tau1
    verdict: dict[int, str]  # k -> 'concentrating' | 'non-concentrating' | 'inconclusive'


def concentration_diagnostic(
    summary: EnsembleSummary,
    tau1: int,
    tau2: int,
    theta_conc: float = 0.5,
    theta_nonc: float = 0.7,
) -> ConcentrationReport:
    """Dispersion-ratio dichotomy between two checkpoints.

    A shrinking cross-replica standard deviation of r_k marks the
    concentrating regime; a persistent one marks its absence.  The
    thresholds are pilot-calibrated defaults, not derived constants.
    """
    if tau1 not in summary.checkpoints or tau2 not in summary.checkpoints:
        raise ValueError("both checkpoints must be present in the summary")
    ratios: dict[int, float] = {}
    verdicts: dict[int, str] = {}
    degenerate = []
    for k in summary.tracked_k:
        s1 = summary.stat(tau1, k)["std"]
        s2 = summary.stat(tau2, k)["std"]
        if s1 == 0.0:
            degenerate.append(k)
            continue
        ratio = s2 / s1
        ratios[k] = ratio
        if ratio < theta_conc:
            verdicts[k] = "concentrating"
        elif ratio > theta_nonc:
            verdicts[k] = "non-concentrating"
        else:
            verdicts[k] = "inconclusive"
    return ConcentrationReport(
        tau1=tau1,
        tau2=tau2,
        theta_conc=theta_conc,
        theta_nonc=theta_nonc,
        std_ratio=ratios,
        degenerate=tuple(degenerate),
        verdict=verdicts,
    )


def edge_trace_check(
    summary: EnsembleSummary,
    t: int,
    ratio_tolerance: float = 0.25,
    c_fraction_floor: float = 0.95,
) -> BoundVerdict:
    """Edge-count growth law at alpha = 2 with the t-dependent truncation.

    Checks that the ensemble mean of L(tau) tracks tau * beta'' * ln t
    within ``ratio_tolerance`` for every checkpoint tau >= t/lnln t, and
    that at least ``c_fraction_floor`` of replicas keep every partial
    edge count within t (ln t)^(2/3) of its expectation.
    """
    base = summary.config.base
    law = base.resolved_law()
    if not (isinstance(law, PowerLawSpec) and law.alpha == 2.0 and law.cap is not None):
        raise ValueError("edge trace check needs the alpha=2 truncated model")
    if summary.max_edge_dev is None:
        raise ValueError("runs carried no edge-deviation tracking")
    bpp = law.normalizer
    log_t = math.log(t)
    t0 = t / math.log(log_t)
    worst = 0.0
    checked = []
    for ci, tau in enumerate(summary.checkpoints):
        if tau < t0:
            continue
        mean_l = float(np.mean(summary.lam_values[:, ci]))
        ratio = mean_l / (tau * bpp * log_t)
        checked.append((int(tau), ratio))
        worst = max(worst, abs(ratio - 1.0))
    if not checked:
        raise ValueError(f"no checkpoints at or above t/lnln t = {t0:.1f}")
    threshold = t * log_t ** (2.0 / 3.0)
    fraction = float(np.mean(summary.max_edge_dev <= threshold))
    holds = worst < ratio_tolerance and fraction >= c_fraction_floor
    return BoundVerdict(
        lemma_id="edge_conc",
        parameters={
            "t": t,
            "checked": checked,
            "concentration_event_fraction": fraction,
            "c_fraction_floor": c_fraction_floor,
            "deviation_threshold": threshold,
        },
        bound_value=ratio_tolerance,
        observed_value=worst,
        margin=min(ratio_tolerance - worst, fraction - c_fraction_floor),
        holds=holds,
    )
