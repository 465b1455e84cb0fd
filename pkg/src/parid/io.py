"""File output: self-describing headers, CSV tables, JSONL records.

Every file starts with one JSON header line carrying the fully resolved
configuration, tool version and seeds; re-running that configuration
reproduces the file byte-for-byte apart from the header's ``timestamp``
field, which is outside the determinism contract.  Reals are written
with 17 significant digits so doubles round-trip exactly.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from . import __version__
from .ensemble import EnsembleSummary
from .process import DegreeSequence
from .theory import BoundVerdict, TheoryTable


def fmt(x: float) -> str:
    return f"{x:.17g}"


def header_line(kind: str, config: dict, seeds: list[int] | None = None,
                timestamp: str | None = None) -> str:
    record = {
        "tool": "parid",
        "version": __version__,
        "kind": kind,
        "config": config,
        "seeds": seeds if seeds is not None else [],
        "timestamp": timestamp if timestamp is not None
        else datetime.now(timezone.utc).isoformat(),
    }
    return json.dumps(record, sort_keys=True)


def _open_out(path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", encoding="utf-8", newline="\n")


def write_degree_sequence_csv(path, seq: DegreeSequence, header: str) -> None:
    """Rows k,R_k,r_k,Q_k; the overflow bucket is the k=-1 row with the
    grand totals in its r/Q columns."""
    n = seq.vertex_count
    with _open_out(path) as fh:
        fh.write(header + "\n")
        fh.write("k,R_k,r_k,Q_k\n")
        q = 0
        for k in range(1, seq.k_max + 1):
            rk = seq.R(k)
            q += rk
            fh.write(f"{k},{rk},{fmt(rk / n)},{q}\n")
        fh.write(f"-1,{seq.overflow},{fmt(seq.overflow / n)},{q + seq.overflow}\n")


def write_edge_trace_csv(path, trace: Iterable[tuple[int, int]], header: str) -> None:
    with _open_out(path) as fh:
        fh.write(header + "\n")
        fh.write("tau,L_tau\n")
        for tau, lam in trace:
            fh.write(f"{tau},{lam}\n")


def write_theory_table_csv(path, table: TheoryTable, header: str) -> None:
    with _open_out(path) as fh:
        fh.write(header + "\n")
        fh.write("k,b_k,b_k_prime,residual\n")
        for i, k in enumerate(table.k_values):
            fh.write(
                f"{int(k)},{fmt(table.b[i])},{fmt(table.b_prime[i])},{fmt(table.residual[i])}\n"
            )


def write_verdicts_jsonl(path, verdicts: Iterable[BoundVerdict], header: str) -> None:
    with _open_out(path) as fh:
        fh.write(header + "\n")
        for v in verdicts:
            fh.write(json.dumps(v.to_record(), sort_keys=True) + "\n")


def write_summary_csv(path, summary: EnsembleSummary, header: str) -> None:
    with _open_out(path) as fh:
        fh.write(header + "\n")
        fh.write("tau,k,mean,std,min,q5,median,q95,max\n")
        for tau in summary.checkpoints:
            for k in summary.tracked_k:
                s = summary.stat(tau, k)
                fh.write(
                    f"{tau},{k},{fmt(s['mean'])},{fmt(s['std'])},{fmt(s['min'])},"
                    f"{fmt(s['q5'])},{fmt(s['median'])},{fmt(s['q95'])},{fmt(s['max'])}\n"
                )


def write_raw_jsonl(path, summary: EnsembleSummary, header: str) -> None:
    with _open_out(path) as fh:
        fh.write(header + "\n")
        for record in summary.records():
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_json(path, payload: dict, header: str) -> None:
    with _open_out(path) as fh:
        fh.write(header + "\n")
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
