"""Command-line interface.

Subcommands: ``simulate`` (one run), ``ensemble`` (replicas + dispersion
diagnostics), ``theory`` (b_k / b'_k tables, scale constants), ``verify``
(inequality checks), ``oracle`` (exact small-instance law, optionally
against Monte Carlo).  Every output file starts with a JSON header line
holding the resolved configuration and seeds; stdout carries progress
only.  Exit codes: 0 success (and all verdicts hold), 1 verdict failure,
2 usage or validation error, 3 resource guard.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, theory
from .ensemble import (
    EnsembleConfig,
    concentration_diagnostic,
    edge_trace_check,
    run_ensemble,
)
from .io import (
    fmt,
    header_line,
    write_degree_sequence_csv,
    write_edge_trace_csv,
    write_json,
    write_raw_jsonl,
    write_summary_csv,
    write_theory_table_csv,
    write_verdicts_jsonl,
)
from .process import (
    EdgeCounterOverflow,
    ParidConfig,
    ResourceGuardError,
    run,
)
from .sampling import FiniteLaw, scale_constants

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_USAGE = 2
EXIT_GUARD = 3


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _parse_pmf(text: str) -> dict[int, float]:
    pmf = {}
    for part in text.split(","):
        key, _, value = part.partition(":")
        pmf[int(key)] = float(value)
    total = math.fsum(pmf.values())
    if abs(total - 1.0) > 1e-9:
        raise UsageError(f"pmf sums to {total!r}, not 1 within 1e-9")
    return pmf


def _resolve_truncation(alpha: float, text: str):
    if text == "none":
        return "none"
    if text in ("auto", "paper"):
        if alpha == 2.0:
            return "paper_alpha_eq2"
        if 1.0 < alpha < 2.0:
            return "paper_alpha_lt2"
        return "none"
    try:
        return int(text)
    except ValueError as exc:
        raise UsageError(f"bad --truncate value {text!r}") from exc


def _config_dict(cfg: ParidConfig) -> dict:
    law = cfg.resolved_law()
    out = {
        "alpha": cfg.alpha,
        "delta": cfg.delta,
        "steps": cfg.steps,
        "seed": cfg.seed,
        "truncation": cfg.truncation,
        "checkpoints": list(cfg.checkpoints),
        "k_max_tracked": cfg.k_max_tracked,
    }
    if isinstance(law, FiniteLaw):
        out["law"] = {str(i + 1): p for i, p in enumerate(law.probs)}
    else:
        out["cap"] = law.cap
        out["normalizer"] = law.normalizer
    return out


def _cmd_simulate(args) -> int:
    truncation = _resolve_truncation(args.alpha, args.truncate)
    cfg = ParidConfig(
        alpha=args.alpha,
        delta=args.delta,
        steps=args.steps,
        seed=args.seed,
        truncation=truncation,
        checkpoints=tuple(args.checkpoints or []),
        k_max_tracked=args.k_max,
    )
    result = run(cfg, force=args.force)
    out = Path(args.out)
    header = header_line("simulate", _config_dict(cfg), seeds=[cfg.seed],
                         timestamp=args.timestamp)
    for seq in result.snapshots:
        write_degree_sequence_csv(out / f"degrees_t{seq.t}.csv", seq, header)
    write_degree_sequence_csv(out / f"degrees_t{result.final.t}.csv", result.final, header)
    write_edge_trace_csv(out / "edge_trace.csv", result.edge_trace, header)
    print(f"simulate: t={cfg.steps} Lambda={result.final.lam} "
          f"r1={result.final.r(1):.6f} -> {out}")
    return EXIT_OK


def _cmd_ensemble(args) -> int:
    truncation = _resolve_truncation(args.alpha, args.truncate)
    base = ParidConfig(
        alpha=args.alpha,
        delta=args.delta,
        steps=args.steps,
        seed=0,
        truncation=truncation,
        checkpoints=tuple(args.checkpoints or [args.steps]),
        k_max_tracked=args.k_max,
    )
    ens = EnsembleConfig(
        base=base,
        replicas=args.replicas,
        master_seed=args.master_seed,
        parallelism=args.threads,
        tracked_k=tuple(args.tracked_k),
    )
    summary = run_ensemble(ens, force=args.force)
    out = Path(args.out)
    config = _config_dict(base)
    config.update({"replicas": ens.replicas, "master_seed": ens.master_seed,
                   "tracked_k": list(ens.tracked_k)})
    header = header_line("ensemble", config, seeds=list(summary.seeds),
                         timestamp=args.timestamp)
    write_raw_jsonl(out / "raw.jsonl", summary, header)
    write_summary_csv(out / "summary.csv", summary, header)

    report: dict = {"checkpoints": list(summary.checkpoints)}
    taus = summary.checkpoints
    if len(taus) >= 2:
        diag = concentration_diagnostic(
            summary, taus[0], taus[-1],
            theta_conc=args.theta_conc, theta_nonc=args.theta_nonc,
        )
        report["concentration"] = {
            "tau1": diag.tau1,
            "tau2": diag.tau2,
            "theta_conc": diag.theta_conc,
            "theta_nonc": diag.theta_nonc,
            "std_ratio": {str(k): v for k, v in diag.std_ratio.items()},
            "degenerate": list(diag.degenerate),
            "verdict": {str(k): v for k, v in diag.verdict.items()},
        }
    write_json(out / "diagnostic.json", report, header)
    print(f"ensemble: {ens.replicas} replicas -> {out}")
    return EXIT_OK


def _cmd_theory(args) -> int:
    out = Path(args.out) if args.out else None
    if args.theory_cmd == "bk":
        # the b' column needs some finite t; default to desk scale
        t_ref = args.t if args.t else 10_000
        table = theory.theory_table(args.k_max, t_ref)
        header = header_line("theory_bk", {"k_max": args.k_max, "t": t_ref},
                             timestamp=args.timestamp)
        path = out or Path("theory_bk.csv")
        write_theory_table_csv(path, table, header)
        for k in range(1, min(args.k_max, 10) + 1):
            print(f"b_{k} = {table.b[k - 1]:.9f}")
        print(f"-> {path}")
        return EXIT_OK
    if args.theory_cmd == "bkprime":
        table = theory.theory_table(args.k_max, args.t)
        header = header_line(
            "theory_bkprime", {"k_max": args.k_max, "t": args.t}, timestamp=args.timestamp
        )
        path = out or Path("theory_bkprime.csv")
        write_theory_table_csv(path, table, header)
        print(f"max |recursion residual| = {np.max(np.abs(table.residual)):.3g} -> {path}")
        return EXIT_OK
    if args.theory_cmd == "constants":
        cst = scale_constants(args.alpha)
        payload = {
            "alpha": args.alpha,
            "t": args.t,
            "c": cst.c,
            "C_of_t": cst.big_c(args.t),
            "C_inf": cst.c_inf,
        }
        header = header_line("theory_constants", {"alpha": args.alpha, "t": args.t},
                             timestamp=args.timestamp)
        path = out or Path("theory_constants.json")
        write_json(path, payload, header)
        print(f"c = {cst.c:.6f}  C({args.alpha},{args.t}) = {payload['C_of_t']:.6f}  "
              f"C_inf = {cst.c_inf:.6f} -> {path}")
        return EXIT_OK
    raise UsageError("unknown theory subcommand")


def _cmd_verify(args) -> int:
    verdicts = []
    skipped = []
    if args.verify_cmd == "lemma31":
        for alpha in args.alpha:
            for t in args.t:
                for z in args.z:
                    try:
                        verdicts.append(
                            theory.check_lemma31(alpha, t, z, args.samples, args.seed)
                        )
                    except ValueError as exc:
                        skipped.append((f"lemma31(alpha={alpha},t={t},z={z})", str(exc)))
        path = args.out or "verify_lemma31.jsonl"
        config = {"alpha": args.alpha, "t": args.t, "z": args.z, "samples": args.samples}
    elif args.verify_cmd == "lemma32":
        for alpha in args.alpha:
            for t in args.t:
                for gamma in args.gamma:
                    try:
                        verdicts.append(theory.check_lemma32(alpha, t, gamma))
                    except ValueError as exc:
                        skipped.append((f"lemma32(alpha={alpha},t={t},gamma={gamma})", str(exc)))
        path = args.out or "verify_lemma32.jsonl"
        config = {"alpha": args.alpha, "t": args.t, "gamma": args.gamma}
    elif args.verify_cmd == "invmoments":
        s = args.s if args.s is not None else args.t_single
        for ell in args.ell:
            try:
                verdicts.append(
                    theory.check_inverse_moments(args.t_single, s, ell, args.samples, args.seed)
                )
            except ValueError as exc:
                skipped.append((f"invmoments(ell={ell})", str(exc)))
        path = args.out or "verify_invmoments.jsonl"
        config = {"t": args.t_single, "s": s, "ell": args.ell, "samples": args.samples}
    elif args.verify_cmd == "product":
        cases, violations = theory.product_inequality_sweep(args.cases, args.seed)
        verdicts.append(
            theory.BoundVerdict(
                lemma_id="product",
                parameters={"cases": cases, "seed": args.seed},
                bound_value=0.0,
                observed_value=float(violations),
                margin=-float(violations),
                holds=violations == 0,
            )
        )
        path = args.out or "verify_product.jsonl"
        config = {"cases": args.cases, "seed": args.seed}
    elif args.verify_cmd == "edges":
        base = ParidConfig(
            alpha=2.0,
            delta=0.0,
            steps=args.t_single,
            seed=0,
            truncation="paper_alpha_eq2",
            checkpoints=tuple(args.checkpoints or _default_edge_checkpoints(args.t_single)),
            k_max_tracked=10,
        )
        ens = EnsembleConfig(
            base=base,
            replicas=args.replicas,
            master_seed=args.master_seed,
            parallelism=args.threads,
            tracked_k=(1,),
        )
        summary = run_ensemble(ens)
        verdicts.append(edge_trace_check(summary, args.t_single))
        path = args.out or "verify_edges.jsonl"
        config = {"t": args.t_single, "replicas": args.replicas,
                  "master_seed": args.master_seed}
    else:
        raise UsageError("unknown verify subcommand")

    header = header_line(f"verify_{args.verify_cmd}", config,
                         seeds=[getattr(args, "seed", 0) or 0], timestamp=args.timestamp)
    write_verdicts_jsonl(path, verdicts, header)
    for name, why in skipped:
        print(f"skipped {name}: {why}", file=sys.stderr)
    all_hold = all(v.holds for v in verdicts)
    for v in verdicts:
        print(f"{v.lemma_id} {json.dumps(v.parameters, default=str)[:100]} "
              f"observed={v.observed_value:.6g} bound={v.bound_value:.6g} holds={v.holds}")
    print(f"-> {path}")
    return EXIT_OK if all_hold else EXIT_VERDICT


def _default_edge_checkpoints(t: int) -> list[int]:
    t0 = int(math.ceil(t / math.log(math.log(t))))
    return sorted({t // 10, t // 4, t0, (t0 + t) // 2, 3 * t // 4, t})


def _cmd_oracle(args) -> int:
    pmf = _parse_pmf(args.pmf)
    if args.t > 4 or max(pmf) > 3:
        # contracted envelope is cap <= 3, t <= 4; bigger instances are
        # attempted but may trip the work guard
        print(f"note: t={args.t}, cap={max(pmf)} beyond the guaranteed envelope",
              file=sys.stderr)
    dist = theory.exact_enumeration_oracle(pmf, args.delta, args.t)
    mass = theory.oracle_total_mass(dist)
    config = {"pmf": {str(k): v for k, v in pmf.items()}, "delta": args.delta, "t": args.t}
    header = header_line("oracle", config, seeds=[args.seed], timestamp=args.timestamp)
    path = Path(args.out or "oracle.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        fh.write("degrees,probability\n")
        for degs, p in dist.items():
            fh.write("|".join(map(str, degs)) + "," + fmt(float(p)) + "\n")
    print(f"oracle: {len(dist)} outcomes, total mass deficit {float(1 - mass):.3g} -> {path}")

    if args.compare_samples:
        from .montecarlo import small_run_distribution

        law = FiniteLaw.from_dict(pmf)
        empirical = small_run_distribution(law, args.delta, args.t,
                                           args.compare_samples, args.seed)
        tv = 0.5 * math.fsum(
            abs(empirical.get(degs, 0.0) - float(p)) for degs, p in dist.items()
        ) + 0.5 * math.fsum(
            p for degs, p in empirical.items() if degs not in dist
        )
        print(f"total-variation distance over {args.compare_samples} runs: {tv:.6f}")
        payload = {"tv_distance": tv, "samples": args.compare_samples}
        write_json(path.with_suffix(".tv.json"), payload, header)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parid",
        description="Preferential attachment with random initial degrees: "
        "simulator and verification suite",
    )
    parser.add_argument("--version", action="version", version=f"parid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--timestamp", default=None,
                       help="fix the header timestamp (for reproducible files)")

    p = sub.add_parser("simulate", help="run one simulation")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truncate", default="auto",
                   help="'auto' (by alpha), 'none', or an explicit integer cap")
    p.add_argument("--k-max", type=int, default=1000, dest="k_max")
    p.add_argument("--checkpoints", type=_int_list, default=None)
    p.add_argument("--out", default="parid_out")
    p.add_argument("--force", action="store_true",
                   help="override the desk-scale resource guard")
    add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ensemble", help="run replicas and diagnostics")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--replicas", type=int, required=True)
    p.add_argument("--master-seed", type=int, required=True, dest="master_seed")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--truncate", default="auto")
    p.add_argument("--k-max", type=int, default=1000, dest="k_max")
    p.add_argument("--checkpoints", type=_int_list, default=None)
    p.add_argument("--tracked-k", type=_int_list, default=[1, 2, 3], dest="tracked_k")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--theta-conc", type=float, default=0.5, dest="theta_conc")
    p.add_argument("--theta-nonc", type=float, default=0.7, dest="theta_nonc")
    p.add_argument("--out", default="parid_out")
    p.add_argument("--force", action="store_true")
    add_common(p)
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("theory", help="closed-form tables and constants")
    tsub = p.add_subparsers(dest="theory_cmd", required=True)
    tp = tsub.add_parser("bk")
    tp.add_argument("--k-max", type=int, required=True, dest="k_max")
    tp.add_argument("--t", type=int, default=None,
                    help="reference t for the b'_k column (default 10000)")
    tp.add_argument("--out", default=None)
    add_common(tp)
    tp = tsub.add_parser("bkprime")
    tp.add_argument("--t", type=int, required=True)
    tp.add_argument("--k-max", type=int, required=True, dest="k_max")
    tp.add_argument("--out", default=None)
    add_common(tp)
    tp = tsub.add_parser("constants")
    tp.add_argument("--alpha", type=float, required=True)
    tp.add_argument("--t", type=int, required=True)
    tp.add_argument("--out", default=None)
    add_common(tp)
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("verify", help="inequality checks; exit 0 iff all hold")
    vsub = p.add_subparsers(dest="verify_cmd", required=True)
    vp = vsub.add_parser("lemma31")
    vp.add_argument("--alpha", type=_float_list, required=True)
    vp.add_argument("--t", type=_int_list, required=True)
    vp.add_argument("--z", type=_float_list, required=True)
    vp.add_argument("--samples", type=int, default=100_000)
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--out", default=None)
    add_common(vp)
    vp = vsub.add_parser("lemma32")
    vp.add_argument("--alpha", type=_float_list, required=True)
    vp.add_argument("--t", type=_int_list, required=True)
    vp.add_argument("--gamma", type=_float_list, required=True)
    vp.add_argument("--out", default=None)
    vp.add_argument("--seed", type=int, default=0)
    add_common(vp)
    vp = vsub.add_parser("invmoments")
    vp.add_argument("--t", type=int, required=True, dest="t_single")
    vp.add_argument("--s", type=int, default=None)
    vp.add_argument("--ell", type=_int_list, default=[1, 2])
    vp.add_argument("--samples", type=int, default=10_000)
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--out", default=None)
    add_common(vp)
    vp = vsub.add_parser("product")
    vp.add_argument("--cases", type=int, default=100_000)
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--out", default=None)
    add_common(vp)
    vp = vsub.add_parser("edges")
    vp.add_argument("--t", type=int, required=True, dest="t_single")
    vp.add_argument("--replicas", type=int, default=50)
    vp.add_argument("--master-seed", type=int, default=0, dest="master_seed")
    vp.add_argument("--threads", type=int, default=1)
    vp.add_argument("--checkpoints", type=_int_list, default=None)
    vp.add_argument("--out", default=None)
    vp.add_argument("--seed", type=int, default=0)
    add_common(vp)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("oracle", help="exact small-instance degree law")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--pmf", required=True, help='e.g. "1:0.7,2:0.3"')
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--compare-samples", type=int, default=0, dest="compare_samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    add_common(p)
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses its own exit codes; map usage errors to 2
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except theory.EnumerationGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except EdgeCounterOverflow as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
