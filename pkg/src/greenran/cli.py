"""Command-line entry point: ``greenran simulate | trace | check``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import harness
from .harness import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _names(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="greenran", description="Cloud-RAN network power minimization experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the Monte-Carlo SINR sweep")
    sim.add_argument("--config", required=True)
    sim.add_argument("--trials", type=int)
    sim.add_argument("--sinr-db", type=_floats)
    sim.add_argument("--algos", type=_names)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out")
    sim.add_argument("--parallel", type=int)
    sim.add_argument("--timing", action="store_true", help="fill the wall_ms column (breaks byte-reproducibility)")

    tr = sub.add_parser("trace", help="dump the l2-box convergence trace of one trial")
    tr.add_argument("--config", required=True)
    tr.add_argument("--algo", default="l2box", choices=["l2box"])
    tr.add_argument("--trial", type=int, default=0)
    tr.add_argument("--sinr-db", type=float)
    tr.add_argument("--out", required=True)

    ck = sub.add_parser("check", help="validate a config and print problem dimensions")
    ck.add_argument("--config", required=True)
    return ap


def _simulate(args) -> int:
    spec = harness.load_spec(args.config)
    spec = harness.with_overrides(
        spec,
        trials=args.trials,
        sinr_targets_db=args.sinr_db,
        algorithms=args.algos,
        base_seed=args.seed,
        output_dir=args.out,
        parallelism=args.parallel,
        record_timing=True if args.timing else None,
    )
    records = harness.run_experiment(spec)
    detail, summary = harness.emit_results(records, Path(spec.output_dir) / "results.csv", spec.record_timing)
    for row in harness.summarize(records):
        print(f"{row['sinr_db']:>6g} dB  {row['algo']:<9} n={row['n_feasible']:<3d} mean power {row['mean_power_w']:.4f} W")
    print(f"wrote {detail} and {summary}")
    if not any(r.feasible for r in records):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _trace(args) -> int:
    spec = harness.load_spec(args.config)
    res = harness.trace_instance(spec, args.trial, args.sinr_db)
    if not res.feasible:
        print("instance infeasible at this SINR target", file=sys.stderr)
        return EXIT_INFEASIBLE
    path = harness.emit_trace(res, args.out)
    print(f"{res.status.value} after {res.outer_iterations} outer iterations; power {res.power_w:.4f} W; wrote {path}")
    return EXIT_OK


def _check(args) -> int:
    spec = harness.load_spec(args.config)
    cfg = spec.base_config
    n_real = 2 * cfg.K * cfg.n_antennas
    print(f"L={cfg.L} RRHs, K={cfg.K} users, antennas={list(cfg.N_l)} (total {cfg.n_antennas})")
    print(f"beamformer real variables: {n_real}; relaxed program variables: {n_real + 2 * cfg.L}")
    print(f"SINR targets (dB): {spec.sinr_targets_db}; trials: {spec.trials}; algorithms: {spec.algorithms}")
    if "mip_enum" in spec.algorithms:
        note = "skipped (L > %d)" % harness.MAX_ENUM_L if cfg.L > harness.MAX_ENUM_L else f"{2 ** cfg.L} subsets"
        print(f"mip_enum: {note}")
    return EXIT_OK


def main(argv=None) -> int:
    level = os.environ.get("GREENRAN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"simulate": _simulate, "trace": _trace, "check": _check}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - mapped to the documented exit code
        logging.getLogger("greenran").exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
