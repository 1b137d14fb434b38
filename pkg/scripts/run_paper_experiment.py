#!/usr/bin/env python3
"""Run the full SINR sweep and the single-instance convergence trace.

Writes ``results.csv``, ``results_summary.csv`` and ``trace.csv`` into the
output directory; ``plot_results.py`` turns them into figures.
"""

import argparse
import logging
from pathlib import Path

from greenran import harness


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(Path(__file__).resolve().parents[1] / "configs" / "paper.json"))
    ap.add_argument("--out", default="results/paper")
    ap.add_argument("--parallel", type=int, default=1)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--timing", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    spec = harness.with_overrides(harness.load_spec(args.config), parallelism=args.parallel, trials=args.trials,
                                  output_dir=args.out, record_timing=True if args.timing else None)
    out = Path(spec.output_dir)
    logging.info("sweep: %d trials x %s dB x %s", spec.trials, spec.sinr_targets_db, spec.algorithms)
    records = harness.run_experiment(spec)
    detail, summary = harness.emit_results(records, out / "results.csv", spec.record_timing)
    unverified = sum(1 for r in records if r.feasible and not r.verified)
    logging.info("wrote %s and %s (%d feasible results failed verification)", detail, summary, unverified)

    trace = harness.trace_instance(spec, 0)
    if trace.feasible:
        logging.info("trace: %s after %d outer iterations", trace.status.value, trace.outer_iterations)
        harness.emit_trace(trace, out / "trace.csv")


if __name__ == "__main__":
    main()
