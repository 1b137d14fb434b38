#!/usr/bin/env python3
"""Plot the convergence trace and the power-versus-SINR curves.

Reads ``trace.csv`` and ``results_summary.csv`` from a results directory and
writes ``convergence.png`` and ``power_vs_sinr.png`` next to them.
"""

import argparse
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

LABELS = {"l2box": "l2-box MM", "gsbf": "GSBF", "rmip": "RMIP", "mip_bnb": "MIP (B&B)", "mip_enum": "MIP (enum)"}


def plot_trace(path: Path, out: Path) -> None:
    rows = list(csv.DictReader(open(path)))
    t = [int(r["t"]) + 1 for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(t, [float(r["lambda"]) for r in rows], "o-")
    ax1.set_xlabel("outer iteration")
    ax1.set_ylabel("dual variable lambda")
    ax2.plot(t, [float(r["tol1"]) for r in rows], "s-", label="log10 ||z_t - z_{t-1}||")
    ax2.plot(t, [float(r["tol2"]) for r in rows], "^-", label="log10 ||v_t - v_{t-1}||")
    ax2.set_xlabel("outer iteration")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_summary(path: Path, out: Path) -> None:
    curves = defaultdict(list)
    for r in csv.DictReader(open(path)):
        if int(r["n_feasible"]) > 0:
            curves[r["algo"]].append((float(r["sinr_db"]), float(r["mean_power_w"])))
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for algo, pts in sorted(curves.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=LABELS.get(algo, algo))
    ax.set_xlabel("target SINR [dB]")
    ax.set_ylabel("average network power [W]")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("results_dir", nargs="?", default="results/paper")
    d = Path(ap.parse_args().results_dir)
    if (d / "trace.csv").exists():
        plot_trace(d / "trace.csv", d / "convergence.png")
        print(f"wrote {d / 'convergence.png'}")
    plot_summary(d / "results_summary.csv", d / "power_vs_sinr.png")
    print(f"wrote {d / 'power_vs_sinr.png'}")


if __name__ == "__main__":
    main()
