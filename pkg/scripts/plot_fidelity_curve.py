#!/usr/bin/env python3
"""
Fidelity-bound plotter for graphbell.

Reads one or more curve CSVs written by `graphbell robust --out` and draws
the certified extraction fidelity against the relative Bell violation.

Usage:
    python3 scripts/plot_fidelity_curve.py results/star3.csv results/ring4.csv
    python3 scripts/plot_fidelity_curve.py results/*.csv --output fidelity.png
"""

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

from graphbell.robustness import CURVE_COLUMNS

ROOT = Path(__file__).resolve().parent.parent
PALETTE = ["#58a6ff", "#2ea043", "#f0883e", "#bc8cff", "#da3633", "#e3b341"]


def load_curve(path: Path) -> pd.DataFrame:
    if not path.exists():
        print(f"[ERROR] Curve not found: {path}\nRun `graphbell robust --out` first.",
              file=sys.stderr)
        sys.exit(1)
    df = pd.read_csv(path)
    missing = [c for c in CURVE_COLUMNS if c not in df.columns]
    if missing:
        print(f"[ERROR] {path}: missing columns {missing}", file=sys.stderr)
        sys.exit(1)
    return df


def plot_curves(curves: dict[str, pd.DataFrame], output: Path) -> Path:
    x_col, y_col = CURVE_COLUMNS
    fig, ax = plt.subplots(figsize=(9, 6))
    fig.patch.set_facecolor("#0d1117")
    ax.set_facecolor("#161b22")

    for i, (label, df) in enumerate(curves.items()):
        ax.plot(df[x_col], df[y_col].clip(lower=0.0), color=PALETTE[i % len(PALETTE)],
                linewidth=1.8, label=label)

    ax.axhline(1.0, color="#8b949e", linestyle="--", linewidth=0.8)
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.05)
    ax.set_title("Certified fidelity vs relative violation", color="white", fontsize=13)
    ax.set_xlabel("(β − β_C) / (β_Q − β_C)", color="white")
    ax.set_ylabel("fidelity lower bound", color="white")
    ax.tick_params(colors="white")
    for spine in ax.spines.values():
        spine.set_edgecolor("#30363d")
    ax.legend(facecolor="#21262d", edgecolor="#30363d", labelcolor="white", fontsize=9)
    ax.grid(True, alpha=0.15, color="#30363d")

    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, dpi=150, bbox_inches="tight", facecolor=fig.get_facecolor())
    plt.close(fig)
    print(f"[OK] Plot saved → {output}")
    return output


def main() -> None:
    parser = argparse.ArgumentParser(description="graphbell fidelity-bound plotter")
    parser.add_argument("curves", nargs="+", type=Path, help="curve CSVs from `graphbell robust`")
    parser.add_argument("--output", type=Path, default=ROOT / "fidelity_curve.png")
    args = parser.parse_args()

    curves = {path.stem: load_curve(path) for path in args.curves}
    plot_curves(curves, args.output)


if __name__ == "__main__":
    main()
