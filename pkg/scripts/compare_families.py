#!/usr/bin/env python3
"""
Side-by-side family comparison for graphbell.

Runs `graphbell compare --json` for the builtin families, prints a wide
table of the quantum-to-classical ratio per N, writes the rows to CSV and,
with --plot, draws the ratio and the correlator count against N.

Usage:
    python3 scripts/compare_families.py --nmax 10
    python3 scripts/compare_families.py --families ring,line --plot
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path

import pandas as pd

ROOT = Path(__file__).resolve().parent.parent
FAMILIES = ["star", "ring", "line", "complete"]


def run_compare(families: list[str], nmin: int, nmax: int) -> pd.DataFrame:
    result = subprocess.run(
        [sys.executable, "-m", "graphbell", "compare", "--json",
         "--families", ",".join(families), "--nmin", str(nmin), "--nmax", str(nmax)],
        capture_output=True, text=True, cwd=ROOT,
    )
    if result.returncode != 0:
        print(f"[ERROR] graphbell compare exited with {result.returncode}", file=sys.stderr)
        print(result.stdout or result.stderr, file=sys.stderr)
        sys.exit(result.returncode)
    return pd.DataFrame(json.loads(result.stdout)["results"]["rows"])


def fmt(val, decimals: int = 4) -> str:
    if val is None or pd.isna(val):
        return "—"
    return f"{val:.{decimals}f}"


def print_table(rows: pd.DataFrame, families: list[str]) -> None:
    wide = rows.pivot(index="n", columns="family", values="ratio")
    col_w = 12
    header = f"{'N':<6}" + "".join(f"{f:>{col_w}}" for f in families)
    print("β_Q / β_C")
    print(header)
    print("-" * len(header))
    for n, row in wide.iterrows():
        print(f"{n:<6}" + "".join(f"{fmt(row.get(f)):>{col_w}}" for f in families))


def plot_rows(rows: pd.DataFrame, output: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import seaborn as sns

    fig, axes = plt.subplots(1, 2, figsize=(14, 5))
    fig.patch.set_facecolor("#0d1117")
    panels = [("ratio", "β_Q / β_C"), ("atomic_correlators", "atomic correlators")]
    for ax, (column, label) in zip(axes, panels):
        ax.set_facecolor("#161b22")
        sns.lineplot(data=rows, x="n", y=column, hue="family", marker="o", ax=ax)
        ax.set_xlabel("N", color="white")
        ax.set_ylabel(label, color="white")
        ax.tick_params(colors="white")
        for spine in ax.spines.values():
            spine.set_edgecolor("#30363d")
        ax.grid(True, alpha=0.15, color="#30363d")
        ax.legend(facecolor="#21262d", edgecolor="#30363d", labelcolor="white", fontsize=9)

    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, dpi=150, bbox_inches="tight", facecolor=fig.get_facecolor())
    plt.close(fig)
    print(f"[OK] Plot saved → {output}")
    return output


def main() -> None:
    parser = argparse.ArgumentParser(description="Bound comparison across graph families")
    parser.add_argument("--families", default=",".join(FAMILIES))
    parser.add_argument("--nmin", type=int, default=2)
    parser.add_argument("--nmax", type=int, default=8)
    parser.add_argument("--csv", type=Path, default=ROOT / "family_comparison.csv")
    parser.add_argument("--plot", action="store_true")
    parser.add_argument("--output", type=Path, default=ROOT / "family_comparison.png")
    args = parser.parse_args()

    families = [f.strip() for f in args.families.split(",") if f.strip()]
    print(f"Running compare for {', '.join(families)} N={args.nmin}..{args.nmax} ...",
          flush=True)
    rows = run_compare(families, args.nmin, args.nmax)
    print()
    print_table(rows, families)

    args.csv.parent.mkdir(parents=True, exist_ok=True)
    rows.to_csv(args.csv, index=False, float_format="%.12g")
    print()
    print(f"Rows written to {args.csv}")
    if args.plot:
        plot_rows(rows, args.output)


if __name__ == "__main__":
    main()
