#!/usr/bin/env python3
"""
Landscape heatmap for the robustness search.

Sweeps the Jordan angles of two parties over [0, π/2] with every other party
held at π/4 and shows λ_min(K − sB) − μ for a fixed slope. Negative cells
mark angles where the linear bound s·β + μ would fail.

Usage:
    python3 scripts/slope_heatmap.py --star 3 --slope 0.9
    python3 scripts/slope_heatmap.py --ring 4 --parties 1,2 --points 31
"""

import argparse
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from graphbell.config import load_settings
from graphbell.errors import GraphBellError
from graphbell.graphs import BUILTIN_KINDS, builtin_graph
from graphbell.inequalities import build_graph_inequality
from graphbell.robustness import IDEAL, RobustnessModel, optimal_slope

ROOT = Path(__file__).resolve().parent.parent


def landscape_frame(model: RobustnessModel, parties: tuple[int, int], slope: float,
                    intercept: float, points: int) -> pd.DataFrame:
    """λ_min(K − sB) − μ on a points×points grid over the two parties' angles."""
    axis = np.linspace(0.0, math.pi / 2, points)
    a, b = np.meshgrid(axis, axis, indexing="ij")
    angles = np.full((points * points, model.n), IDEAL)
    angles[:, parties[0] - 1] = a.ravel()
    angles[:, parties[1] - 1] = b.ravel()
    values = model.min_eigenvalues(angles, slope) - intercept
    labels = [f"{x:.2f}" for x in axis]
    return pd.DataFrame(values.reshape(points, points), index=labels, columns=labels)


def plot_frame(frame: pd.DataFrame, parties: tuple[int, int], title: str, output: Path) -> Path:
    fig, ax = plt.subplots(figsize=(9, 7))
    fig.patch.set_facecolor("#0d1117")
    limit = float(np.abs(frame.to_numpy()).max()) or 1.0
    sns.heatmap(frame, ax=ax, cmap="RdYlGn", center=0.0, vmin=-limit, vmax=limit,
                cbar_kws={"shrink": 0.85, "label": "λ_min(K − sB) − μ"})
    ax.invert_yaxis()
    ax.set_title(title, color="white", fontsize=13)
    ax.set_ylabel(f"α_{parties[0]}", color="white")
    ax.set_xlabel(f"α_{parties[1]}", color="white")
    ax.tick_params(colors="white", labelsize=7)
    cbar = ax.collections[0].colorbar
    cbar.ax.tick_params(colors="white")
    cbar.ax.yaxis.label.set_color("white")

    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, dpi=150, bbox_inches="tight", facecolor=fig.get_facecolor())
    plt.close(fig)
    print(f"[OK] Heatmap saved → {output}")
    return output


def main() -> None:
    parser = argparse.ArgumentParser(description="λ_min landscape over two Jordan angles")
    family = parser.add_mutually_exclusive_group(required=True)
    for kind in BUILTIN_KINDS:
        family.add_argument(f"--{kind}", type=int, metavar="N")
    parser.add_argument("--parties", default="1,2", help="two comma-separated parties")
    parser.add_argument("--slope", type=float, help="fixed slope; searched when omitted")
    parser.add_argument("--points", type=int, default=25)
    parser.add_argument("--config", type=Path)
    parser.add_argument("--output", type=Path, default=ROOT / "slope_heatmap.png")
    args = parser.parse_args()

    kind, n = next((k, getattr(args, k)) for k in BUILTIN_KINDS if getattr(args, k))
    try:
        parties = tuple(int(p) for p in args.parties.split(","))
        if len(parties) != 2 or not all(1 <= p <= n for p in parties) or parties[0] == parties[1]:
            raise ValueError(args.parties)
    except ValueError:
        print(f"[ERROR] --parties needs two distinct parties in 1..{n}", file=sys.stderr)
        sys.exit(2)

    try:
        cfg = load_settings(args.config)
        e = build_graph_inequality(builtin_graph(kind, n))
        model = RobustnessModel(e, cfg.robust_limit)
        if args.slope is None:
            bound = optimal_slope(e, cfg)
            slope, intercept = bound.slope, bound.intercept
            print(f"Searched slope s={slope:.6f}, μ={intercept:.6f}")
        else:
            slope, intercept = args.slope, 1 - args.slope * e.beta_q
    except GraphBellError as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        sys.exit(2)

    frame = landscape_frame(model, parties, slope, intercept, args.points)
    worst = float(frame.to_numpy().min())
    print(f"min λ_min − μ over the sweep: {worst:.3e}")
    if worst < 0:
        print("[WARN] the linear bound fails somewhere on this sweep")
    plot_frame(frame, parties, f"{kind} N={n}, s={slope:.4f}", args.output)


if __name__ == "__main__":
    main()
