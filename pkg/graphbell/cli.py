"""
graphbell command line.

Usage:
    graphbell build --ring 5
    graphbell bounds --ring 7 --bruteforce --eig
    graphbell certify --ring 5 --draws 100 --seed 7
    graphbell selftest --star 5 [--perturb 0.02]
    graphbell robust --star 3 --grid 9 --out curve.csv
    graphbell compare --nmin 2 --nmax 8
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from collections.abc import Callable
from dataclasses import fields
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from graphbell import __version__
from graphbell.bounds import (
    bound_report,
    canonical_observables,
    evaluate_expression,
    perturb_observables,
    target_state,
)
from graphbell.certificates import canonical_relations, certify
from graphbell.config import Settings, load_settings
from graphbell.errors import GraphBellError, InputError
from graphbell.graphs import BUILTIN_KINDS, Graph, builtin_graph, load_graph
from graphbell.inequalities import (
    BellExpression,
    build_graph_inequality,
    build_multi_substitution,
    build_ring_max,
    build_tilted_ghz,
    expand_atomic,
    ratio,
)
from graphbell.pauli_states import dump_state, load_state
from graphbell.robustness import fidelity_curve, optimal_slope
from graphbell.selftesting import selftest_report

log = logging.getLogger("graphbell")

COUNT_NOTE = ("atomic correlator count is N + n_max + 1 by expansion; a published "
              "count of N − n_max − 1 conflicts with it")


# ─── Setup ────────────────────────────────────────────────────────────────────

def setup_logging(verbose: bool, quiet: bool) -> None:
    logging.addLevelName(logging.WARNING, "WARN")
    level = logging.DEBUG if verbose else logging.ERROR if quiet else logging.INFO
    logging.basicConfig(level=level, format="[%(levelname)s] %(message)s",
                        stream=sys.stderr, force=True)


def _parse_set(items: list[str]) -> dict:
    known = {f.name for f in fields(Settings)}
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep or key not in known:
            raise InputError(f"--set expects KEY=VALUE with a known key, got {item!r}",
                             reason="unknown_config_key")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InputError(f"--set {key}: value {raw!r} is not JSON", reason="parse") from exc
    return out


def resolve_settings(args: argparse.Namespace) -> Settings:
    cfg = load_settings(args.config)
    flags = {name: getattr(args, name, None)
             for name in ("seed", "workers", "draws", "grid_points")}
    return cfg.override(**flags, **_parse_set(args.set))


def _parse_subs(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"--subs expects comma-separated vertices, got {text!r}",
                         reason="parse") from exc


def resolve_graph(args: argparse.Namespace) -> Graph | None:
    for kind in BUILTIN_KINDS:
        n = getattr(args, kind, None)
        if n is not None:
            return builtin_graph(kind, n)
    if getattr(args, "graph", None):
        path = Path(args.graph)
        if not path.exists():
            raise InputError(f"graph file not found: {path}", reason="missing_file")
        return load_graph(path.read_text())
    return None


def resolve_expression(args: argparse.Namespace) -> BellExpression:
    if getattr(args, "expression", None):
        path = Path(args.expression)
        if not path.exists():
            raise InputError(f"expression file not found: {path}", reason="missing_file")
        return BellExpression.from_json(path.read_text())
    if getattr(args, "tilted", None):
        n, theta = args.tilted
        try:
            n, theta = int(n), float(theta)
        except ValueError as exc:
            raise InputError(f"--tilted expects an integer N and a float θ: {exc}",
                             reason="parse") from exc
        return build_tilted_ghz(n, theta)
    if getattr(args, "ring_max", None):
        return build_ring_max(args.ring_max)
    g = resolve_graph(args)
    if g is None:
        raise InputError("no input: pass a builtin graph, --graph, --tilted or --expression")
    if getattr(args, "subs", None):
        return build_multi_substitution(g, _parse_subs(args.subs))
    return build_graph_inequality(g)


def _inputs(e: BellExpression) -> dict:
    doc = {"expression": e.to_dict()}
    graph = e.meta.get("graph")
    if graph:
        g = Graph.from_edges(graph["n"], graph["edges"])
        doc["graph"] = g.canonical_json()
        doc["hash"] = g.digest()
    return doc


def _versions() -> dict:
    try:
        own = metadata.version("graphbell")
    except metadata.PackageNotFoundError:
        own = __version__
    return {"graphbell": own, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def run_report(command: str, inputs: dict, results: dict, cfg: Settings,
               started: float) -> dict:
    return {
        "command": command,
        "inputs": inputs,
        "results": results,
        "versions": _versions(),
        "seed": cfg.seed,
        "settings": cfg.to_dict(),
        "wall_time_s": round(time.perf_counter() - started, 6),
    }


def _emit(report: dict, as_json: bool, table: Callable[[], None]) -> None:
    if as_json:
        print(json.dumps(report, indent=2, sort_keys=True, default=float))
    else:
        table()


def fmt(val, decimals: int = 10) -> str:
    if val is None:
        return "N/A"
    if isinstance(val, bool):
        return "yes" if val else "no"
    if isinstance(val, (int, np.integer)):
        return str(val)
    return f"{val:.{decimals}f}" if abs(val) < 1e6 else f"{val:.4e}"


def _rows(rows: list[tuple[str, object]], width: int = 28) -> None:
    for label, val in rows:
        print(f"{label:<{width}}{fmt(val):>22}")


# ─── Commands ─────────────────────────────────────────────────────────────────

def cmd_build(args: argparse.Namespace, cfg: Settings) -> int:
    e = resolve_expression(args)
    print(e.to_json())
    return 0


def cmd_bounds(args: argparse.Namespace, cfg: Settings) -> int:
    started = time.perf_counter()
    e = resolve_expression(args)
    report = bound_report(e, cfg, bruteforce=args.bruteforce, eig=args.eig)
    results = report.to_dict()
    results["atomic_correlators"] = len(expand_atomic(e))
    if e.kind == "graph":
        results["note"] = COUNT_NOTE

    def table() -> None:
        print(f"Bounds — {e.kind}, N={e.n}")
        print("-" * 50)
        _rows([("β_C (closed form)", report.beta_c_formula),
               ("β_C (brute force)", report.beta_c_bruteforce),
               ("β_Q (closed form)", report.beta_q_formula),
               ("⟨ψ|B|ψ⟩ (canonical)", report.state_value),
               ("λ_max(B)", report.lambda_max),
               ("β_Q / β_C", report.ratio),
               ("atomic correlators", results["atomic_correlators"]),
               ("cross-checks agree", report.ok)])

    _emit(run_report("bounds", _inputs(e), results, cfg, started), args.json, table)
    return 0 if report.ok else 1


def cmd_certify(args: argparse.Namespace, cfg: Settings) -> int:
    started = time.perf_counter()
    e = resolve_expression(args)
    report = certify(e, cfg)
    results = report.to_dict()
    results["relations"] = canonical_relations(e, cfg)

    def table() -> None:
        print(f"SOS certificate — {e.kind}, N={e.n}, {report.draws} draws, seed {report.seed}")
        print("-" * 50)
        _rows([("β_Q", report.beta_q),
               ("residual (canonical)", report.canonical_residual),
               ("max residual", report.max_residual),
               ("max ‖(1 − P)|ψ⟩‖", max(results["relations"].values())),
               ("pass", report.passed)])

    _emit(run_report("certify", _inputs(e), results, cfg, started), args.json, table)
    return 0 if report.passed else 1


def cmd_selftest(args: argparse.Namespace, cfg: Settings) -> int:
    started = time.perf_counter()
    e = resolve_expression(args)
    v = load_state(args.state) if args.state else target_state(e, cfg.dense_state_limit)
    obs = canonical_observables(e)
    if args.perturb:
        obs = perturb_observables(obs, args.party, args.perturb)
    if args.dump:
        dump_state(v, args.dump)
    report = selftest_report(e, v, obs, cfg, spectrum=args.spectrum)
    results = report.to_dict()
    results["bell_value"] = evaluate_expression(e, v, obs)
    results["perturbation"] = {"party": args.party, "epsilon": args.perturb}

    def table() -> None:
        print(f"Self-test — {e.kind}, N={e.n}")
        print("-" * 50)
        _rows([("Bell value", results["bell_value"]),
               ("extraction fidelity", report.fidelity),
               ("Schmidt rank", report.schmidt_rank)])
        print(f"{'party':<8}{'‖{X,Z}|ψ⟩‖':>22}")
        for party, norm in report.anticommutators.items():
            print(f"{party:<8}{norm:>22.3e}")
        _rows([("pass", report.passed)])

    _emit(run_report("selftest", _inputs(e), results, cfg, started), args.json, table)
    return 0 if report.passed else 1


def cmd_robust(args: argparse.Namespace, cfg: Settings) -> int:
    started = time.perf_counter()
    if args.symmetry:
        cfg = cfg.override(symmetry_reduction=True)
    e = resolve_expression(args)
    bound = optimal_slope(e, cfg)
    curve = fidelity_curve(bound, args.points)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        curve.to_csv(args.out, index=False, float_format="%.12g")
        log.info("fidelity curve written to %s (%d rows)", args.out, len(curve))
    results = bound.to_dict()
    results["curve"] = args.out

    def table() -> None:
        print(f"Robustness — {e.kind}, N={e.n}, grid {cfg.grid_points}")
        print("-" * 50)
        _rows([("slope s", bound.slope), ("intercept μ", bound.intercept),
               ("s·β_Q + μ", bound.fidelity(bound.beta_q)),
               ("s·β_C + μ", bound.fidelity(bound.beta_c)),
               ("search margin", bound.margin),
               ("validation margin", bound.validation_margin)])
        if not args.out:
            print()
            print(curve.to_string(index=False))

    _emit(run_report("robust", _inputs(e), results, cfg, started), args.json, table)
    return 0


def cmd_compare(args: argparse.Namespace, cfg: Settings) -> int:
    started = time.perf_counter()
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    rows = []
    for kind in families:
        for n in range(args.nmin, args.nmax + 1):
            try:
                e = build_graph_inequality(builtin_graph(kind, n))
            except GraphBellError as exc:
                log.debug("skipping %s N=%d: %s", kind, n, exc)
                continue
            rows.append({"family": kind, "n": n, "n_max": e.meta["n_max"],
                         "beta_c": e.beta_c, "beta_q": e.beta_q, "ratio": ratio(e),
                         "atomic_correlators": len(expand_atomic(e))})

    def table() -> None:
        header = (f"{'Family':<10}{'N':>4}{'n_max':>7}{'β_C':>10}{'β_Q':>14}"
                  f"{'ratio':>10}{'correlators':>13}")
        print(header)
        print("-" * len(header))
        for r in rows:
            print(f"{r['family']:<10}{r['n']:>4}{r['n_max']:>7}{r['beta_c']:>10.0f}"
                  f"{r['beta_q']:>14.8f}{r['ratio']:>10.6f}{r['atomic_correlators']:>13}")
        print()
        print(f"Note: {COUNT_NOTE}")

    _emit(run_report("compare", {"families": families, "n_range": [args.nmin, args.nmax]},
                     {"rows": rows}, cfg, started), args.json, table)
    return 0


# ─── Parser ───────────────────────────────────────────────────────────────────

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="settings JSON (default: ./config.json if present)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any setting, e.g. --set sos_tol=1e-10")
    p.add_argument("--json", action="store_true", help="emit the JSON run report")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("-q", "--quiet", action="store_true")


def _add_source(p: argparse.ArgumentParser, tilted: bool = True,
                expression: bool = True) -> None:
    src = p.add_mutually_exclusive_group()
    for kind in BUILTIN_KINDS:
        src.add_argument(f"--{kind}", type=int, metavar="N")
    src.add_argument("--graph", metavar="FILE", help='graph JSON {"n": .., "edges": [..]}')
    src.add_argument("--ring-max", type=int, metavar="L", help="ring N=3L, k=L substitutions")
    if tilted:
        src.add_argument("--tilted", nargs=2, metavar=("N", "THETA"))
    if expression:
        src.add_argument("--expression", metavar="FILE", help="expression JSON from `build`")
    p.add_argument("--subs", help='substitution vertices, e.g. "1,4"')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphbell",
        description="Bell inequalities from graph-state stabilizers: bounds, "
                    "certificates and self-testing",
    )
    parser.add_argument("--version", action="version", version=f"graphbell {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="emit the Bell expression JSON")
    _add_source(p, expression=False)
    _add_common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("bounds", help="closed-form bounds with optional oracles")
    _add_source(p)
    p.add_argument("--bruteforce", action="store_true", help="enumerate all 4^N strategies")
    p.add_argument("--eig", action="store_true", help="extremal eigenvalue of B")
    _add_common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("certify", help="verify the sum-of-squares certificate")
    _add_source(p)
    p.add_argument("--draws", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("selftest", help="run the SWAP-isometry extraction")
    _add_source(p)
    p.add_argument("--perturb", type=float, default=0.0, metavar="EPS")
    p.add_argument("--party", type=int, default=1, help="party rotated by --perturb")
    p.add_argument("--state", metavar="PATH", help="state saved with --dump")
    p.add_argument("--dump", metavar="PATH", help="write the tested state to PATH.bin/.json")
    p.add_argument("--spectrum", action="store_true", help="include ρ_anc eigenvalues")
    _add_common(p)
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("robust", help="optimal-slope fidelity bound and curve")
    _add_source(p, tilted=False)
    p.add_argument("--grid", dest="grid_points", type=int, metavar="N")
    p.add_argument("--points", type=int, default=21, help="curve rows")
    p.add_argument("--symmetry", action="store_true", help="share angles across symmetric parties")
    p.add_argument("--out", metavar="CSV")
    _add_common(p)
    p.set_defaults(func=cmd_robust)

    p = sub.add_parser("compare", help="table of bounds across builtin families")
    p.add_argument("--families", default=",".join(BUILTIN_KINDS))
    p.add_argument("--nmin", type=int, default=2)
    p.add_argument("--nmax", type=int, default=8)
    _add_common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.quiet)
    try:
        cfg = resolve_settings(args)
        return args.func(args, cfg)
    except GraphBellError as exc:
        log.error("%s", exc)
        print(json.dumps(exc.to_dict()))
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
