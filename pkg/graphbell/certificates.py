"""
Sum-of-squares certificates for the quantum bounds.

For the graph family every term of the expression is turned into one square:
a SUM term with coefficient n_j gives weight n_j/√2 and P = term/√2, a DIFF
term gives weight 1/√2 and P = term/√2, a plain term gives weight 1/2 and
P = term. Then β_Q·1 − B = Σ w (1 − P)² for any unit-square observables.

For the tilted GHZ family the squares are built from the rotated pivot
operators X̃ = (A0 + A1)/(2 sin μ) and Z̃ = (A0 − A1)/(2 cos μ), with
2(β_Q·1 − B) = Σ α² (1 − S̃)².
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from graphbell.bounds import (
    GRAPH_KINDS,
    ObservableSet,
    bell_operator,
    canonical_observables,
    kron_all,
    quantum_bound_formula,
    random_jordan_observables,
    target_state,
)
from graphbell.config import Settings
from graphbell.errors import InputError, guard
from graphbell.graphs import Graph
from graphbell.inequalities import (
    KIND_TILTED,
    SQRT2,
    BellExpression,
    Setting,
    build_graph_inequality,
    build_tilted_ghz,
)
from graphbell.pauli_states import IDENTITY, StateVector, apply_local

log = logging.getLogger(__name__)


@dataclass
class SosCertificate:
    kind: str
    beta_q: float
    weights: list[float]
    squares: list[np.ndarray] = field(repr=False)
    scale: float = 1.0  # scale·(β_Q·1 − B) = Σ w (1 − P)²

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.squares[0].shape[0], dtype=complex)

    def sum_of_squares(self) -> np.ndarray:
        one = self.identity
        return sum(w * (one - p) @ (one - p) for w, p in zip(self.weights, self.squares))


# ─── Graph family ─────────────────────────────────────────────────────────────

def _check_size(n: int, obs: ObservableSet) -> None:
    if obs.n != n:
        raise InputError(f"{obs.n} observable pairs for a {n}-party expression")


def _as_expression(source: Graph | BellExpression) -> BellExpression:
    e = build_graph_inequality(source) if isinstance(source, Graph) else source
    if e.kind not in GRAPH_KINDS:
        raise InputError(f"graph SOS needs a graph-family expression, got {e.kind!r}")
    return e


def _graph_square_specs(e: BellExpression) -> list[tuple[float, float, dict[int, Setting]]]:
    """(weight, operator scale, factors) for each square term."""
    specs = []
    for t in e.terms:
        sign = math.copysign(1.0, t.coeff)
        if any(not s.is_atomic for _, s in t.factors):
            specs.append((abs(t.coeff) / SQRT2, sign / SQRT2, t.factor_map))
        else:
            specs.append((abs(t.coeff) / 2, sign, t.factor_map))
    return specs


def graph_sos_terms(source: Graph | BellExpression, obs: ObservableSet,
                    limit: int = 8) -> list[tuple[float, np.ndarray]]:
    """Weighted square operators P_i with observables substituted."""
    e = _as_expression(source)
    guard(e.n, limit, "graph_sos_terms")
    _check_size(e.n, obs)
    out = []
    for weight, scale, factors in _graph_square_specs(e):
        ops = [obs.setting(p, factors[p]) if p in factors else IDENTITY
               for p in range(1, e.n + 1)]
        out.append((weight, scale * kron_all(ops)))
    return out


def graph_certificate(source: Graph | BellExpression, obs: ObservableSet,
                      limit: int = 8) -> SosCertificate:
    e = _as_expression(source)
    terms = graph_sos_terms(e, obs, limit)
    return SosCertificate(e.kind, quantum_bound_formula(e),
                          [w for w, _ in terms], [p for _, p in terms])


def sos_residual(source: Graph | BellExpression, obs: ObservableSet, limit: int = 8) -> float:
    """‖β_Q·1 − B(obs) − Σ w (1 − P)²‖_F."""
    e = _as_expression(source)
    cert = graph_certificate(e, obs, limit)
    gap = cert.beta_q * cert.identity - bell_operator(e, obs, limit)
    return float(np.linalg.norm(gap - cert.sum_of_squares()))


# ─── Tilted GHZ family ────────────────────────────────────────────────────────

def rotated_pivot(obs: ObservableSet, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """(X̃, Z̃) of party 1; they anticommute whenever A0² = A1²."""
    if not 0 < mu < math.pi / 2:
        raise InputError(f"μ = {mu} degenerates the rotated pivot operators",
                         reason="theta_range")
    a0, a1 = obs.pairs[0]
    return (a0 + a1) / (2 * math.sin(mu)), (a0 - a1) / (2 * math.cos(mu))


def _tilted_square_ops(n: int, theta: float,
                       obs: ObservableSet) -> tuple[list[dict[int, np.ndarray]], list]:
    """Per-square lists of (coeff, local ops) summands, and their α² weights."""
    _check_size(n, obs)
    mu = build_tilted_ghz(n, theta).meta["mu"]
    x1, z1 = rotated_pivot(obs, mu)
    s1 = [(math.sin(2 * theta), {1: x1, **{i: obs.pairs[i - 1][0] for i in range(2, n + 1)}}),
          (math.cos(2 * theta), {1: z1})]
    squares = [s1] + [[(1.0, {1: z1, i: obs.pairs[i - 1][1]})] for i in range(2, n + 1)]
    weights = [SQRT2 * (n - 1)] + [SQRT2] * (n - 1)
    return squares, weights


def tilted_certificate(n: int, theta: float, obs: ObservableSet,
                       limit: int = 8) -> SosCertificate:
    guard(n, limit, "tilted_sos_terms")
    squares, weights = _tilted_square_ops(n, theta, obs)
    dense = [sum(c * kron_all([ops.get(p, IDENTITY) for p in range(1, n + 1)])
                 for c, ops in summands) for summands in squares]
    return SosCertificate(KIND_TILTED, 2 * SQRT2 * (n - 1), weights, dense, scale=2.0)


def tilted_sos_residual(n: int, theta: float, obs: ObservableSet, limit: int = 8) -> float:
    """‖2(β_Q·1 − B) − Σ α² (1 − S̃)²‖_F."""
    e = build_tilted_ghz(n, theta)
    cert = tilted_certificate(n, e.meta["theta"], obs, limit)
    gap = cert.scale * (cert.beta_q * cert.identity - bell_operator(e, obs, limit))
    return float(np.linalg.norm(gap - cert.sum_of_squares()))


# ─── Relations on a state ─────────────────────────────────────────────────────

def stabilizer_residuals(e: BellExpression, v: StateVector,
                         obs: ObservableSet) -> dict[str, float]:
    """‖(1 − P)|v⟩‖ for every square, plus ‖(X̃² − 1)|v⟩‖, ‖(Z̃² − 1)|v⟩‖ when tilted."""
    out: dict[str, float] = {}
    amps = v.amplitudes
    if e.kind == KIND_TILTED:
        squares, _ = _tilted_square_ops(e.n, e.meta["theta"], obs)
        for idx, summands in enumerate(squares, start=1):
            pv = sum(c * apply_local(ops, amps) for c, ops in summands)
            out[f"S{idx}"] = float(np.linalg.norm(amps - pv))
        x1, z1 = rotated_pivot(obs, e.meta["mu"])
        out["X1^2"] = float(np.linalg.norm(apply_local({1: x1 @ x1}, amps) - amps))
        out["Z1^2"] = float(np.linalg.norm(apply_local({1: z1 @ z1}, amps) - amps))
        return out

    _as_expression(e)
    for idx, (_, scale, factors) in enumerate(_graph_square_specs(e), start=1):
        ops = {p: obs.setting(p, s) for p, s in factors.items()}
        out[f"P{idx}"] = float(np.linalg.norm(amps - scale * apply_local(ops, amps)))
    return out


# ─── Sweeps ───────────────────────────────────────────────────────────────────

@dataclass
class CertificateReport:
    kind: str
    n: int
    beta_q: float
    weights: list[float]
    seed: int
    draws: int
    canonical_residual: float
    residuals: list[float]
    max_residual: float
    theta: float | None = None
    tolerance: float = 1e-9
    passed: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def certify(e: BellExpression, settings: Settings | None = None,
            draws: int | None = None, seed: int | None = None) -> CertificateReport:
    """Residual at the canonical observables and over `draws` random Jordan draws."""
    cfg = settings or Settings()
    draws = cfg.draws if draws is None else draws
    seed = cfg.seed if seed is None else seed
    limit = cfg.dense_operator_limit

    if e.kind == KIND_TILTED:
        theta = e.meta["theta"]
        cert = tilted_certificate(e.n, theta, canonical_observables(e), limit)

        def residual(obs: ObservableSet) -> float:
            return tilted_sos_residual(e.n, theta, obs, limit)
    else:
        theta = None
        cert = graph_certificate(e, canonical_observables(e), limit)

        def residual(obs: ObservableSet) -> float:
            return sos_residual(e, obs, limit)

    streams = np.random.SeedSequence(seed).spawn(draws)

    def one_draw(ss: np.random.SeedSequence) -> float:
        return residual(random_jordan_observables(e.n, np.random.default_rng(ss)))

    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        residuals = list(pool.map(one_draw, streams))

    canonical = residual(canonical_observables(e))
    worst = max([canonical, *residuals])
    report = CertificateReport(
        kind=cert.kind, n=e.n, beta_q=cert.beta_q, weights=cert.weights, seed=seed,
        draws=draws, canonical_residual=canonical, residuals=residuals,
        max_residual=worst, theta=theta, tolerance=cfg.sos_tol,
        passed=worst < cfg.sos_tol,
    )
    log.info("SOS residual over %d draws: max %.3e (%s)", draws, worst,
             "pass" if report.passed else "FAIL")
    return report


def canonical_relations(e: BellExpression, settings: Settings | None = None) -> dict[str, float]:
    """`stabilizer_residuals` at the target state with canonical observables."""
    cfg = settings or Settings()
    return stabilizer_residuals(e, target_state(e, cfg.dense_state_limit),
                                canonical_observables(e))
