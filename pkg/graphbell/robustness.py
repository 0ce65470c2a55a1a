"""
Robust self-testing: linear fidelity bounds F ≥ s·β + μ.

Measurements are reduced to one Jordan angle α_i ∈ [0, π/2] per party. Each
party applies the extraction channel Λ(ρ) = (1+g)/2·ρ + (1−g)/2·ΓρΓ, and the
dressed target K = (Λ_1 ⊗ … ⊗ Λ_N)(|ψ⟩⟨ψ|) must dominate s·B + μ·1 for
every α. For a fixed slope s the best intercept is μ(s) = min_α λ_min(K − sB);
the optimal slope is the smallest s whose bound reaches fidelity 1 at the
quantum bound.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product

import networkx as nx
import numpy as np
import pandas as pd
from networkx.algorithms.isomorphism import GraphMatcher
from scipy.optimize import minimize

from graphbell.bounds import GRAPH_KINDS, ObservableSet, expression_graph, kron_all
from graphbell.config import Settings
from graphbell.errors import CheckFailure, ConvergenceError, InputError, guard
from graphbell.graphs import Graph
from graphbell.inequalities import SQRT2, BellExpression, build_graph_inequality
from graphbell.pauli_states import IDENTITY, PAULI_X, PAULI_Z, graph_state

log = logging.getLogger(__name__)

IDEAL = math.pi / 4
SIGMA_H = (PAULI_X + PAULI_Z) / SQRT2
SIGMA_V = (PAULI_X - PAULI_Z) / SQRT2
CURVE_COLUMNS = ["relative_violation", "fidelity_bound"]
MAX_SLOPE_DOUBLINGS = 10
BISECTION_STEPS = 60
BATCH_ELEMENTS = 1 << 22
CACHE_ELEMENTS = 1 << 24


# ─── Measurements and channels ────────────────────────────────────────────────

def check_angles(alpha: np.ndarray | list[float]) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1 or not np.all((a >= 0) & (a <= math.pi / 2)):
        raise InputError("Jordan angles must be a vector in [0, π/2]")
    return a


def _basis(party: int, pivots: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    return (PAULI_X, PAULI_Z) if party in pivots else (SIGMA_H, SIGMA_V)


def jordan_observables(alpha: np.ndarray | list[float],
                       pivots: tuple[int, ...] = (1,)) -> ObservableSet:
    """A_x = cos α·P + (−1)^x sin α·Q with (P, Q) = (X, Z) at pivots, (H, V) elsewhere."""
    a = check_angles(alpha)
    pairs = []
    for party, angle in enumerate(a, start=1):
        p, q = _basis(party, pivots)
        c, s = math.cos(angle), math.sin(angle)
        pairs.append((c * p + s * q, c * p - s * q))
    return ObservableSet(tuple(pairs))


def gain(x: float | np.ndarray) -> float | np.ndarray:
    """(1 + √2)(sin x + cos x − 1); equals 1 at π/4 and 0 at both ends."""
    return (1 + SQRT2) * (np.sin(x) + np.cos(x) - 1)


def extraction_operator(party: int, x: float, pivots: tuple[int, ...] = (1,)) -> np.ndarray:
    """Γ(x): the first basis operator for x ≤ π/4, the second otherwise."""
    p, q = _basis(party, pivots)
    return p if x <= IDEAL else q


def apply_channel(rho: np.ndarray, party: int, x: float, n: int,
                  pivots: tuple[int, ...] = (1,)) -> np.ndarray:
    """Single-party extraction channel; self-dual, so also its own adjoint."""
    gam = kron_all([extraction_operator(party, x, pivots) if p == party else IDENTITY
                    for p in range(1, n + 1)])
    g = float(gain(x))
    return (1 + g) / 2 * rho + (1 - g) / 2 * gam @ rho @ gam


def _as_graph_expression(source: Graph | BellExpression) -> BellExpression:
    e = build_graph_inequality(source) if isinstance(source, Graph) else source
    if e.kind not in GRAPH_KINDS:
        raise InputError(f"robustness needs a graph-family expression, got {e.kind!r}")
    if e.meta.get("relabeled"):
        raise InputError("robustness is defined in the unrelabeled frame")
    return e


def dressed_target(source: Graph | BellExpression, alpha: np.ndarray | list[float],
                   limit: int = 7) -> np.ndarray:
    """K(α): the channels applied one party at a time to |ψ_G⟩⟨ψ_G|."""
    e = _as_graph_expression(source)
    guard(e.n, limit, "dressed_target")
    a = check_angles(alpha)
    pivots = tuple(e.substitution_parties())
    psi = graph_state(expression_graph(e)).amplitudes
    rho = np.outer(psi, psi.conj())
    for party, x in enumerate(a, start=1):
        rho = apply_channel(rho, party, x, e.n, pivots)
    return rho


# ─── Batched operators ────────────────────────────────────────────────────────

class RobustnessModel:
    """K(α) and B(α) for stacks of angle vectors.

    B is expanded once into fixed operator strings M_k weighted by products of
    cos α_p and sin α_p, so B(α) = Σ_k f_k(α) M_k.
    """

    def __init__(self, e: BellExpression, limit: int = 7) -> None:
        self.expression = _as_graph_expression(e)
        guard(e.n, limit, "robustness")
        self.n = e.n
        self.dim = 1 << e.n
        self.pivots = tuple(e.substitution_parties())
        psi = graph_state(expression_graph(e)).amplitudes
        self.psi = psi
        self.rho = np.outer(psi, psi.conj())
        self._branches = [
            tuple(kron_all([op if p == party else IDENTITY for p in range(1, self.n + 1)])
                  for op in _basis(party, self.pivots))
            for party in range(1, self.n + 1)
        ]
        self._cos, self._sin, self._strings = self._expand()

    def _expand(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        acc: dict[tuple, np.ndarray] = {}
        for t in self.expression.terms:
            options = []
            for party, s in t.factors:
                p, q = _basis(party, self.pivots)
                w0, w1 = s.weights
                opts = []
                if w0 + w1:
                    opts.append((party, "c", (w0 + w1) * p))
                if w0 - w1:
                    opts.append((party, "s", (w0 - w1) * q))
                options.append(opts)
            for choice in product(*options):
                key = tuple((party, trig) for party, trig, _ in choice)
                local = {party: op for party, _, op in choice}
                m = t.coeff * kron_all([local.get(p, IDENTITY) for p in range(1, self.n + 1)])
                acc[key] = acc[key] + m if key in acc else m
        keys = list(acc)
        cos_mask = np.zeros((len(keys), self.n), dtype=bool)
        sin_mask = np.zeros((len(keys), self.n), dtype=bool)
        for k, key in enumerate(keys):
            for party, trig in key:
                (cos_mask if trig == "c" else sin_mask)[k, party - 1] = True
        return cos_mask, sin_mask, np.stack([acc[k] for k in keys])

    def bell(self, angles: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(angles)[:, None, :]
        weights = np.prod(np.where(self._cos, np.cos(a), 1.0)
                          * np.where(self._sin, np.sin(a), 1.0), axis=2)
        return np.einsum("gk,kij->gij", weights, self._strings)

    def dressed(self, angles: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(angles)
        rho = np.broadcast_to(self.rho, (a.shape[0], self.dim, self.dim)).copy()
        for party in range(self.n):
            x = a[:, party]
            keep = ((1 + gain(x)) / 2)[:, None, None]
            first, second = self._branches[party]
            flipped = np.where((x <= IDEAL)[:, None, None],
                               first @ rho @ first, second @ rho @ second)
            rho = keep * rho + (1 - keep) * flipped
        return rho

    def min_eigenvalues(self, angles: np.ndarray, s: float) -> np.ndarray:
        return np.linalg.eigvalsh(self.dressed(angles) - s * self.bell(angles))[:, 0]

    def objective(self, alpha: np.ndarray, s: float) -> float:
        a = np.clip(alpha, 0.0, math.pi / 2)
        return float(self.min_eigenvalues(a[None, :], s)[0])


class Landscape:
    """λ_min(K − sB) over a fixed angle set, for many slopes s."""

    def __init__(self, model: RobustnessModel, angles: np.ndarray, workers: int = 1) -> None:
        self.model = model
        self.angles = angles
        self.workers = max(1, workers)
        step = max(1, BATCH_ELEMENTS // (model.dim * model.dim))
        self._chunks = [angles[i:i + step] for i in range(0, len(angles), step)]
        self._cache: list[tuple[np.ndarray, np.ndarray]] | None = None
        if len(angles) * model.dim * model.dim <= CACHE_ELEMENTS:
            self._cache = [(model.dressed(c), model.bell(c)) for c in self._chunks]

    def _chunk_min(self, idx: int, s: float) -> np.ndarray:
        if self._cache is not None:
            k, b = self._cache[idx]
            return np.linalg.eigvalsh(k - s * b)[:, 0]
        return self.model.min_eigenvalues(self._chunks[idx], s)

    def values(self, s: float) -> np.ndarray:
        if self.workers > 1 and len(self._chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(lambda i: self._chunk_min(i, s), range(len(self._chunks))))
        else:
            parts = [self._chunk_min(i, s) for i in range(len(self._chunks))]
        return np.concatenate(parts)


# ─── Search ───────────────────────────────────────────────────────────────────

def party_orbits(e: BellExpression) -> list[list[int]]:
    """Parties exchanged by graph automorphisms that keep the pivot set fixed."""
    g = expression_graph(e).to_networkx()
    pivots = {p - 1 for p in e.substitution_parties()}
    nx.set_node_attributes(g, {v: v in pivots for v in g.nodes}, "pivot")
    matcher = GraphMatcher(g, g, node_match=lambda a, b: a["pivot"] == b["pivot"])
    orbit = {v: {v} for v in g.nodes}
    for auto in matcher.isomorphisms_iter():
        for v, w in auto.items():
            orbit[v].add(w)
    groups = {min(o): sorted(p + 1 for p in o) for o in orbit.values()}
    return [groups[k] for k in sorted(groups)]


def angle_grid(n: int, points: int, orbits: list[list[int]] | None = None) -> np.ndarray:
    """Full grid over [0, π/2]^N, or one shared axis per orbit; always holds the ideal point."""
    axis = np.linspace(0.0, math.pi / 2, points)
    orbits = orbits or [[p] for p in range(1, n + 1)]
    reduced = np.stack(np.meshgrid(*[axis] * len(orbits), indexing="ij"), -1)
    reduced = reduced.reshape(-1, len(orbits))
    full = np.empty((reduced.shape[0], n))
    for col, group in enumerate(orbits):
        for party in group:
            full[:, party - 1] = reduced[:, col]
    if not np.any(np.all(np.isclose(full, IDEAL), axis=1)):
        full = np.vstack([np.full(n, IDEAL), full])
    return full


@dataclass
class MuEstimate:
    slope: float
    grid_min: float
    refined_min: float
    argmin: list[float]
    refinement_converged: bool = True

    @property
    def value(self) -> float:
        return min(self.grid_min, self.refined_min)


def _refine(model: RobustnessModel, starts: np.ndarray, s: float,
            cfg: Settings) -> tuple[float, np.ndarray, bool]:
    best, where, converged = math.inf, starts[0], True
    for x0 in starts:
        res = minimize(model.objective, x0, args=(s,), method="Nelder-Mead",
                       options={"maxiter": cfg.simplex_iter, "xatol": 1e-9, "fatol": 1e-13})
        converged &= bool(res.success)
        if res.fun < best:
            best, where = float(res.fun), np.clip(res.x, 0.0, math.pi / 2)
    return best, where, converged


def mu_for_slope(source: Graph | BellExpression, s: float, settings: Settings | None = None,
                 landscape: Landscape | None = None) -> MuEstimate:
    """μ(s) = min_α λ_min(K(α) − sB(α)) by grid search plus Nelder-Mead refinement."""
    cfg = settings or Settings()
    if s < 0:
        raise InputError(f"slope must be non-negative, got {s}")
    if landscape is None:
        e = _as_graph_expression(source)
        model = RobustnessModel(e, cfg.robust_limit)
        orbits = party_orbits(e) if cfg.symmetry_reduction else None
        landscape = Landscape(model, angle_grid(e.n, cfg.grid_points, orbits), cfg.workers)
    model = landscape.model

    values = landscape.values(s)
    order = np.argsort(values, kind="stable")
    starts = landscape.angles[order[: max(1, cfg.restarts)]]
    refined, where, converged = _refine(model, starts, s, cfg)
    if not converged:
        log.warning("Nelder-Mead refinement hit %d iterations at s=%.6g; grid value kept",
                    cfg.simplex_iter, s)
    grid_min = float(values[order[0]])
    argmin = where if refined < grid_min else landscape.angles[order[0]]
    return MuEstimate(s, grid_min, refined, [float(x) for x in argmin], converged)


@dataclass
class RobustnessBound:
    slope: float
    intercept: float
    beta_c: float
    beta_q: float
    threshold: float
    grid_points: int
    symmetry_reduction: bool
    bracket: list[float]
    search_mu: float
    margin: float
    validation_margin: float | None = None
    validation_samples: int = 0
    seed: int | None = None
    argmin: list[float] = field(default_factory=list)

    def fidelity(self, beta: float) -> float:
        return self.slope * beta + self.intercept

    def to_dict(self) -> dict:
        return asdict(self)


def optimal_slope(source: Graph | BellExpression,
                  settings: Settings | None = None) -> RobustnessBound:
    """Smallest slope whose bound reaches fidelity 1 at β_Q, then validated on fresh angles."""
    cfg = settings or Settings()
    e = _as_graph_expression(source)
    beta_q, beta_c = e.meta["beta_q"], e.meta["beta_c"]
    model = RobustnessModel(e, cfg.robust_limit)
    orbits = party_orbits(e) if cfg.symmetry_reduction else None
    landscape = Landscape(model, angle_grid(e.n, cfg.grid_points, orbits), cfg.workers)

    def reaches_one(s: float) -> bool:
        mu = mu_for_slope(e, s, cfg, landscape).value
        return s * beta_q + mu >= 1 - cfg.slope_tol

    lo, hi = 0.0, 1.0
    for _ in range(MAX_SLOPE_DOUBLINGS):
        if reaches_one(hi):
            break
        lo, hi = hi, 2 * hi
    else:
        raise ConvergenceError(f"no slope in [0, {hi:g}] reaches fidelity 1 at β_Q")
    bracket = [lo, hi]

    for _ in range(BISECTION_STEPS):
        if hi - lo <= cfg.slope_tol * hi:
            break
        mid = (lo + hi) / 2
        lo, hi = (lo, mid) if reaches_one(mid) else (mid, hi)

    slope = hi * (1 + cfg.slope_margin)
    intercept = 1 - slope * beta_q
    found = mu_for_slope(e, slope, cfg, landscape)
    margin = found.value - intercept
    if margin < -cfg.slope_tol:
        raise CheckFailure(f"search found λ_min {found.value:.9g} below the intercept "
                           f"{intercept:.9g} at slope {slope:.9g}")
    log.info("optimal slope %.6g (threshold %.6g), intercept %.6g", slope, hi, intercept)
    bound = RobustnessBound(
        slope=slope, intercept=intercept, beta_c=beta_c, beta_q=beta_q, threshold=hi,
        grid_points=cfg.grid_points, symmetry_reduction=cfg.symmetry_reduction,
        bracket=bracket, search_mu=found.value, margin=margin, argmin=found.argmin,
    )
    validate_bound(bound, e, cfg)
    return bound


def validate_bound(bound: RobustnessBound, source: Graph | BellExpression,
                   settings: Settings | None = None, samples: int | None = None,
                   seed: int | None = None) -> float:
    """Min over fresh uniform angle vectors of λ_min(K − sB) − μ; records it on `bound`."""
    cfg = settings or Settings()
    e = _as_graph_expression(source)
    samples = cfg.validation_samples if samples is None else samples
    seed = cfg.seed if seed is None else seed
    model = RobustnessModel(e, cfg.robust_limit)
    angles = np.random.default_rng(seed).uniform(0.0, math.pi / 2, size=(samples, e.n))
    angles = np.vstack([np.full(e.n, IDEAL), angles])
    values = Landscape(model, angles, cfg.workers).values(bound.slope)
    margin = float(values.min() - bound.intercept)
    bound.validation_margin, bound.validation_samples, bound.seed = margin, samples, seed
    if margin < -1e-8:
        log.error("bound violated on a fresh sample: margin %.3e", margin)
        raise CheckFailure(f"robustness bound invalid: λ_min − μ = {margin:.3e}")
    return margin


def fidelity_curve(bound: RobustnessBound, points: int = 21) -> pd.DataFrame:
    """Rows (relative violation, s·β + μ) for β from β_C to β_Q."""
    if points < 2:
        raise InputError(f"curve needs at least 2 points, got {points}")
    beta = np.linspace(bound.beta_c, bound.beta_q, points)
    return pd.DataFrame({
        CURVE_COLUMNS[0]: (beta - bound.beta_c) / (bound.beta_q - bound.beta_c),
        CURVE_COLUMNS[1]: bound.slope * beta + bound.intercept,
    })
