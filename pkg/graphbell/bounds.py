"""
Classical and quantum bounds of Bell expressions, with independent oracles.

Closed forms come from the expression's family; the classical oracle
enumerates every local deterministic strategy, and the quantum side is checked
twice: as a state expectation with the canonical observables and as the
largest eigenvalue of the Bell operator.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh
from scipy.stats import unitary_group

from graphbell.config import Settings
from graphbell.errors import CheckFailure, ConvergenceError, InputError, NoClosedFormError, guard
from graphbell.graphs import Graph
from graphbell.inequalities import (
    KIND_GRAPH,
    KIND_MULTI,
    KIND_RING,
    KIND_TILTED,
    SQRT2,
    BellExpression,
    Setting,
    expand_atomic,
    graph_family_bounds,
    tilted_classical_bound,
)
from graphbell.pauli_states import (
    HADAMARD,
    IDENTITY,
    PAULI_X,
    PAULI_Z,
    StateVector,
    apply_local,
    bit_parity,
    ghz_state,
    graph_state,
)

log = logging.getLogger(__name__)

GRAPH_KINDS = (KIND_GRAPH, KIND_MULTI, KIND_RING)
OBSERVABLE_TOL = 1e-12
CHUNK = 1 << 18
TILTED_CLASSICAL_TOL = 1e-9


# ─── Observables ──────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class ObservableSet:
    """Per-party pairs (A0, A1) of 2×2 Hermitian observables, party 1 first."""

    pairs: tuple[tuple[np.ndarray, np.ndarray], ...]
    strict: bool = True

    def __post_init__(self) -> None:
        pairs = tuple((np.asarray(a0, dtype=complex), np.asarray(a1, dtype=complex))
                      for a0, a1 in self.pairs)
        for party, pair in enumerate(pairs, start=1):
            for x, a in enumerate(pair):
                if a.shape != (2, 2):
                    raise InputError(f"A{x} of party {party} is not 2×2")
                if np.abs(a - a.conj().T).max() > OBSERVABLE_TOL:
                    raise InputError(f"A{x} of party {party} is not Hermitian")
                if self.strict and np.abs(a @ a - IDENTITY).max() > OBSERVABLE_TOL:
                    raise InputError(f"A{x} of party {party} does not square to 1")
        object.__setattr__(self, "pairs", pairs)

    @property
    def n(self) -> int:
        return len(self.pairs)

    def setting(self, party: int, s: Setting) -> np.ndarray:
        a0, a1 = self.pairs[party - 1]
        w0, w1 = s.weights
        return w0 * a0 + w1 * a1

    def replace(self, party: int, a0: np.ndarray, a1: np.ndarray,
                strict: bool | None = None) -> "ObservableSet":
        pairs = list(self.pairs)
        pairs[party - 1] = (a0, a1)
        return ObservableSet(tuple(pairs), self.strict if strict is None else strict)

    def unit_square_defect(self) -> float:
        return max(np.abs(a @ a - IDENTITY).max() for pair in self.pairs for a in pair)


def xz_pair(alpha: float, first: np.ndarray = PAULI_X,
            second: np.ndarray = PAULI_Z) -> tuple[np.ndarray, np.ndarray]:
    """(cos α·P + sin α·Q, cos α·P − sin α·Q) for anticommuting P, Q."""
    c, s = math.cos(alpha), math.sin(alpha)
    return c * first + s * second, c * first - s * second


def canonical_observables(e: BellExpression) -> ObservableSet:
    """Observables reaching β_Q on the target state of `e`."""
    rotated = set(e.substitution_parties())
    relabeled = set(e.meta.get("relabeled", []))
    if e.kind == KIND_TILTED:
        mu = e.meta["mu"]
        pivot = (math.sin(mu) * PAULI_X + math.cos(mu) * PAULI_Z,
                 math.sin(mu) * PAULI_X - math.cos(mu) * PAULI_Z)
    else:
        pivot = xz_pair(math.pi / 4)
    pairs = []
    for p in range(1, e.n + 1):
        a0, a1 = pivot if p in rotated else (PAULI_X, PAULI_Z)
        pairs.append((a1, a0) if p in relabeled and p in rotated else (a0, a1))
    return ObservableSet(tuple(pairs))


def random_jordan_observables(n: int, rng: np.random.Generator,
                              frame: bool = True) -> ObservableSet:
    """One Jordan angle per party, optionally inside a random local unitary frame."""
    pairs = []
    for alpha in rng.uniform(0.0, math.pi / 2, size=n):
        a0, a1 = xz_pair(alpha)
        if frame:
            u = unitary_group.rvs(2, random_state=rng)
            a0, a1 = u @ a0 @ u.conj().T, u @ a1 @ u.conj().T
            a0, a1 = (a0 + a0.conj().T) / 2, (a1 + a1.conj().T) / 2
        pairs.append((a0, a1))
    return ObservableSet(tuple(pairs))


def perturb_observables(obs: ObservableSet, party: int, eps: float) -> ObservableSet:
    """Rotate both observables of `party` by `eps` in the X–Z plane."""
    if not 1 <= party <= obs.n:
        raise InputError(f"party {party} outside [1, {obs.n}]")
    c, s = math.cos(eps / 2), math.sin(eps / 2)
    r = np.array([[c, -s], [s, c]], dtype=complex)
    a0, a1 = obs.pairs[party - 1]
    return obs.replace(party, r @ a0 @ r.T, r @ a1 @ r.T)


# ─── Target states ────────────────────────────────────────────────────────────

def expression_graph(e: BellExpression) -> Graph:
    if e.kind not in GRAPH_KINDS or "graph" not in e.meta:
        raise NoClosedFormError(f"expression of kind {e.kind!r} is not built from a graph")
    doc = e.meta["graph"]
    return Graph.from_edges(doc["n"], doc["edges"])


def target_state(e: BellExpression, limit: int = 16) -> StateVector:
    """The state that reaches β_Q with `canonical_observables(e)`."""
    if e.kind == KIND_TILTED:
        v = ghz_state(e.n, e.meta["theta"])
    else:
        v = graph_state(expression_graph(e), limit)
    rotated = set(e.substitution_parties())
    relabeled = [p for p in e.meta.get("relabeled", []) if p not in rotated]
    if relabeled:
        v = StateVector.normalized(apply_local({p: HADAMARD for p in relabeled}, v))
    return v


# ─── Closed forms ─────────────────────────────────────────────────────────────

def classical_bound_formula(e: BellExpression) -> float:
    if e.kind in GRAPH_KINDS:
        g = expression_graph(e)
        return graph_family_bounds(g.n, (g.degrees[j - 1] for j in e.meta["subs"]))[0]
    if e.kind == KIND_TILTED:
        return tilted_classical_bound(e.n, e.meta["theta"])
    raise NoClosedFormError(f"no closed-form classical bound for kind {e.kind!r}; "
                            "use the brute-force oracle")


def quantum_bound_formula(e: BellExpression) -> float:
    if e.kind in GRAPH_KINDS:
        g = expression_graph(e)
        return graph_family_bounds(g.n, (g.degrees[j - 1] for j in e.meta["subs"]))[1]
    if e.kind == KIND_TILTED:
        return 2 * SQRT2 * (e.n - 1)
    raise NoClosedFormError(f"no closed-form quantum bound for kind {e.kind!r}; "
                            "use the eigenvalue oracle")


# ─── Classical oracle ─────────────────────────────────────────────────────────

def _strategy_masks(e: BellExpression) -> tuple[np.ndarray, list[int]]:
    """Coefficients and bit masks of the atomic correlators.

    A strategy is an integer over 2N bits; bit 2(p−1)+x holds the sign of
    A_x at party p (set = −1), so a correlator evaluates to (−1)^{parity}.
    """
    atoms = expand_atomic(e)
    coeffs = np.array([t.coeff for t in atoms])
    masks = [sum(1 << (2 * (p - 1) + s.weights.index(1)) for p, s in t.factors)
             for t in atoms]
    return coeffs, masks


def _best_in_chunk(coeffs: np.ndarray, masks: list[int], start: int,
                   stop: int) -> tuple[float, int]:
    idx = np.arange(start, stop, dtype=np.int64)
    values = np.zeros(idx.size)
    for c, m in zip(coeffs, masks):
        values += c * (1 - 2 * bit_parity(idx, m))
    best = int(np.argmax(values))
    return float(values[best]), start + best


def classical_bound_bruteforce(e: BellExpression, limit: int = 13,
                               workers: int = 1) -> tuple[float, dict[int, tuple[int, int]]]:
    """Maximum over all 4^N deterministic ±1 assignments, plus one maximizer."""
    guard(e.n, limit, "classical_bound_bruteforce")
    coeffs, masks = _strategy_masks(e)
    total = 1 << (2 * e.n)
    bounds = [(lo, min(lo + CHUNK, total)) for lo in range(0, total, CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda b: _best_in_chunk(coeffs, masks, *b), bounds))
    else:
        results = [_best_in_chunk(coeffs, masks, *b) for b in bounds]
    value, index = max(results, key=lambda r: (r[0], -r[1]))
    strategy = {p: (1 - 2 * ((index >> (2 * (p - 1))) & 1),
                    1 - 2 * ((index >> (2 * (p - 1) + 1)) & 1))
                for p in range(1, e.n + 1)}
    log.debug("brute force over %d strategies: %.12g", total, value)
    return value, strategy


# ─── Quantum side ─────────────────────────────────────────────────────────────

def _term_ops(e: BellExpression, obs: ObservableSet) -> list[tuple[float, dict[int, np.ndarray]]]:
    if obs.n != e.n:
        raise InputError(f"{obs.n} observable pairs for a {e.n}-party expression")
    return [(t.coeff, {p: obs.setting(p, s) for p, s in t.factors}) for t in e.terms]


def evaluate_expression(e: BellExpression, v: StateVector, obs: ObservableSet) -> float:
    if v.n != e.n:
        raise InputError(f"{v.n}-qubit state for a {e.n}-party expression")
    value = sum(c * np.vdot(v.amplitudes, apply_local(ops, v)) for c, ops in _term_ops(e, obs))
    if abs(value.imag) > 1e-10:
        raise CheckFailure(f"Bell value has imaginary residue {value.imag:.3e}")
    return float(value.real)


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def bell_operator(e: BellExpression, obs: ObservableSet, limit: int = 8) -> np.ndarray:
    """Dense 2^N × 2^N Bell operator."""
    guard(e.n, limit, "bell_operator (dense)")
    return sum(c * kron_all([ops.get(p, IDENTITY) for p in range(1, e.n + 1)])
               for c, ops in _term_ops(e, obs))


def bell_linear_operator(e: BellExpression, obs: ObservableSet,
                         shift: float = 0.0) -> LinearOperator:
    """Matrix-free B + shift·1."""
    terms = _term_ops(e, obs)
    dim = 1 << e.n

    def matvec(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex).reshape(-1)
        return shift * x + sum(c * apply_local(ops, x) for c, ops in terms)

    return LinearOperator((dim, dim), matvec=matvec, rmatvec=matvec, dtype=complex)


def norm_bound(e: BellExpression, obs: ObservableSet) -> float:
    """Σ |coeff|·Π ‖factor‖ ≥ ‖B‖."""
    return sum(abs(c) * math.prod(np.linalg.norm(op, 2) for op in ops.values())
               for c, ops in _term_ops(e, obs))


def max_eigenvalue(e: BellExpression, obs: ObservableSet,
                   settings: Settings | None = None, seed: int = 0) -> float:
    """Largest eigenvalue of B(obs) from the shifted positive operator B + c·1."""
    cfg = settings or Settings()
    guard(e.n, cfg.eig_matrix_free_limit, "max_eigenvalue")
    shift = norm_bound(e, obs)
    op = bell_linear_operator(e, obs, shift)
    dim = 1 << e.n
    starts = [np.full(dim, 1 / math.sqrt(dim), dtype=complex)]
    rng = np.random.default_rng(seed)
    restart = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    starts.append(restart / np.linalg.norm(restart))

    values = []
    for v0 in starts:
        try:
            top = eigsh(op, k=1, which="LA", v0=v0, tol=cfg.eig_tol,
                        maxiter=cfg.eig_max_iter, return_eigenvectors=False)
        except ArpackNoConvergence as exc:
            raise ConvergenceError(f"eigensolver did not converge within "
                                   f"{cfg.eig_max_iter} iterations") from exc
        values.append(float(top[0]) - shift)
    lam = max(values)

    if e.n <= cfg.dense_operator_limit:
        dense = float(linalg.eigh(bell_operator(e, obs, cfg.dense_operator_limit),
                                  eigvals_only=True)[-1])
        if abs(dense - lam) > cfg.formula_tol:
            raise CheckFailure(f"iterative λ_max {lam:.12g} disagrees with dense "
                               f"{dense:.12g}")
        log.debug("λ_max %.12g (dense cross-check %.12g)", lam, dense)
    return lam


# ─── Report ───────────────────────────────────────────────────────────────────

@dataclass
class BoundReport:
    n: int
    kind: str | None
    beta_c_formula: float | None
    beta_q_formula: float | None
    state_value: float | None = None
    beta_c_bruteforce: float | None = None
    lambda_max: float | None = None
    strategy: dict[str, list[int]] | None = None
    deltas: dict[str, float] = field(default_factory=dict)
    ratio: float | None = None
    ok: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(e: BellExpression, settings: Settings | None = None,
                 bruteforce: bool = False, eig: bool = False) -> BoundReport:
    """Closed forms plus the requested oracles, with recorded deltas."""
    cfg = settings or Settings()
    try:
        beta_c, beta_q = classical_bound_formula(e), quantum_bound_formula(e)
    except NoClosedFormError:
        log.warning("no closed form for kind %r; reporting oracles only", e.kind)
        beta_c = beta_q = None

    report = BoundReport(e.n, e.kind, beta_c, beta_q)
    if beta_c and beta_q:
        report.ratio = beta_q / beta_c
    tol_c = cfg.exact_tol if e.kind in GRAPH_KINDS else TILTED_CLASSICAL_TOL

    if e.kind in GRAPH_KINDS + (KIND_TILTED,) and e.n <= cfg.dense_state_limit:
        report.state_value = evaluate_expression(e, target_state(e, cfg.dense_state_limit),
                                                 canonical_observables(e))
        if beta_q is not None:
            report.deltas["state_vs_formula"] = report.state_value - beta_q

    if bruteforce:
        value, strategy = classical_bound_bruteforce(e, cfg.bruteforce_limit, cfg.workers)
        report.beta_c_bruteforce = value
        report.strategy = {str(p): list(s) for p, s in strategy.items()}
        if beta_c is not None:
            report.deltas["bruteforce_vs_formula"] = value - beta_c

    if eig:
        report.lambda_max = max_eigenvalue(e, canonical_observables(e), cfg, cfg.seed)
        if beta_q is not None:
            report.deltas["eig_vs_formula"] = report.lambda_max - beta_q

    for name, delta in report.deltas.items():
        tol = tol_c if name == "bruteforce_vs_formula" else cfg.formula_tol
        if abs(delta) > tol:
            log.error("%s mismatch: %.3e exceeds %.1e", name, delta, tol)
            report.ok = False
    return report
