"""
SWAP-isometry extraction of the target state from a physical state and
observables.

Each party gets an ancilla qubit prepared in |+⟩; the ancilla controls Z-
and X-type operators built from the party's observables. The output register
order is ancillas first, source second.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from graphbell.bounds import ObservableSet, canonical_observables, expression_graph
from graphbell.config import Settings
from graphbell.errors import GraphError, InputError, guard
from graphbell.inequalities import KIND_TILTED, SQRT2, BellExpression
from graphbell.pauli_states import IDENTITY, StateVector, apply_local, ghz_state, graph_state

log = logging.getLogger(__name__)

ZERO_EIGENVALUE = 1e-12


def regularize(m: np.ndarray) -> np.ndarray:
    """Hermitian unitary m·|m|⁻¹, with zero eigenvalues of |m| counted as +1."""
    m = np.asarray(m, dtype=complex)
    vals, vecs = linalg.eigh((m + m.conj().T) / 2)
    signs = np.where(vals < -ZERO_EIGENVALUE, -1.0, 1.0)
    return (vecs * signs) @ vecs.conj().T


@dataclass
class ExtractedOps:
    xs: list[np.ndarray]
    zs: list[np.ndarray]
    kind: str = "graph"
    mu: float | None = None

    @property
    def n(self) -> int:
        return len(self.xs)


def extracted_operators(obs: ObservableSet, pivots: tuple[int, ...] = (1,),
                        mu: float | None = None) -> ExtractedOps:
    """Per-party (X_i, Z_i); pivot parties combine A0 ± A1, others use them directly.

    With `mu` set the pivot operators are the tilted ones, (A0 + A1)/(2 sin μ) and
    (A0 − A1)/(2 cos μ) before regularization.
    """
    if mu is None:
        dx = dz = SQRT2
    elif 0 < mu < math.pi / 2:
        dx, dz = 2 * math.sin(mu), 2 * math.cos(mu)
    else:
        raise InputError(f"μ = {mu} leaves the pivot operators degenerate",
                         reason="theta_range")
    xs, zs = [], []
    for party, (a0, a1) in enumerate(obs.pairs, start=1):
        if party in pivots:
            xs.append(regularize((a0 + a1) / dx))
            zs.append(regularize((a0 - a1) / dz))
        else:
            xs.append(a0)
            zs.append(a1)
    return ExtractedOps(xs, zs, "graph" if mu is None else KIND_TILTED, mu)


def _controlled(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Tensor [τ, out, in] of X^τ·(1 + (−1)^τ Z)/2."""
    return np.stack([(IDENTITY + z) / 2, x @ (IDENTITY - z) / 2])


def swap_isometry_output(v: StateVector, ops: ExtractedOps, limit: int = 10) -> StateVector:
    """Σ_τ |τ⟩ ⊗ Π_j X_j^{τ_j}(1 + (−1)^{τ_j} Z_j)/2 |v⟩ on 2N qubits, ancillas first."""
    n = v.n
    if ops.n != n:
        raise InputError(f"{ops.n} extracted operator pairs for a {n}-qubit state")
    guard(n, limit, "swap_isometry_output")
    state = v.amplitudes.reshape((2,) * n)
    for j in range(1, n + 1):
        branch = np.tensordot(_controlled(ops.xs[j - 1], ops.zs[j - 1]), state,
                              axes=([2], [2 * (j - 1)]))
        state = np.moveaxis(branch, [0, 1], [j - 1, 2 * j - 1])
    return StateVector.normalized(state.reshape(-1))


def _split(out: StateVector, target_n: int) -> np.ndarray:
    if out.n != 2 * target_n:
        raise InputError(f"{out.n}-qubit output does not match a {target_n}-qubit target")
    return out.amplitudes.reshape(1 << target_n, 1 << target_n)


def extraction_fidelity(out: StateVector, target: StateVector) -> float:
    """⟨t|ρ_anc|t⟩ with ρ_anc the ancilla marginal of `out`."""
    m = _split(out, target.n)
    return float(np.linalg.norm(m.conj().T @ target.amplitudes) ** 2)


def schmidt_coefficients(out: StateVector, n: int) -> np.ndarray:
    """Singular values across the ancilla|source cut, descending."""
    return linalg.svdvals(_split(out, n))


def ancilla_spectrum(out: StateVector, n: int) -> np.ndarray:
    """Eigenvalues of ρ_anc, descending."""
    m = _split(out, n)
    return linalg.eigvalsh(m @ m.conj().T)[::-1]


# ─── Report ───────────────────────────────────────────────────────────────────

@dataclass
class SelfTestReport:
    kind: str
    n: int
    fidelity: float
    anticommutators: dict[str, float]
    schmidt_rank: int
    schmidt_coefficients: list[float] = field(default_factory=list)
    ancilla_spectrum: list[float] | None = None
    tolerance: float = 1e-10
    passed: bool = False
    permutation: list[int] | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _extraction_frame(e: BellExpression, obs: ObservableSet) -> ObservableSet:
    """Undo A0 ↔ A1 relabelling so that extraction targets the unrotated state."""
    relabeled = set(e.meta.get("relabeled", []))
    if not relabeled:
        return obs
    pairs = [(a1, a0) if p in relabeled else (a0, a1)
             for p, (a0, a1) in enumerate(obs.pairs, start=1)]
    return ObservableSet(tuple(pairs), obs.strict)


def anticommutator_norms(v: StateVector, ops: ExtractedOps) -> dict[str, float]:
    """‖{X_i, Z_i}|v⟩‖ per party."""
    return {str(i): float(np.linalg.norm(apply_local({i: x @ z + z @ x}, v)))
            for i, (x, z) in enumerate(zip(ops.xs, ops.zs), start=1)}


def selftest_report(e: BellExpression, v: StateVector, obs: ObservableSet | None = None,
                    settings: Settings | None = None, spectrum: bool = False) -> SelfTestReport:
    cfg = settings or Settings()
    obs = obs or canonical_observables(e)
    if e.kind == KIND_TILTED:
        ops = extracted_operators(_extraction_frame(e, obs), (1,), e.meta["mu"])
        target = ghz_state(e.n, e.meta["theta"])
    else:
        g = expression_graph(e)
        if not g.is_connected:
            raise GraphError("self-testing needs a connected graph", reason="disconnected")
        ops = extracted_operators(_extraction_frame(e, obs), tuple(e.substitution_parties()))
        target = graph_state(g, cfg.dense_state_limit)

    out = swap_isometry_output(v, ops, cfg.selftest_limit)
    fid = extraction_fidelity(out, target)
    norms = anticommutator_norms(v, ops)
    coeffs = schmidt_coefficients(out, e.n)
    rank = int(np.sum(coeffs > cfg.schmidt_tol))
    passed = fid > 1 - cfg.selftest_tol and max(norms.values()) < cfg.selftest_tol
    report = SelfTestReport(
        kind=e.kind or "graph", n=e.n, fidelity=fid, anticommutators=norms,
        schmidt_rank=rank, schmidt_coefficients=coeffs[: min(8, coeffs.size)].tolist(),
        ancilla_spectrum=ancilla_spectrum(out, e.n).tolist() if spectrum else None,
        tolerance=cfg.selftest_tol, passed=passed, permutation=e.meta.get("permutation"),
    )
    log.info("self-test fidelity %.12f, max anticommutator %.3e (%s)", fid,
             max(norms.values()), "pass" if passed else "FAIL")
    return report
