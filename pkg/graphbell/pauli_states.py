"""
Pauli-word algebra and dense state-vector kernels.

Convention: qubit/vertex 1 is the most significant bit of the basis index,
i.e. axis 0 after reshaping an amplitude vector to (2,) * n. Words use the
letters I, X and Z only, so every coefficient stays real and applying a word
is a signed permutation of amplitudes.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from graphbell.errors import InputError, guard
from graphbell.graphs import Graph

log = logging.getLogger(__name__)

LETTERS = ("I", "X", "Z")
CONVENTION = "qubit1-msb"
NORM_TOL = 1e-12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)
HADAMARD = (PAULI_X + PAULI_Z) / math.sqrt(2)
_MATRICES = {"I": IDENTITY, "X": PAULI_X, "Z": PAULI_Z}


# ─── Pauli words ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PauliWord:
    letters: tuple[str, ...]
    coefficient: float = 1.0

    def __post_init__(self) -> None:
        bad = [c for c in self.letters if c not in LETTERS]
        if bad:
            raise InputError(f"unsupported Pauli letter(s) {bad}; use I, X or Z")
        if not math.isfinite(self.coefficient) or self.coefficient == 0:
            raise InputError(f"Pauli word coefficient must be finite and nonzero, "
                             f"got {self.coefficient}")

    @classmethod
    def from_sites(cls, n: int, x: Sequence[int] = (), z: Sequence[int] = (),
                   coefficient: float = 1.0) -> "PauliWord":
        """Word with X on 1-indexed sites `x` and Z on sites `z`."""
        letters = ["I"] * n
        for i in x:
            letters[i - 1] = "X"
        for i in z:
            if letters[i - 1] != "I":
                raise InputError(f"site {i} already carries {letters[i - 1]}")
            letters[i - 1] = "Z"
        return cls(tuple(letters), coefficient)

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def x_mask(self) -> int:
        return _mask(self.letters, "X")

    @property
    def z_mask(self) -> int:
        return _mask(self.letters, "Z")

    def scaled(self, factor: float) -> "PauliWord":
        return PauliWord(self.letters, self.coefficient * factor)

    def to_matrix(self) -> np.ndarray:
        out = np.array([[self.coefficient]], dtype=complex)
        for c in self.letters:
            out = np.kron(out, _MATRICES[c])
        return out

    def __str__(self) -> str:
        body = "".join(f"{c}{i}" for i, c in enumerate(self.letters, start=1) if c != "I")
        return f"{self.coefficient:+g}·{body or 'I'}"


def _mask(letters: Sequence[str], which: str) -> int:
    n = len(letters)
    return sum(1 << (n - 1 - i) for i, c in enumerate(letters) if c == which)


@dataclass(frozen=True)
class PauliSum:
    words: tuple[PauliWord, ...]

    @classmethod
    def of(cls, words: Sequence[PauliWord]) -> "PauliSum":
        """Merge words with identical letters; drop those that cancel."""
        if not words:
            raise InputError("PauliSum needs at least one word")
        n = words[0].n
        merged: dict[tuple[str, ...], float] = {}
        for w in words:
            if w.n != n:
                raise InputError(f"mixed word lengths {n} and {w.n} in one PauliSum")
            merged[w.letters] = merged.get(w.letters, 0.0) + w.coefficient
        kept = tuple(PauliWord(k, c) for k, c in merged.items() if abs(c) > NORM_TOL)
        if not kept:
            raise InputError("PauliSum cancels to zero")
        return cls(kept)

    @property
    def n(self) -> int:
        return self.words[0].n

    def to_matrix(self) -> np.ndarray:
        return sum(w.to_matrix() for w in self.words)

    def __str__(self) -> str:
        return " ".join(str(w) for w in self.words)


def anticommuting_sites(a: PauliWord, b: PauliWord) -> int:
    """Sites where one word has X and the other Z."""
    return bin((a.x_mask & b.z_mask) | (a.z_mask & b.x_mask)).count("1")


def commutes(a: PauliWord, b: PauliWord) -> bool:
    return anticommuting_sites(a, b) % 2 == 0


def stabilizer_generators(g: Graph) -> list[PauliWord]:
    """G_i = X_i ⊗ Z_{n(i)} for every vertex."""
    return [
        PauliWord.from_sites(g.n, x=[i + 1], z=[j + 1 for j in sorted(g.adjacency[i])])
        for i in range(g.n)
    ]


def tilted_stabilizers(n: int, theta: float) -> list[PauliSum]:
    """S_1 = sin2θ·X…X + cos2θ·Z_1 and S_i = Z_1 Z_i for the tilted GHZ state."""
    if n < 2:
        raise InputError(f"tilted GHZ needs N ≥ 2, got {n}")
    if not 0 < theta <= math.pi / 4 + 1e-15:
        raise InputError(f"θ must lie in (0, π/4], got {theta}", reason="theta_range")
    s1 = [PauliWord(("X",) * n, math.sin(2 * theta))]
    c = math.cos(2 * theta)
    if abs(c) > NORM_TOL:
        s1.append(PauliWord.from_sites(n, z=[1], coefficient=c))
    out = [PauliSum.of(s1)]
    out += [PauliSum.of([PauliWord.from_sites(n, z=[1, i])]) for i in range(2, n + 1)]
    return out


# ─── State vectors ────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dim = amps.size
        if dim < 2 or dim & (dim - 1):
            raise InputError(f"state dimension {dim} is not a power of two ≥ 2")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise InputError(f"state is not normalized (‖v‖ = {norm:.15f})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes: np.ndarray) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise InputError("cannot normalize the zero vector")
        return cls(amps / norm)

    @property
    def n(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size


def _as_array(v: StateVector | np.ndarray) -> np.ndarray:
    return v.amplitudes if isinstance(v, StateVector) else np.asarray(v, dtype=complex)


def bit_parity(indices: np.ndarray, mask: int) -> np.ndarray:
    """Parity of the bits of each index selected by `mask`."""
    masked = indices & mask
    parity = np.zeros_like(indices)
    while mask:
        low = mask & -mask
        parity ^= (masked & low) != 0
        mask ^= low
    return parity


def apply_word(w: PauliWord, v: StateVector | np.ndarray) -> np.ndarray:
    """w|v⟩ as a plain amplitude array (scaled by the word's coefficient)."""
    amps = _as_array(v)
    if amps.size != 1 << w.n:
        raise InputError(f"word on {w.n} qubits applied to a state of dimension {amps.size}")
    idx = np.arange(amps.size)
    signs = 1 - 2 * bit_parity(idx, w.z_mask)
    out = np.empty_like(amps)
    out[idx ^ w.x_mask] = w.coefficient * signs * amps
    return out


def apply_sum(op: PauliSum, v: StateVector | np.ndarray) -> np.ndarray:
    return sum(apply_word(w, v) for w in op.words)


def expectation(op: PauliSum | PauliWord, v: StateVector | np.ndarray) -> float:
    """⟨v|op|v⟩; the imaginary residue must vanish for these Hermitian operators."""
    amps = _as_array(v)
    applied = apply_word(op, amps) if isinstance(op, PauliWord) else apply_sum(op, amps)
    value = np.vdot(amps, applied)
    if abs(value.imag) > 1e-12:
        raise InputError(f"imaginary expectation residue {value.imag:.3e}: "
                         "operator is not Hermitian", reason="non_hermitian")
    return float(value.real)


def apply_local(ops: Mapping[int, np.ndarray], v: StateVector | np.ndarray) -> np.ndarray:
    """Apply 2×2 operators to 1-indexed sites of a dense vector, matrix-free."""
    amps = _as_array(v)
    n = amps.size.bit_length() - 1
    tensor = amps.reshape((2,) * n)
    for site, op in ops.items():
        if not 1 <= site <= n:
            raise InputError(f"site {site} outside [1, {n}]")
        tensor = np.moveaxis(np.tensordot(op, tensor, axes=([1], [site - 1])), 0, site - 1)
    return tensor.reshape(-1)


def graph_state(g: Graph, limit: int = 16) -> StateVector:
    """|ψ_G⟩ with amplitude 2^{-N/2}(−1)^{edges inside supp(τ)} on |τ⟩."""
    guard(g.n, limit, "graph_state")
    idx = np.arange(1 << g.n)
    parity = np.zeros_like(idx)
    for a, b in g.edges:
        parity ^= ((idx >> (g.n - 1 - a)) & 1) & ((idx >> (g.n - 1 - b)) & 1)
    return StateVector((1 - 2 * parity) / math.sqrt(1 << g.n))


def ghz_state(n: int, theta: float = math.pi / 4) -> StateVector:
    """cosθ|0…0⟩ + sinθ|1…1⟩."""
    if n < 2:
        raise InputError(f"GHZ state needs N ≥ 2, got {n}")
    if not 0 <= theta <= math.pi / 4 + 1e-15:
        raise InputError(f"θ must lie in [0, π/4], got {theta}", reason="theta_range")
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = math.cos(theta)
    amps[-1] = math.sin(theta)
    return StateVector(amps)


def basis_state(n: int, index: int) -> StateVector:
    amps = np.zeros(1 << n, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps)


def project_stabilized(generators: Sequence[PauliWord], n: int) -> StateVector:
    """Π_i (1 + G_i)/2 applied to |0…0⟩, normalized."""
    v = basis_state(n, 0).amplitudes.copy()
    for w in generators:
        v = 0.5 * (v + apply_word(w, v))
    return StateVector.normalized(v)


def fidelity(a: StateVector | np.ndarray, b: StateVector | np.ndarray) -> float:
    """|⟨a|b⟩|² for pure states."""
    return float(abs(np.vdot(_as_array(a), _as_array(b))) ** 2)


# ─── Dump / load ──────────────────────────────────────────────────────────────

def dump_state(v: StateVector, path: Path | str) -> tuple[Path, Path]:
    """Write `<path>.bin` (little-endian interleaved re/im doubles) and `<path>.json`."""
    base = Path(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    data, header = base.with_suffix(".bin"), base.with_suffix(".json")
    interleaved = np.empty(2 * v.dim, dtype="<f8")
    interleaved[0::2] = v.amplitudes.real
    interleaved[1::2] = v.amplitudes.imag
    data.write_bytes(interleaved.tobytes())
    header.write_text(json.dumps({"n": v.n, "convention": CONVENTION, "dtype": "<f8"}))
    log.debug("dumped %d-qubit state to %s", v.n, data)
    return data, header


def load_state(path: Path | str) -> StateVector:
    base = Path(path)
    header, data = base.with_suffix(".json"), base.with_suffix(".bin")
    try:
        meta = json.loads(header.read_text())
        raw = np.frombuffer(data.read_bytes(), dtype="<f8")
    except FileNotFoundError as exc:
        raise InputError(f"state dump not found: {exc.filename}", reason="missing_file") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"state header {header}: {exc}", reason="parse") from exc
    if not isinstance(meta, dict) or not isinstance(meta.get("n"), int):
        raise InputError(f"state header {header} has no integer \"n\"", reason="parse")
    if meta.get("convention") != CONVENTION:
        raise InputError(f"unsupported state convention {meta.get('convention')!r}")
    if raw.size != 2 << meta["n"]:
        raise InputError(f"state file holds {raw.size // 2} amplitudes, "
                         f"header says N={meta['n']}")
    return StateVector(raw[0::2] + 1j * raw[1::2])
