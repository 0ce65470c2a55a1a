"""
Symbolic Bell expressions built from graph-state stabilizers.

Each stabilizer generator X_i Z_{n(i)} becomes a correlator by replacing
X_i with A0 and Z_j with A1. At a substitution vertex j the letters are
replaced by SUM = A0 + A1 (in its own generator) and DIFF = A0 - A1 (in the
generators of its neighbours). The plain graph family substitutes at the
pivot only; multi-substitution variants substitute at several mutually
distant vertices.
"""

from __future__ import annotations

import copy
import json
import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations, product

from graphbell.errors import GraphError, InputError, NoClosedFormError
from graphbell.graphs import (
    Graph,
    builtin_graph,
    inverse_permutation,
    neighborhood,
    pivot_permutation,
    relabel,
)

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
ZERO_COEFF = 1e-12

KIND_GRAPH = "graph"
KIND_MULTI = "multi_substitution"
KIND_RING = "ring_family"
KIND_TILTED = "tilted_ghz"
KINDS = (KIND_GRAPH, KIND_MULTI, KIND_RING, KIND_TILTED)


class Setting(str, Enum):
    A0 = "A0"
    A1 = "A1"
    SUM = "SUM"
    DIFF = "DIFF"

    @property
    def weights(self) -> tuple[int, int]:
        """(w0, w1) such that the setting equals w0·A0 + w1·A1."""
        return _WEIGHTS[self]

    @property
    def is_atomic(self) -> bool:
        return self in (Setting.A0, Setting.A1)


_WEIGHTS = {
    Setting.A0: (1, 0),
    Setting.A1: (0, 1),
    Setting.SUM: (1, 1),
    Setting.DIFF: (1, -1),
}


@dataclass(frozen=True)
class Term:
    coeff: float
    factors: tuple[tuple[int, Setting], ...]  # sorted by party, 1-indexed

    @classmethod
    def of(cls, coeff: float, factors: Mapping[int, Setting | str]) -> "Term":
        if not factors:
            raise InputError("a term needs at least one factor")
        return cls(float(coeff), tuple(sorted((int(p), Setting(s)) for p, s in factors.items())))

    @property
    def factor_map(self) -> dict[int, Setting]:
        return dict(self.factors)

    @property
    def parties(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def key(self) -> tuple:
        return tuple((p, s.value) for p, s in self.factors)

    def to_dict(self) -> dict:
        return {"coeff": self.coeff, "factors": {str(p): s.value for p, s in self.factors}}

    def __str__(self) -> str:
        body = "·".join(f"{s.value}({p})" for p, s in self.factors)
        return f"{self.coeff:+.6g} {body}"


def _merge(terms: Iterable[Term]) -> tuple[Term, ...]:
    """Add coefficients of identical factor maps, drop zeros, sort by factor map."""
    acc: dict[tuple, list] = {}
    for t in terms:
        slot = acc.setdefault(t.key(), [0.0, t.factors])
        slot[0] += t.coeff
    kept = [Term(c, f) for c, f in acc.values() if abs(c) > ZERO_COEFF]
    return tuple(sorted(kept, key=Term.key))


@dataclass(frozen=True, eq=True)
class BellExpression:
    n: int
    terms: tuple[Term, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InputError(f"expression needs at least one party, got n={self.n}")
        if not self.terms:
            raise InputError("expression has no terms")
        for t in self.terms:
            bad = [p for p in t.parties if not 1 <= p <= self.n]
            if bad:
                raise InputError(f"term {t} references parties {bad} outside [1, {self.n}]")
        object.__setattr__(self, "terms", _merge(self.terms))

    @property
    def kind(self) -> str | None:
        return self.meta.get("kind")

    @property
    def beta_c(self) -> float | None:
        return self.meta.get("beta_c")

    @property
    def beta_q(self) -> float | None:
        return self.meta.get("beta_q")

    def substitution_parties(self) -> list[int]:
        """Parties where SUM/DIFF appear (the pivot-like parties)."""
        return sorted({p for t in self.terms for p, s in t.factors if not s.is_atomic})

    # ─── JSON ─────────────────────────────────────────────────────────────

    def to_dict(self) -> dict:
        return {"n": self.n, "terms": [t.to_dict() for t in self.terms], "meta": self.meta}

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "BellExpression":
        try:
            terms = [Term.of(t["coeff"], {int(p): s for p, s in t["factors"].items()})
                     for t in doc["terms"]]
            return cls(int(doc["n"]), tuple(terms), dict(doc.get("meta", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed expression JSON: {exc}", reason="parse") from exc

    @classmethod
    def from_json(cls, text: str) -> "BellExpression":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"expression JSON does not parse: {exc}", reason="parse") from exc
        return cls.from_dict(doc)

    def __str__(self) -> str:
        return "\n".join(str(t) for t in self.terms)


# ─── Graph family ─────────────────────────────────────────────────────────────

def check_substitutions(g: Graph, subs: Iterable[int]) -> list[int]:
    """Validate a substitution set: no two members adjacent or sharing a neighbour."""
    chosen = sorted(set(subs))
    if not chosen:
        raise GraphError("substitution set is empty", reason="invalid_subs")
    for j in chosen:
        if not 1 <= j <= g.n:
            raise GraphError(f"substitution vertex {j} outside [1, {g.n}]",
                             reason="invalid_subs")
    for j, k in combinations(chosen, 2):
        nj, nk = neighborhood(g, j), neighborhood(g, k)
        if k in nj:
            raise GraphError(f"substitution vertices {j} and {k} are adjacent",
                             reason="invalid_subs")
        shared = nj & nk
        if shared:
            raise GraphError(f"substitution vertices {j} and {k} share neighbour "
                             f"{min(shared)}", reason="invalid_subs")
    if max(g.degrees[j - 1] for j in chosen) != g.n_max:
        raise GraphError(f"substitution set {chosen} contains no vertex of maximal degree "
                         f"{g.n_max}", reason="invalid_subs")
    return chosen


def _substituted_terms(g: Graph, subs: list[int]) -> list[Term]:
    terms: list[Term] = []
    covered = set(subs)
    for j in subs:
        nj = neighborhood(g, j)
        terms.append(Term.of(len(nj), {j: Setting.SUM, **{k: Setting.A1 for k in nj}}))
        for i in sorted(nj):
            rest = neighborhood(g, i) - {j}
            terms.append(Term.of(1.0, {j: Setting.DIFF, i: Setting.A0,
                                       **{k: Setting.A1 for k in rest}}))
        covered |= nj
    for i in range(1, g.n + 1):
        if i not in covered:
            terms.append(Term.of(1.0, {i: Setting.A0,
                                       **{k: Setting.A1 for k in neighborhood(g, i)}}))
    return terms


def graph_family_bounds(n: int, degrees: Iterable[int]) -> tuple[float, float]:
    """(β_C, β_Q) for substitution vertices with the given degrees."""
    degrees = list(degrees)
    k, total = len(degrees), sum(degrees)
    return float(n - k + total), (2 * SQRT2 - 1) * total + n - k


def _graph_meta(g: Graph, subs: list[int], kind: str) -> dict:
    beta_c, beta_q = graph_family_bounds(g.n, (g.degrees[j - 1] for j in subs))
    return {
        "kind": kind,
        "graph": g.to_dict(),
        "subs": subs,
        "n_max": g.n_max,
        "beta_c": beta_c,
        "beta_q": beta_q,
        "connected": g.is_connected,
    }


def build_graph_inequality(g: Graph) -> BellExpression:
    """Single-substitution inequality with the pivot as substitution vertex."""
    perm = pivot_permutation(g)
    h = relabel(g, perm)
    back = inverse_permutation(perm)
    terms = [Term.of(t.coeff, {back[p - 1]: s for p, s in t.factors})
             for t in _substituted_terms(h, [1])]
    meta = _graph_meta(g, [back[0]], KIND_GRAPH)
    meta["permutation"] = perm
    if not g.is_connected:
        log.warning("graph is disconnected; bounds are valid but self-testing is refused")
    return BellExpression(g.n, tuple(terms), meta)


def build_multi_substitution(g: Graph, subs: Iterable[int]) -> BellExpression:
    chosen = check_substitutions(g, subs)
    kind = KIND_GRAPH if len(chosen) == 1 else KIND_MULTI
    meta = _graph_meta(g, chosen, kind)
    meta["permutation"] = list(range(1, g.n + 1))
    return BellExpression(g.n, tuple(_substituted_terms(g, chosen)), meta)


def build_ring_family(n: int, k: int) -> BellExpression:
    """Ring inequality with substitutions at 1, 4, …, 3k−2 (needs 3k ≤ n)."""
    if k < 1 or 3 * k > n:
        raise InputError(f"ring family needs 1 ≤ k ≤ ⌊N/3⌋, got N={n}, k={k}",
                         reason="invalid_subs")
    e = build_multi_substitution(builtin_graph("ring", n), range(1, 3 * k - 1, 3))
    meta = {**e.meta, "kind": KIND_RING, "k": k}
    return BellExpression(e.n, e.terms, meta)


def build_ring_max(L: int) -> BellExpression:
    """Ring family member with N = 3L and k = L; its ratio is exactly √2."""
    if L < 1:
        raise InputError(f"ring max family needs L ≥ 1, got {L}")
    return build_ring_family(3 * L, L)


# ─── Tilted GHZ family ────────────────────────────────────────────────────────

def check_theta(theta: float) -> float:
    if not math.isfinite(theta) or not 0 < theta <= math.pi / 4 + 1e-12:
        raise InputError(f"θ must lie in (0, π/4], got {theta}", reason="theta_range")
    return min(theta, math.pi / 4)


def tilt_mu(theta: float) -> float:
    """μ with 2 sin²μ = sin²2θ."""
    return math.asin(math.sin(2 * check_theta(theta)) / SQRT2)


def tilted_classical_bound(n: int, theta: float) -> float:
    c = math.cos(2 * theta)
    return 2 * (n - 1) * (1 + c) / math.sqrt(1 + c * c)


def build_tilted_ghz(n: int, theta: float) -> BellExpression:
    if n < 2:
        raise InputError(f"tilted GHZ family needs N ≥ 2, got {n}")
    theta = check_theta(theta)
    c = math.cos(2 * theta)
    r = 1 / math.sqrt(1 + c * c)
    others = range(2, n + 1)
    terms = [Term.of(n - 1, {1: Setting.SUM, **{i: Setting.A0 for i in others}}),
             Term.of((n - 1) * c * r, {1: Setting.A0}),
             Term.of(-(n - 1) * c * r, {1: Setting.A1})]
    terms += [Term.of(r, {1: Setting.DIFF, i: Setting.A1}) for i in others]
    meta = {
        "kind": KIND_TILTED,
        "theta": theta,
        "mu": tilt_mu(theta),
        "subs": [1],
        "beta_c": tilted_classical_bound(n, theta),
        "beta_q": 2 * SQRT2 * (n - 1),
    }
    return BellExpression(n, tuple(terms), meta)


# ─── Transformations ──────────────────────────────────────────────────────────

def expand_atomic(e: BellExpression) -> list[Term]:
    """Distribute SUM and DIFF into correlators of A0/A1 only; like terms merged."""
    out: list[Term] = []
    for t in e.terms:
        options = [[(p, Setting.A0, s.weights[0]), (p, Setting.A1, s.weights[1])]
                   for p, s in t.factors]
        for choice in product(*options):
            weight = math.prod(w for _, _, w in choice)
            if weight:
                out.append(Term.of(t.coeff * weight, {p: s for p, s, _ in choice}))
    return list(_merge(out))


_SWAPPED = {Setting.A0: (Setting.A1, 1), Setting.A1: (Setting.A0, 1),
            Setting.SUM: (Setting.SUM, 1), Setting.DIFF: (Setting.DIFF, -1)}


def local_relabel(e: BellExpression, parties: Iterable[int]) -> BellExpression:
    """Swap A0 ↔ A1 at `parties`; bounds are invariant under local relabelling."""
    chosen = set(parties)
    bad = sorted(p for p in chosen if not 1 <= p <= e.n)
    if bad:
        raise InputError(f"parties {bad} outside [1, {e.n}]")
    terms = []
    for t in e.terms:
        sign, factors = 1, {}
        for p, s in t.factors:
            if p in chosen:
                s, flip = _SWAPPED[s]
                sign *= flip
            factors[p] = s
        terms.append(Term.of(sign * t.coeff, factors))
    meta = copy.deepcopy(e.meta)
    meta["relabeled"] = sorted(set(meta.get("relabeled", [])) ^ chosen)
    return BellExpression(e.n, tuple(terms), meta)


def ratio(e: BellExpression) -> float:
    if e.beta_c is None or e.beta_q is None:
        raise NoClosedFormError("expression carries no closed-form bounds")
    return e.beta_q / e.beta_c


def same_terms(a: BellExpression, b: BellExpression, tol: float = 0.0) -> bool:
    """Term-by-term equality of two expressions, coefficients within `tol`."""
    if a.n != b.n or len(a.terms) != len(b.terms):
        return False
    return all(x.factors == y.factors and abs(x.coeff - y.coeff) <= tol
               for x, y in zip(a.terms, b.terms))
