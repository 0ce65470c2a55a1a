import json
import math
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from graphbell.config import Settings
from graphbell.graphs import Graph, builtin_graph

ROOT = Path(__file__).resolve().parent.parent
SCHEMAS = ROOT / "schemas"
SQRT2 = math.sqrt(2)
THETAS = [math.pi / 8, math.pi / 6, math.pi / 4]


def builtin_cases(n_min: int = 2, n_max: int = 6) -> list[tuple[str, int]]:
    """(kind, n) for every builtin family in the size range."""
    return [(kind, n)
            for kind in ("star", "ring", "line", "complete")
            for n in range(max(n_min, 3 if kind == "ring" else 2), n_max + 1)]


def random_graphs(count: int, n_range=(3, 8), seed: int = 11) -> list[Graph]:
    """Connected or not, but free of isolated vertices."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        g = nx.gnp_random_graph(n, 0.45, seed=int(rng.integers(1 << 30)))
        if any(d == 0 for _, d in g.degree()):
            continue
        out.append(Graph.from_edges(n, [(a + 1, b + 1) for a, b in g.edges()]))
    return out


def load_schema(name: str) -> dict:
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


@pytest.fixture
def settings() -> Settings:
    return Settings(workers=1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


@pytest.fixture
def k2() -> Graph:
    return builtin_graph("line", 2)


@pytest.fixture
def isolated_cwd(tmp_path, monkeypatch):
    """Run without picking up the repository's config.json or env overrides."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("GRAPHBELL_WORKERS", raising=False)
    return tmp_path
