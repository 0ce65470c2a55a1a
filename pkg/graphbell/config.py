"""
Run settings: size guards, numerical tolerances and search budgets.

Values come from, in increasing priority: the defaults below, a flat JSON
file (``config.json`` or ``--config <path>``), the ``GRAPHBELL_WORKERS``
environment variable, and finally explicit CLI flags.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from graphbell.errors import InputError

log = logging.getLogger(__name__)

WORKERS_ENV = "GRAPHBELL_WORKERS"
DEFAULT_CONFIG = Path("config.json")


def _default_workers() -> int:
    return os.cpu_count() or 1


@dataclass(frozen=True)
class Settings:
    # ─── Size guards ──────────────────────────────────────────────────────
    dense_state_limit: int = 16
    dense_operator_limit: int = 8
    bruteforce_limit: int = 13
    eig_matrix_free_limit: int = 12
    selftest_limit: int = 10
    robust_limit: int = 7

    # ─── Tolerances ───────────────────────────────────────────────────────
    eig_tol: float = 1e-10
    eig_max_iter: int = 10_000
    formula_tol: float = 1e-8
    exact_tol: float = 1e-12
    sos_tol: float = 1e-9
    selftest_tol: float = 1e-10
    schmidt_tol: float = 1e-8

    # ─── Robustness search ────────────────────────────────────────────────
    grid_points: int = 9
    simplex_iter: int = 200
    restarts: int = 3
    slope_tol: float = 1e-6
    slope_margin: float = 1e-3
    validation_samples: int = 500
    symmetry_reduction: bool = False

    # ─── Sweeps ───────────────────────────────────────────────────────────
    draws: int = 100
    seed: int = 7
    workers: int = 0  # 0 → available cores

    def __post_init__(self) -> None:
        if self.workers <= 0:
            object.__setattr__(self, "workers", _default_workers())
        if self.grid_points < 2:
            raise InputError(f"grid_points must be ≥ 2, got {self.grid_points}")
        for name in ("eig_tol", "formula_tol", "exact_tol", "sos_tol",
                     "selftest_tol", "schmidt_tol", "slope_tol"):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")

    def override(self, **values) -> "Settings":
        """Copy with the non-None entries of `values` applied."""
        updates = {k: v for k, v in values.items() if v is not None}
        _check_keys(updates)
        return replace(self, **updates)

    def to_dict(self) -> dict:
        return asdict(self)


def _check_keys(values: dict) -> None:
    known = {f.name for f in fields(Settings)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise InputError(f"unknown config key(s): {', '.join(unknown)}",
                         reason="unknown_config_key")


def load_settings(path: Path | str | None = None) -> Settings:
    """Resolve settings from `path` (or ./config.json) and the environment."""
    values: dict = {}
    source = Path(path) if path is not None else DEFAULT_CONFIG
    if source.exists():
        try:
            values = json.loads(source.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"config {source}: {exc}", reason="parse") from exc
        if not isinstance(values, dict):
            raise InputError(f"config {source}: expected a flat JSON object",
                             reason="parse")
        _check_keys(values)
        log.debug("loaded settings from %s", source)
    elif path is not None:
        raise InputError(f"config file not found: {source}", reason="missing_file")

    env_workers = os.environ.get(WORKERS_ENV)
    if env_workers:
        try:
            values["workers"] = int(env_workers)
        except ValueError as exc:
            raise InputError(f"{WORKERS_ENV} must be an integer") from exc
    return Settings(**values)
