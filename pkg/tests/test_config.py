"""Settings resolution: defaults, JSON file, environment, overrides."""

import json

import pytest

from graphbell.config import WORKERS_ENV, Settings, load_settings
from graphbell.errors import InputError


def test_defaults(isolated_cwd):
    cfg = load_settings()
    assert cfg == Settings()
    assert cfg.workers >= 1
    assert cfg.bruteforce_limit == 13 and cfg.dense_operator_limit == 8


def test_reads_config_json_from_cwd(isolated_cwd):
    (isolated_cwd / "config.json").write_text(json.dumps({"grid_points": 5, "seed": 11}))
    cfg = load_settings()
    assert (cfg.grid_points, cfg.seed) == (5, 11)


def test_explicit_path(isolated_cwd):
    path = isolated_cwd / "quick.json"
    path.write_text(json.dumps({"draws": 10}))
    assert load_settings(path).draws == 10


def test_missing_explicit_path(isolated_cwd):
    with pytest.raises(InputError) as exc:
        load_settings(isolated_cwd / "nope.json")
    assert exc.value.reason == "missing_file"


def test_unknown_key(isolated_cwd):
    (isolated_cwd / "config.json").write_text(json.dumps({"grid_pts": 5}))
    with pytest.raises(InputError) as exc:
        load_settings()
    assert exc.value.reason == "unknown_config_key"
    assert "grid_pts" in str(exc.value)


@pytest.mark.parametrize("text", ["{not json", "[1, 2]"])
def test_malformed_file(isolated_cwd, text):
    (isolated_cwd / "config.json").write_text(text)
    with pytest.raises(InputError) as exc:
        load_settings()
    assert exc.value.reason == "parse"


def test_environment_beats_file(isolated_cwd, monkeypatch):
    (isolated_cwd / "config.json").write_text(json.dumps({"workers": 2}))
    monkeypatch.setenv(WORKERS_ENV, "5")
    assert load_settings().workers == 5


def test_bad_environment_value(isolated_cwd, monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(InputError):
        load_settings()


def test_override_ignores_none():
    cfg = Settings(workers=1).override(seed=None, draws=3)
    assert cfg.draws == 3 and cfg.seed == Settings().seed


def test_override_rejects_unknown():
    with pytest.raises(InputError):
        Settings(workers=1).override(colour="red")


@pytest.mark.parametrize("values", [{"grid_points": 1}, {"eig_tol": 0.0}, {"slope_tol": -1.0}])
def test_validation(values):
    with pytest.raises(InputError):
        Settings(**values)


def test_round_trip():
    cfg = Settings(workers=3, symmetry_reduction=True)
    assert Settings(**cfg.to_dict()) == cfg
