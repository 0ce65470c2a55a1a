"""Sum-of-squares decompositions and the relations they imply on the optimal state."""

import math

import numpy as np
import pytest

from graphbell.bounds import ObservableSet, canonical_observables, random_jordan_observables
from graphbell.certificates import (
    canonical_relations,
    certify,
    graph_certificate,
    graph_sos_terms,
    rotated_pivot,
    sos_residual,
    stabilizer_residuals,
    tilted_certificate,
    tilted_sos_residual,
)
from graphbell.config import Settings
from graphbell.errors import InputError, ResourceGuardError
from graphbell.graphs import builtin_graph
from graphbell.inequalities import (
    build_graph_inequality,
    build_multi_substitution,
    build_ring_family,
    build_tilted_ghz,
    local_relabel,
)
from graphbell.pauli_states import PAULI_X, PAULI_Z, graph_state
from tests.conftest import SQRT2, THETAS, builtin_cases, random_graphs


class TestGraphSos:
    def test_k2_squares(self, k2):
        e = build_graph_inequality(k2)
        terms = graph_sos_terms(k2, canonical_observables(e))
        assert [w for w, _ in terms] == pytest.approx([1 / SQRT2, 1 / SQRT2])
        squares = [p for _, p in terms]
        assert any(np.allclose(p, np.kron(PAULI_X, PAULI_Z)) for p in squares)
        assert any(np.allclose(p, np.kron(PAULI_Z, PAULI_X)) for p in squares)

    @pytest.mark.parametrize("e", [build_graph_inequality(builtin_graph("ring", 6)),
                                   build_ring_family(6, 2)], ids=["ring6", "ring6-k2"])
    def test_weights_sum_to_half_beta_q(self, e):
        cert = graph_certificate(e, canonical_observables(e))
        assert 2 * sum(cert.weights) == pytest.approx(cert.beta_q, abs=1e-12)

    @pytest.mark.parametrize("kind, n", builtin_cases(2, 6))
    def test_canonical_residual(self, kind, n):
        e = build_graph_inequality(builtin_graph(kind, n))
        assert sos_residual(e, canonical_observables(e)) < 1e-10

    @pytest.mark.parametrize("g", random_graphs(8, (3, 6), seed=31), ids=str)
    def test_random_observables(self, g):
        rng = np.random.default_rng(g.n)
        for _ in range(5):
            assert sos_residual(g, random_jordan_observables(g.n, rng)) < 1e-9

    def test_multi_substitution(self, rng):
        e = build_multi_substitution(builtin_graph("ring", 7), [1, 4])
        assert sos_residual(e, random_jordan_observables(7, rng)) < 1e-9

    def test_relabeled_terms_keep_the_identity(self, rng):
        e = local_relabel(build_graph_inequality(builtin_graph("star", 4)), [1, 3])
        assert sos_residual(e, random_jordan_observables(4, rng)) < 1e-9

    def test_fails_without_unit_squares(self, k2):
        e = build_graph_inequality(k2)
        obs = canonical_observables(e)
        scaled = obs.replace(2, 1.5 * PAULI_X, PAULI_Z, strict=False)
        assert sos_residual(e, scaled) > 0.1

    def test_rejects_tilted_expression(self):
        e = build_tilted_ghz(3, math.pi / 6)
        with pytest.raises(InputError):
            sos_residual(e, canonical_observables(e))

    def test_guard(self):
        g = builtin_graph("ring", 9)
        with pytest.raises(ResourceGuardError):
            sos_residual(g, canonical_observables(build_graph_inequality(g)))


class TestTiltedSos:
    @pytest.mark.parametrize("n", [2, 3, 4])
    @pytest.mark.parametrize("theta", THETAS + [0.1])
    def test_random_observables(self, n, theta):
        rng = np.random.default_rng(n)
        for _ in range(5):
            assert tilted_sos_residual(n, theta, random_jordan_observables(n, rng)) < 1e-9

    def test_weights_and_scale(self):
        e = build_tilted_ghz(4, math.pi / 8)
        cert = tilted_certificate(4, math.pi / 8, canonical_observables(e))
        assert cert.scale == 2.0
        assert cert.weights == pytest.approx([3 * SQRT2, SQRT2, SQRT2, SQRT2])

    def test_rotated_pivot_anticommutes(self, rng):
        obs = random_jordan_observables(2, rng)
        x1, z1 = rotated_pivot(obs, 0.4)
        assert np.allclose(x1 @ z1 + z1 @ x1, 0, atol=1e-12)

    def test_rotated_pivot_is_pauli_at_canonical_settings(self):
        e = build_tilted_ghz(3, math.pi / 6)
        x1, z1 = rotated_pivot(canonical_observables(e), e.meta["mu"])
        assert np.allclose(x1, PAULI_X) and np.allclose(z1, PAULI_Z)

    def test_degenerate_mu(self, rng):
        with pytest.raises(InputError):
            rotated_pivot(random_jordan_observables(2, rng), 0.0)


class TestRelations:
    @pytest.mark.parametrize("e", [
        build_graph_inequality(builtin_graph("ring", 5)),
        build_graph_inequality(builtin_graph("line", 4)),
        build_ring_family(6, 2),
        build_tilted_ghz(3, math.pi / 8),
        build_tilted_ghz(4, math.pi / 4),
    ], ids=lambda e: f"{e.kind}-{e.n}")
    def test_hold_on_the_target_state(self, e):
        relations = canonical_relations(e)
        assert max(relations.values()) < 1e-10

    def test_tilted_keys(self):
        relations = canonical_relations(build_tilted_ghz(3, math.pi / 6))
        assert set(relations) == {"S1", "S2", "S3", "X1^2", "Z1^2"}

    def test_graph_keys(self):
        relations = canonical_relations(build_graph_inequality(builtin_graph("star", 4)))
        assert set(relations) == {f"P{i}" for i in range(1, 5)}

    def test_violated_on_a_wrong_state(self):
        e = build_graph_inequality(builtin_graph("ring", 4))
        wrong = graph_state(builtin_graph("line", 4))
        assert max(stabilizer_residuals(e, wrong, canonical_observables(e)).values()) > 0.1


class TestCertify:
    def test_graph_sweep(self):
        report = certify(build_graph_inequality(builtin_graph("ring", 5)),
                         Settings(workers=2), draws=12, seed=4)
        assert report.passed
        assert len(report.residuals) == 12
        assert report.max_residual < 1e-9
        assert report.theta is None

    def test_tilted_sweep(self, settings):
        report = certify(build_tilted_ghz(3, math.pi / 8), settings, draws=6)
        assert report.passed and report.theta == pytest.approx(math.pi / 8)
        assert report.seed == settings.seed

    def test_reproducible(self, settings):
        e = build_graph_inequality(builtin_graph("star", 3))
        a = certify(e, settings, draws=4, seed=99).residuals
        b = certify(e, Settings(workers=3), draws=4, seed=99).residuals
        assert a == b

    def test_serializes(self, settings):
        doc = certify(build_graph_inequality(builtin_graph("line", 3)), settings, draws=2).to_dict()
        assert doc["kind"] == "graph" and doc["draws"] == 2
        assert isinstance(doc["weights"], list)


def test_observable_set_must_match_expression():
    e = build_graph_inequality(builtin_graph("ring", 3))
    obs = ObservableSet(((PAULI_X, PAULI_Z), (PAULI_X, PAULI_Z)))
    with pytest.raises(InputError):
        sos_residual(e, obs)
