"""SWAP-isometry extraction: ideal recovery and graceful degradation."""

import math

import numpy as np
import pytest

from graphbell.bounds import (
    canonical_observables,
    perturb_observables,
    random_jordan_observables,
    target_state,
    xz_pair,
)
from graphbell.errors import GraphError, InputError, ResourceGuardError
from graphbell.graphs import builtin_graph, load_graph
from graphbell.inequalities import build_graph_inequality, build_tilted_ghz, local_relabel
from graphbell.pauli_states import (
    IDENTITY,
    PAULI_X,
    PAULI_Z,
    StateVector,
    basis_state,
    ghz_state,
    graph_state,
)
from graphbell.selftesting import (
    ExtractedOps,
    ancilla_spectrum,
    anticommutator_norms,
    extracted_operators,
    extraction_fidelity,
    regularize,
    schmidt_coefficients,
    selftest_report,
    swap_isometry_output,
)
from tests.conftest import THETAS, builtin_cases

CONNECTED = builtin_cases(2, 7)


class TestRegularize:
    def test_scaled_pauli(self):
        assert np.allclose(regularize(2.5 * PAULI_X), PAULI_X)

    def test_zero_eigenvalue_maps_to_plus_one(self):
        assert np.allclose(regularize(np.diag([0.0, -3.0])), np.diag([1.0, -1.0]))
        assert np.allclose(regularize(np.zeros((2, 2))), IDENTITY)

    def test_result_is_hermitian_unitary(self, rng):
        m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        u = regularize(m + m.conj().T)
        assert np.allclose(u, u.conj().T)
        assert np.allclose(u @ u, IDENTITY)


class TestIsometry:
    def test_single_qubit_plus_state(self):
        plus = StateVector(np.array([1.0, 1.0]) / math.sqrt(2))
        out = swap_isometry_output(plus, ExtractedOps([PAULI_X], [PAULI_Z]))
        assert np.allclose(out.amplitudes, [1 / math.sqrt(2), 0, 1 / math.sqrt(2), 0])

    def test_ideal_operators_swap_any_state(self, rng):
        v = StateVector.normalized(rng.standard_normal(8) + 1j * rng.standard_normal(8))
        out = swap_isometry_output(v, ExtractedOps([PAULI_X] * 3, [PAULI_Z] * 3))
        assert extraction_fidelity(out, v) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(out.amplitudes.reshape(8, 8)[:, 1:], 0)

    def test_operator_count_must_match(self):
        with pytest.raises(InputError):
            swap_isometry_output(basis_state(2, 0), ExtractedOps([PAULI_X], [PAULI_Z]))

    def test_guard(self):
        n = 11
        ops = ExtractedOps([PAULI_X] * n, [PAULI_Z] * n)
        with pytest.raises(ResourceGuardError):
            swap_isometry_output(basis_state(n, 0), ops)

    def test_split_checks_sizes(self):
        with pytest.raises(InputError):
            extraction_fidelity(basis_state(3, 0), basis_state(2, 0))


class TestExtractedOperators:
    def test_pivot_combines_the_pair(self, k2):
        obs = canonical_observables(build_graph_inequality(k2))
        ops = extracted_operators(obs)
        assert np.allclose(ops.xs[0], PAULI_X) and np.allclose(ops.zs[0], PAULI_Z)
        assert np.allclose(ops.xs[1], PAULI_X) and np.allclose(ops.zs[1], PAULI_Z)

    def test_tilted_pivot(self):
        e = build_tilted_ghz(3, math.pi / 8)
        ops = extracted_operators(canonical_observables(e), (1,), e.meta["mu"])
        assert ops.kind == "tilted_ghz"
        assert np.allclose(ops.xs[0], PAULI_X) and np.allclose(ops.zs[0], PAULI_Z)

    def test_degenerate_mu(self, k2):
        obs = canonical_observables(build_graph_inequality(k2))
        with pytest.raises(InputError):
            extracted_operators(obs, (1,), math.pi / 2)

    def test_anticommutators_of_a_jordan_angle(self, k2):
        obs = canonical_observables(build_graph_inequality(k2))
        alpha = 0.3
        skewed = obs.replace(2, *xz_pair(alpha))
        norms = anticommutator_norms(graph_state(k2), extracted_operators(skewed))
        assert norms["1"] < 1e-12
        assert norms["2"] == pytest.approx(2 * abs(math.cos(2 * alpha)))


class TestSelfTest:
    @pytest.mark.parametrize("kind, n", CONNECTED)
    def test_recovers_graph_state(self, kind, n, settings):
        e = build_graph_inequality(builtin_graph(kind, n))
        report = selftest_report(e, target_state(e), settings=settings)
        assert report.passed
        assert report.fidelity == pytest.approx(1.0, abs=1e-10)
        assert report.schmidt_rank == 1

    @pytest.mark.parametrize("n", [2, 3, 4])
    @pytest.mark.parametrize("theta", THETAS)
    def test_recovers_tilted_ghz(self, n, theta, settings):
        e = build_tilted_ghz(n, theta)
        report = selftest_report(e, ghz_state(n, theta), settings=settings)
        assert report.passed
        assert report.fidelity == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("parties", [[2, 3], [1, 2, 3, 4], [1]])
    def test_relabeled_star(self, parties, settings):
        e = local_relabel(build_graph_inequality(builtin_graph("star", 4)), parties)
        report = selftest_report(e, target_state(e), settings=settings)
        assert report.fidelity == pytest.approx(1.0, abs=1e-10)

    def test_pivot_away_from_vertex_one(self, settings):
        e = build_graph_inequality(builtin_graph("line", 5))
        report = selftest_report(e, target_state(e), settings=settings)
        assert report.passed
        assert report.permutation == [2, 1, 3, 4, 5]

    @pytest.mark.parametrize("party, eps", [(3, 0.4), (1, 0.2), (5, 1.0)])
    def test_rotated_party_gives_cos_squared(self, party, eps, settings):
        e = build_graph_inequality(builtin_graph("ring", 5))
        obs = perturb_observables(canonical_observables(e), party, eps)
        report = selftest_report(e, target_state(e), obs, settings)
        assert report.fidelity == pytest.approx(math.cos(eps / 2) ** 2, abs=1e-10)
        assert not report.passed

    def test_wrong_state_fails(self, settings):
        e = build_graph_inequality(builtin_graph("ring", 4))
        report = selftest_report(e, graph_state(builtin_graph("line", 4)), settings=settings)
        assert not report.passed
        assert report.fidelity < 0.9

    def test_random_observables_degrade(self, settings, rng):
        e = build_graph_inequality(builtin_graph("star", 3))
        report = selftest_report(e, target_state(e), random_jordan_observables(3, rng), settings)
        assert report.fidelity < 1 - 1e-6

    def test_disconnected_graph_is_refused(self, settings):
        g = load_graph('{"n": 4, "edges": [[1, 2], [3, 4]]}')
        e = build_graph_inequality(g)
        with pytest.raises(GraphError) as exc:
            selftest_report(e, graph_state(g), settings=settings)
        assert exc.value.reason == "disconnected"

    def test_spectrum_on_request(self, settings):
        e = build_graph_inequality(builtin_graph("ring", 4))
        report = selftest_report(e, target_state(e), settings=settings, spectrum=True)
        assert report.ancilla_spectrum[0] == pytest.approx(1.0, abs=1e-10)
        assert sum(report.ancilla_spectrum) == pytest.approx(1.0)
        assert selftest_report(e, target_state(e), settings=settings).ancilla_spectrum is None


def test_schmidt_and_spectrum_agree(rng):
    v = StateVector.normalized(rng.standard_normal(4))
    ops = extracted_operators(random_jordan_observables(2, rng, frame=False), ())
    out = swap_isometry_output(v, ops)
    coeffs = schmidt_coefficients(out, 2)
    assert np.allclose(np.sort(coeffs ** 2)[::-1], ancilla_spectrum(out, 2), atol=1e-12)
