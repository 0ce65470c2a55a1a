"""Jordan-angle reduction, extraction channels and the linear fidelity bound."""

import math

import numpy as np
import pandas as pd
import pytest

from graphbell.bounds import bell_operator, canonical_observables
from graphbell.config import Settings
from graphbell.errors import CheckFailure, InputError, ResourceGuardError
from graphbell.graphs import builtin_graph
from graphbell.inequalities import build_graph_inequality, build_tilted_ghz, local_relabel
from graphbell.pauli_states import graph_state
from graphbell.robustness import (
    CURVE_COLUMNS,
    IDEAL,
    Landscape,
    RobustnessBound,
    RobustnessModel,
    angle_grid,
    apply_channel,
    dressed_target,
    fidelity_curve,
    gain,
    jordan_observables,
    mu_for_slope,
    optimal_slope,
    party_orbits,
    validate_bound,
)

QUICK = Settings(workers=1, grid_points=5, restarts=2, simplex_iter=120,
                 validation_samples=60, slope_tol=1e-5)


class TestChannels:
    def test_gain_endpoints(self):
        assert gain(IDEAL) == pytest.approx(1.0)
        assert gain(0.0) == pytest.approx(0.0)
        assert gain(math.pi / 2) == pytest.approx(0.0, abs=1e-15)

    def test_ideal_angles_give_canonical_observables(self):
        e = build_graph_inequality(builtin_graph("ring", 4))
        ideal = jordan_observables([IDEAL] * 4)
        for (a0, a1), (b0, b1) in zip(ideal.pairs, canonical_observables(e).pairs):
            assert np.allclose(a0, b0) and np.allclose(a1, b1)

    def test_channel_is_identity_at_the_ideal_angle(self, rng):
        m = rng.standard_normal((4, 4))
        rho = m @ m.T / np.trace(m @ m.T)
        assert np.allclose(apply_channel(rho, 2, IDEAL, 2), rho)

    def test_channel_preserves_trace(self, rng):
        m = rng.standard_normal((8, 8))
        rho = m @ m.T / np.trace(m @ m.T)
        assert np.trace(apply_channel(rho, 3, 0.2, 3)) == pytest.approx(1.0)

    @pytest.mark.parametrize("x", [0.0, 0.3, IDEAL, 1.1, math.pi / 2])
    def test_detuning_a_leaf_lowers_fidelity(self, x):
        g = builtin_graph("star", 3)
        psi = graph_state(g).amplitudes
        alpha = [IDEAL, x, IDEAL]
        fid = float(np.real(psi.conj() @ dressed_target(g, alpha) @ psi))
        assert fid == pytest.approx((1 + gain(x)) / 2, abs=1e-12)

    def test_angle_range(self):
        with pytest.raises(InputError):
            jordan_observables([0.1, 2.0])


class TestModel:
    @pytest.fixture(scope="class")
    def ring4(self):
        return RobustnessModel(build_graph_inequality(builtin_graph("ring", 4)))

    def test_bell_matches_dense_operator(self, ring4, rng):
        angles = rng.uniform(0, math.pi / 2, size=(6, 4))
        batched = ring4.bell(angles)
        for a, b in zip(angles, batched):
            dense = bell_operator(ring4.expression, jordan_observables(a, ring4.pivots))
            assert np.allclose(b, dense, atol=1e-12)

    def test_dressed_matches_single_party_channels(self, ring4, rng):
        angles = rng.uniform(0, math.pi / 2, size=(6, 4))
        batched = ring4.dressed(angles)
        for a, k in zip(angles, batched):
            assert np.allclose(k, dressed_target(ring4.expression, a), atol=1e-12)

    def test_ideal_point(self, ring4):
        ideal = np.full(4, IDEAL)
        assert np.allclose(ring4.dressed(ideal)[0], ring4.rho)
        psi = ring4.psi
        value = np.real(psi.conj() @ ring4.bell(ideal)[0] @ psi)
        assert value == pytest.approx(ring4.expression.beta_q, abs=1e-10)

    def test_zero_slope_is_positive_semidefinite(self, ring4, rng):
        angles = rng.uniform(0, math.pi / 2, size=(20, 4))
        assert ring4.min_eigenvalues(angles, 0.0).min() > -1e-12

    def test_objective_clips(self, ring4):
        inside = ring4.objective(np.array([0.0, IDEAL, IDEAL, math.pi / 2]), 0.5)
        outside = ring4.objective(np.array([-0.3, IDEAL, IDEAL, 2.0]), 0.5)
        assert inside == pytest.approx(outside)

    def test_landscape_chunks_agree(self, ring4):
        angles = angle_grid(4, 3)
        cached = Landscape(ring4, angles).values(0.7)
        threaded = Landscape(ring4, angles, workers=3).values(0.7)
        assert np.allclose(cached, threaded)
        assert np.allclose(cached, ring4.min_eigenvalues(angles, 0.7))

    def test_rejects_tilted_and_relabeled(self):
        with pytest.raises(InputError):
            RobustnessModel(build_tilted_ghz(3, math.pi / 8))
        relabeled = local_relabel(build_graph_inequality(builtin_graph("star", 3)), [2])
        with pytest.raises(InputError):
            RobustnessModel(relabeled)

    def test_guard(self):
        with pytest.raises(ResourceGuardError):
            RobustnessModel(build_graph_inequality(builtin_graph("ring", 8)))


class TestGrid:
    def test_full_grid_contains_ideal(self):
        grid = angle_grid(2, 3)
        assert grid.shape == (9, 2)
        assert np.any(np.all(np.isclose(grid, IDEAL), axis=1))

    def test_ideal_point_is_added(self):
        grid = angle_grid(2, 4)
        assert grid.shape == (17, 2)
        assert np.allclose(grid[0], IDEAL)

    def test_orbit_grid_shares_axes(self):
        grid = angle_grid(4, 3, [[1], [2, 3, 4]])
        assert grid.shape == (9, 4)
        assert np.allclose(grid[:, 1], grid[:, 2]) and np.allclose(grid[:, 1], grid[:, 3])

    @pytest.mark.parametrize("kind, n, expected", [
        ("star", 4, [[1], [2, 3, 4]]),
        ("ring", 5, [[1], [2, 5], [3, 4]]),
        ("line", 4, [[1], [2], [3], [4]]),
        ("line", 2, [[1], [2]]),
    ])
    def test_party_orbits(self, kind, n, expected):
        assert party_orbits(build_graph_inequality(builtin_graph(kind, n))) == expected


class TestSlope:
    def test_zero_slope_gives_zero_intercept(self, k2):
        est = mu_for_slope(k2, 0.0, QUICK)
        assert est.value == pytest.approx(0.0, abs=1e-9)
        assert len(est.argmin) == 2

    def test_negative_slope(self, k2):
        with pytest.raises(InputError):
            mu_for_slope(k2, -1.0, QUICK)

    def test_intercept_decreases_with_slope(self, k2):
        values = [mu_for_slope(k2, s, QUICK).value for s in (0.2, 0.5, 1.0)]
        assert values[0] >= values[1] - 1e-9
        assert values[1] >= values[2] - 1e-9
        assert values[2] < 0

    @pytest.fixture(scope="class")
    def chsh_bound(self) -> RobustnessBound:
        return optimal_slope(builtin_graph("line", 2), QUICK)

    def test_bound_reaches_one_at_beta_q(self, chsh_bound):
        assert chsh_bound.fidelity(chsh_bound.beta_q) == pytest.approx(1.0, abs=1e-12)
        assert 0 < chsh_bound.slope < 2
        assert chsh_bound.bracket[0] <= chsh_bound.threshold <= chsh_bound.bracket[1]
        assert chsh_bound.margin >= -QUICK.slope_tol

    def test_bound_is_validated(self, chsh_bound):
        assert chsh_bound.validation_samples == QUICK.validation_samples
        assert chsh_bound.validation_margin >= -1e-8

    def test_bound_is_nontrivial_below_beta_q(self, chsh_bound):
        assert chsh_bound.fidelity(chsh_bound.beta_c) < 1.0

    def test_shallow_slope_is_rejected(self, chsh_bound, k2):
        shallow = RobustnessBound(**{**chsh_bound.to_dict(), "slope": 0.05})
        shallow.intercept = 1 - shallow.slope * shallow.beta_q
        with pytest.raises(CheckFailure):
            validate_bound(shallow, k2, QUICK, samples=40, seed=3)

    def test_curve(self, chsh_bound):
        curve = fidelity_curve(chsh_bound, points=11)
        assert isinstance(curve, pd.DataFrame)
        assert list(curve.columns) == CURVE_COLUMNS
        assert curve[CURVE_COLUMNS[0]].iloc[0] == 0.0
        assert curve[CURVE_COLUMNS[0]].iloc[-1] == pytest.approx(1.0)
        assert curve[CURVE_COLUMNS[1]].iloc[-1] == pytest.approx(1.0)
        assert curve[CURVE_COLUMNS[1]].is_monotonic_increasing

    def test_curve_points(self, chsh_bound):
        with pytest.raises(InputError):
            fidelity_curve(chsh_bound, points=1)


@pytest.mark.slow
def test_symmetry_reduction_agrees_with_full_grid():
    g = builtin_graph("star", 3)
    full = optimal_slope(g, QUICK)
    reduced = optimal_slope(g, QUICK.override(symmetry_reduction=True))
    assert reduced.symmetry_reduction
    assert reduced.slope == pytest.approx(full.slope, rel=5e-2)
    assert reduced.validation_margin >= -1e-8
