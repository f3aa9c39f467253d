import math

import numpy as np
import pytest

from switchgain import SignalClassSpec, minimal_realization, rho_lower
from switchgain.gallery import (
    alpha_star,
    common_lyapunov_modes,
    example_planar_pair,
    example_system,
    planar_norm,
    rotated_nodes_pair,
    verify_lyapunov_decay,
    worst_turn_ratio,
)

ARB = SignalClassSpec.arbitrary()


class TestExampleSystem:
    def test_alpha_one_degenerate_pair(self):
        sysm = example_system(1.0)
        np.testing.assert_array_equal(sysm.A(0), sysm.A(1))

    def test_printed_matrices(self):
        a = 4.5047
        sysm = example_system(a)
        np.testing.assert_allclose(sysm.A(0), [[-1, -a, 0], [a, -1, 0], [0, 0, -1]])
        np.testing.assert_allclose(sysm.A(1), [[-1, -a, 0], [1 / a, -1, 0], [0, 0, -1]])
        np.testing.assert_allclose(sysm.A(2), [[-4, 0, 1], [0, -4, 0], [1, 0, -1]])
        np.testing.assert_array_equal(sysm.B(0), np.zeros((3, 1)))
        np.testing.assert_array_equal(sysm.B(1), np.zeros((3, 1)))
        np.testing.assert_array_equal(sysm.B(2), [[0.0], [0.0], [1.0]])
        for k in range(3):
            np.testing.assert_array_equal(sysm.C(k), [[0.0, 0.0, 1.0]])

    def test_minimal_for_several_alphas(self):
        for a in (2.0, 4.5047, 6.0):
            assert minimal_realization(example_system(a)).dim == 3

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            example_system(0.0)


class TestAlphaStar:
    def test_value_in_reference_band(self):
        assert 4.49 <= alpha_star(1e-4) <= 4.52

    def test_bracket_signs(self):
        assert worst_turn_ratio(2.0) < 1.0
        assert worst_turn_ratio(6.0) > 1.0

    def test_refinement_tightens(self):
        coarse = alpha_star(1e-2)
        fine = alpha_star(1e-6)
        assert abs(worst_turn_ratio(fine) - 1.0) <= abs(worst_turn_ratio(coarse) - 1.0) + 1e-12

    def test_cross_module_rho_consistency(self):
        astar = alpha_star(1e-6)
        est = rho_lower(example_planar_pair(astar), ARB)
        assert 0.995 <= est.lower <= 1.005

    def test_invalid_bracket_rejected(self):
        with pytest.raises(ValueError, match="bracket"):
            alpha_star(1e-4, bracket=(5.0, 6.0))


class TestPlanarNorm:
    def test_orbit_closed_and_annulus(self):
        astar = alpha_star(1e-6)
        norm = planar_norm(astar)
        assert norm.closure_error <= 1e-6
        assert norm.radii.min() >= 1.0 - 1e-9
        assert norm.aspect <= math.sqrt(3.0) + 1e-9

    def test_star_shaped_radial_table(self):
        astar = alpha_star(1e-6)
        norm = planar_norm(astar)
        assert np.all(norm.radii > 0)
        assert len(norm.radii) == len(norm.thetas)

    def test_euler_identity(self):
        # radial homogeneity: grad v . (x1, x2) = v exactly in this construction
        astar = alpha_star(1e-6)
        norm = planar_norm(astar)
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.standard_normal(2) * 3.0
            v = norm.value(x[0], x[1])
            gx, gy = norm.gradient(x[0], x[1])
            assert gx * x[0] + gy * x[1] == pytest.approx(v, rel=1e-9)

    def test_lower_bound_by_annulus(self):
        astar = alpha_star(1e-6)
        norm = planar_norm(astar)
        rng = np.random.default_rng(1)
        for _ in range(100):
            x = rng.standard_normal(2) * 5.0
            assert norm.value(x[0], x[1]) >= np.hypot(x[0], x[1]) / math.sqrt(3.0) - 1e-9

    def test_far_from_marginal_rejected(self):
        with pytest.raises(ValueError, match="close|marginal"):
            planar_norm(2.0)


class TestLyapunovDecay:
    def test_dissipation_inequality_sampled(self):
        astar = alpha_star(1e-6)
        rep = verify_lyapunov_decay(astar, 3000, seed=0)
        assert rep.max_violation <= 1e-3
        assert rep.annulus_ok
        assert rep.orbit_closure_error <= 1e-6

    def test_gradient_bound(self):
        astar = alpha_star(1e-6)
        rep = verify_lyapunov_decay(astar, 500, seed=1)
        assert rep.grad_norm_max <= math.sqrt(3.0) + 1e-6

    def test_planar_modes_nonincreasing(self):
        astar = alpha_star(1e-6)
        rep = verify_lyapunov_decay(astar, 500, seed=2)
        assert rep.planar_decay_max <= 1e-6


class TestPlantedInstances:
    def test_nodes_pair_modes_hurwitz(self):
        sysm = rotated_nodes_pair()
        for k in range(2):
            assert max(np.real(np.linalg.eigvals(sysm.A(k)))) < 0

    def test_nodes_pair_unstable_fast_switching(self):
        sysm = rotated_nodes_pair()
        est = rho_lower(sysm, ARB)
        assert est.lower > 1.05

    def test_cqlf_modes_exact_rate(self):
        sysm = common_lyapunov_modes(-0.25, (1.0, 2.0))
        for k in range(2):
            sym = 0.5 * (sysm.A(k) + sysm.A(k).T)
            np.testing.assert_allclose(sym, -0.25 * np.eye(2), atol=1e-12)
