"""
Test per l'operatore di fibra P̂₀(ξ).
Copre: assemblaggio, spettro ℓ + |ξ|², proiezioni di Riesz, accretività,
propagatore e risolvente densi, rango numerico.
"""

import numpy as np
import pytest

from src.config import NumericalTrustError
from src.fiber import (
    CutoffChi,
    accretivity_gap,
    assemble_fiber,
    b0_symbol,
    box_distance,
    exact_free_pairing,
    fiber_propagate,
    fiber_resolvent,
    fiber_resolvent_norm,
    fiber_spectrum,
    ladder_matrix,
    numerical_range_box,
    projection_overlap,
    riesz_projection,
)


# --- assemblaggio ---

class TestAssembleFiber:
    def test_size(self):
        assert assemble_fiber(1, 0.5, 16).size == 16
        assert assemble_fiber(2, (0.3, 0.1), 6).size == 36

    def test_scalar_xi_padded(self):
        op = assemble_fiber(3, 0.8, 4)
        assert op.xi == (0.8, 0.0, 0.0)
        assert op.xi_norm_sq == pytest.approx(0.64)

    def test_zero_xi_is_number_operator(self):
        op = assemble_fiber(1, 0.0, 8)
        assert np.allclose(op.matrix, np.diag(np.arange(8)))

    def test_ladder_symmetric(self):
        s = ladder_matrix(6)
        assert np.allclose(s, s.T)
        assert s[0, 1] == pytest.approx(1.0)
        assert s[4, 5] == pytest.approx(np.sqrt(5))

    def test_invalid(self):
        with pytest.raises(ValueError):
            assemble_fiber(1, 0.5, 1)
        with pytest.raises(ValueError):
            assemble_fiber(2, (0.1, 0.2, 0.3), 4)
        with pytest.raises(ValueError):
            assemble_fiber(0, 0.5, 4)


# --- spettro ---

class TestFiberSpectrum:
    @pytest.mark.parametrize("xi", [0.0, 0.7, 1.5])
    def test_levels_n1(self, xi):
        op = assemble_fiber(1, xi, 64)
        values = fiber_spectrum(op, 5)
        assert np.max(np.abs(values - (np.arange(5) + xi * xi))) <= 1e-8

    def test_levels_n2_with_multiplicity(self):
        op = assemble_fiber(2, (0.3, -0.4), 24)
        values = fiber_spectrum(op, 3)
        expected = np.array([0.0, 1.0, 1.0]) + 0.25
        assert np.max(np.abs(values - expected)) <= 1e-6

    def test_count_outside_trusted_region(self):
        op = assemble_fiber(1, 0.5, 8)
        with pytest.raises(ValueError):
            fiber_spectrum(op, 3)
        with pytest.raises(ValueError):
            fiber_spectrum(op, 0)


# --- proiezioni di Riesz ---

class TestRieszProjection:
    @pytest.mark.parametrize("xi", [0.5, 1.0, 1.5])
    def test_idempotent_and_rank_one(self, xi):
        op = assemble_fiber(1, xi, 64)
        for level in range(4):
            proj = riesz_projection(op, level)
            assert proj.idempotency_residual <= 1e-8
            assert proj.trace == pytest.approx(1.0, abs=1e-8)
            assert proj.eigenvalue == pytest.approx(level + xi * xi)

    @pytest.mark.parametrize("xi", [0.5, 1.0, 1.5])
    def test_mutually_annihilating(self, xi):
        op = assemble_fiber(1, xi, 64)
        projections = [riesz_projection(op, level) for level in range(4)]
        for p in projections:
            for q in projections:
                if p.level != q.level:
                    assert projection_overlap(p, q) <= 1e-8

    def test_overlap_is_scale_free(self):
        """A ξ = 1.5 le norme delle proiezioni superano 1e3."""
        op = assemble_fiber(1, 1.5, 64)
        p2, p3 = riesz_projection(op, 2), riesz_projection(op, 3)
        assert np.linalg.norm(p2.matrix) * np.linalg.norm(p3.matrix) > 1e3
        assert projection_overlap(p2, p3) <= 1e-8

    def test_commutes_with_operator(self):
        """P̂₀ Π_ℓ = (ℓ + |ξ|²) Π_ℓ."""
        op = assemble_fiber(1, 0.5, 64)
        proj = riesz_projection(op, 2)
        gap = op.matrix @ proj.matrix - proj.eigenvalue * proj.matrix
        assert np.linalg.norm(gap) / np.linalg.norm(proj.matrix) <= 1e-8

    def test_pairing_convention_recorded(self):
        proj = riesz_projection(assemble_fiber(1, 0.5, 32), 0)
        assert proj.pairing in ("conjugate", "bilinear")

    def test_level_out_of_range(self):
        op = assemble_fiber(1, 0.5, 8)
        with pytest.raises(ValueError):
            riesz_projection(op, -1)
        with pytest.raises(ValueError):
            riesz_projection(op, 8)

    def test_ill_conditioned_projection_raises(self):
        """A ξ grande i coefficienti traslati escono dalla finestra fidata."""
        op = assemble_fiber(1, 6.0, 12)
        with pytest.raises((NumericalTrustError, ValueError)):
            riesz_projection(op, 3)


# --- accretività e oracoli ---

class TestAccretivity:
    def test_identity_random_states(self):
        rng = np.random.default_rng(0)
        op = assemble_fiber(2, (0.3, -0.7), 8)
        for _ in range(20):
            c = rng.standard_normal(op.size) + 1j * rng.standard_normal(op.size)
            assert accretivity_gap(op, c) <= 1e-12 * np.vdot(c, c).real

    def test_numerical_range_in_right_half_plane(self):
        re_min, _, _, _ = numerical_range_box(assemble_fiber(1, 1.2, 16))
        assert re_min >= -1e-12

    def test_resolvent_norm_bound(self):
        """Per z = -1 la distanza dal rango numerico è almeno 1."""
        op = assemble_fiber(1, 0.9, 16)
        box = numerical_range_box(op)
        assert box_distance(box, -1.0 + 0j) >= 1.0
        assert fiber_resolvent_norm(op, -1.0) <= 1.0 + 1e-12

    def test_box_distance_inside(self):
        assert box_distance((0.0, 1.0, -1.0, 1.0), 0.5 + 0.2j) == 0.0
        assert box_distance((0.0, 1.0, -1.0, 1.0), 2.0 + 0j) == pytest.approx(1.0)


class TestPropagatorAndResolvent:
    def test_exact_ground_state_pairing(self):
        xi, t = 0.8, 2.0
        op = assemble_fiber(1, xi, 40)
        psi0 = np.zeros(40, dtype=complex)
        psi0[0] = 1.0
        value = np.vdot(psi0, fiber_propagate(op, t, psi0))
        assert value == pytest.approx(exact_free_pairing(xi, t), abs=1e-10)

    def test_propagate_matches_spectral_sum(self):
        """e^{-tP̂₀} c = Σ_ℓ e^{-t(ℓ+ξ²)} Π_ℓ c per c nello span di Π₀..Π₃."""
        xi, t = 0.5, 1.0
        op = assemble_fiber(1, xi, 64)
        projections = [riesz_projection(op, level) for level in range(4)]
        rng = np.random.default_rng(1)
        seed = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        seed[8:] = 0.0
        parts = [p.apply(seed) for p in projections]
        c = sum(parts)
        expected = sum(np.exp(-t * p.eigenvalue) * part for p, part in zip(projections, parts))
        actual = fiber_propagate(op, t, c)
        assert np.linalg.norm(actual - expected) <= 1e-8 * np.linalg.norm(c)

    def test_propagate_invalid_time(self):
        op = assemble_fiber(1, 0.5, 8)
        with pytest.raises(ValueError):
            fiber_propagate(op, 0.0, np.ones(8))

    def test_resolvent_solves(self):
        op = assemble_fiber(1, 0.6, 16)
        rhs = np.arange(16, dtype=complex)
        z = -0.5 + 0.3j
        sol = fiber_resolvent(op, z, rhs)
        assert np.allclose(op.matrix @ sol - z * sol, rhs)

    def test_resolvent_pole_guard(self):
        op = assemble_fiber(1, 0.5, 32)
        with pytest.raises(ValueError):
            fiber_resolvent(op, 0.25, np.ones(32))


class TestThresholdSymbol:
    def test_cutoff_profile(self):
        chi = CutoffChi(a=0.5)
        assert chi(np.array([[0.0]]))[0] == pytest.approx(1.0)
        assert chi(np.array([[3.0]]))[0] == pytest.approx(0.0)

    def test_b0_at_origin(self):
        value = b0_symbol(np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)))
        assert value[0] == pytest.approx(2.0)
