"""
Test per l'evoluzione temporale e la scansione del decadimento.
Copre: esponenziale di Krylov, guard di wrap-around e di coda, contrazione
e semigruppo, fit della legge di potenza, decadimento libero radiale,
consistenza con il risolvente via trasformata di Laplace.
"""

import math
from unittest.mock import patch

import numpy as np
import pytest
from scipy import linalg

from src.config import NumericalTrustError
from src.evolve import (
    DecayReport,
    decay_scan,
    expv,
    free_decay_radial,
    free_evolution_exact,
    laplace_transform_check,
    propagate,
    propagate_with_stats,
    wrap_time,
)
from src.phase_space import PhaseGrid, PotentialSpec, gaussian_packet, odd_packet
from src.radial import RadialProfile

SMALL = PhaseGrid(1, 8.0, 32, 8)
REFERENCE = PotentialSpec(family="polynomial-decay", amplitude=0.3, decay_rho=6.0)


# --- expv ---

class TestExpv:
    def _matrix(self, size=60, seed=0):
        rng = np.random.default_rng(seed)
        skew = rng.standard_normal((size, size))
        skew = (skew + skew.T) / np.sqrt(size)
        return -(np.diag(np.linspace(0.0, 2.0, size)) + 1j * skew)

    def test_matches_dense_expm(self):
        a = self._matrix()
        v = np.ones(a.shape[0], dtype=complex)
        w, stats = expv(1.5, lambda x: a @ x, v, np.linalg.norm(a, 1), tol=1e-10)
        expected = linalg.expm(1.5 * a) @ v
        assert np.linalg.norm(w - expected) <= 1e-7 * np.linalg.norm(expected)
        assert stats.steps >= 1

    def test_zero_time(self):
        v = np.arange(5, dtype=complex)
        w, stats = expv(0.0, lambda x: -x, v, 1.0)
        assert np.array_equal(w, v)
        assert stats.steps == 0

    def test_zero_vector(self):
        w, _ = expv(1.0, lambda x: -x, np.zeros(5, dtype=complex), 1.0)
        assert np.all(w == 0)

    def test_small_invariant_subspace(self):
        """Breakdown di Arnoldi: il risultato è esatto nel sottospazio invariante."""
        a = np.diag([-1.0, -2.0, -3.0, -4.0]).astype(complex)
        v = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
        w, _ = expv(2.0, lambda x: a @ x, v, 4.0)
        assert w[0] == pytest.approx(np.exp(-2.0), rel=1e-10)
        assert np.allclose(w[1:], 0.0)


# --- propagate ---

class TestPropagate:
    def test_matches_exact_free_evolution(self):
        f = gaussian_packet(SMALL, 1.0)
        krylov = propagate(f, 1.0, wrap_beta=None, strict=False)
        exact = free_evolution_exact(f, 1.0)
        assert (krylov - exact).norm() <= 1e-8 * f.norm()

    def test_contraction(self):
        f = gaussian_packet(SMALL, 1.0, alpha=(1,))
        u = propagate(f, 2.0, potential=REFERENCE, wrap_beta=None, strict=False)
        assert u.norm() <= f.norm() * (1 + 1e-9)

    def test_semigroup(self):
        f = gaussian_packet(SMALL, 1.0)
        whole = propagate(f, 1.0, potential=REFERENCE, wrap_beta=None, strict=False)
        half = propagate(f, 0.5, potential=REFERENCE, wrap_beta=None, strict=False)
        nested = propagate(half, 0.5, potential=REFERENCE, wrap_beta=None, strict=False)
        assert (whole - nested).norm() <= 1e-8 * f.norm()

    def test_free_mass_conserved(self):
        """⟨S₀(t) f, 𝔐₀⟩ non dipende da t."""
        f = gaussian_packet(SMALL, 1.0)
        u = free_evolution_exact(f, 3.0)
        index = (0, 0)
        assert u.coeffs[index] == pytest.approx(f.coeffs[index], rel=1e-12)

    def test_wrap_guard(self):
        f = gaussian_packet(SMALL, 1.0)
        assert wrap_time(f) == pytest.approx(0.05 * 64)
        with pytest.raises(NumericalTrustError):
            propagate(f, 5.0)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            propagate(gaussian_packet(SMALL), -1.0)
        with pytest.raises(ValueError):
            free_evolution_exact(gaussian_packet(SMALL), -1.0)

    def test_stats_report_tail(self):
        f = gaussian_packet(SMALL, 1.0)
        _, stats, tail = propagate_with_stats(f, 0.5, wrap_beta=None, strict=False)
        assert stats.steps >= 1
        assert 0.0 <= tail <= 1.0


# --- decay_scan ---

class TestDecayScan:
    def test_window_too_short(self):
        grid = PhaseGrid(1, 48.0, 64, 8)
        f = gaussian_packet(grid, 1.0)
        with pytest.raises(ValueError):
            decay_scan(f, f, [20.0, 22.0, 25.0], window=(20.0, 25.0))

    def test_non_positive_times(self):
        grid = PhaseGrid(1, 48.0, 64, 8)
        f = gaussian_packet(grid, 1.0)
        with pytest.raises(ValueError):
            decay_scan(f, f, [0.0, 10.0], window=(1.0, 10.0))

    def test_times_past_wrap_strict(self):
        f = gaussian_packet(SMALL, 1.0)
        with pytest.raises(NumericalTrustError):
            decay_scan(f, f, [1.0, 2.0, 10.0], window=(1.0, 3.2))

    @pytest.mark.slow
    def test_free_grid_decay_n1(self):
        """Senza potenziale il pairing decade come t^{-1/2} con ampiezza (4π)^{-1/2}⟨f,𝔐₀⟩²."""
        grid = PhaseGrid(1, 48.0, 256, 16)
        f = gaussian_packet(grid, 1.0)
        times = np.geomspace(20.0, 100.0, 6)
        report = decay_scan(f, f, times, window=(20.0, 100.0), strict=False)
        assert report.fitted_exponent == pytest.approx(-0.5, abs=0.03)
        assert report.amplitude_ratio == pytest.approx(1.0, abs=0.1)
        assert report.claim == "full"
        assert len(report.rows()) == 6

    def test_orthogonal_data_has_no_prediction(self):
        odd = odd_packet(SMALL, 1.0)
        with patch("src.evolve.log") as mock_log:
            report = decay_scan(
                odd, odd, [1.0, 2.0, 3.0], potential=REFERENCE, window=(1.0, 3.2), strict=False
            )
        assert report.predicted_amplitude == 0
        assert math.isnan(report.amplitude_ratio)
        assert all(math.isnan(row[-1]) for row in report.rows())
        messages = [call.args[0] for call in mock_log.call_args_list]
        assert not any("atteso" in m or "rapporto" in m for m in messages)

    @pytest.mark.slow
    def test_perturbed_decay_n1(self):
        """Con potenziale l'ampiezza è (4π)^{-1/2}⟨f,𝔐⟩⟨𝔐,g⟩."""
        grid = PhaseGrid(1, 48.0, 512, 16)
        f = gaussian_packet(grid, 1.0)
        times = np.geomspace(20.0, 100.0, 8)
        report = decay_scan(f, f, times, potential=REFERENCE, window=(20.0, 100.0))
        assert report.fitted_exponent == pytest.approx(-0.5, abs=0.03)
        assert report.amplitude_ratio == pytest.approx(1.0, abs=0.1)

    @pytest.mark.slow
    def test_orthogonal_data_decays_faster(self):
        grid = PhaseGrid(1, 48.0, 512, 16)
        odd = odd_packet(grid, 1.0)
        times = np.geomspace(20.0, 100.0, 8)
        report = decay_scan(odd, odd, times, potential=REFERENCE, window=(20.0, 100.0))
        assert report.fitted_exponent <= -0.75
        assert math.isnan(report.amplitude_ratio)


# --- decadimento radiale ---

class TestFreeDecayRadial:
    @pytest.mark.slow
    @pytest.mark.parametrize("dim", [4, 5])
    def test_heat_asymptotics(self, dim):
        profile = RadialProfile(width=1.0)
        times = np.geomspace(20.0, 200.0, 8)
        report = free_decay_radial(dim, profile, profile, times)
        ratios = [row[-1] for row in report.rows()]
        assert 0.98 <= min(ratios) and max(ratios) <= 1.02
        assert report.fitted_exponent == pytest.approx(-dim / 2, abs=0.05)
        assert report.route == "radial"

    def test_dimension_two_makes_no_claim(self):
        profile = RadialProfile(width=1.0)
        report = free_decay_radial(2, profile, profile, [10.0, 40.0])
        assert report.claim == "none"

    def test_columns(self):
        profile = RadialProfile(width=1.0)
        report = free_decay_radial(3, profile, profile, [10.0, 40.0])
        assert DecayReport.COLUMNS == ["t", "pairing_re", "pairing_im", "prediction", "ratio"]
        assert all(len(row) == len(DecayReport.COLUMNS) for row in report.rows())

    def test_invalid(self):
        profile = RadialProfile()
        with pytest.raises(ValueError):
            free_decay_radial(0, profile, profile, [10.0, 40.0])
        with pytest.raises(ValueError):
            free_decay_radial(3, profile, profile, [10.0, 12.0])


# --- trasformata di Laplace ---

class TestLaplaceTransform:
    def test_resolvent_consistency(self):
        f = gaussian_packet(SMALL, 1.0)
        check = laplace_transform_check(f, REFERENCE, z=-1.0)
        assert check.relative_error <= 1e-6
        assert check.nodes > 0

    def test_requires_negative_real_part(self):
        with pytest.raises(ValueError):
            laplace_transform_check(gaussian_packet(SMALL), z=0.5j)
