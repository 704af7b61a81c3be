"""
Test per la via radiale su ℝⁿ.
Copre: profili e trasformate, area della sfera, pairing di evoluzione e di
risolvente, norme via Plancherel.
"""

import math

import numpy as np
import pytest

from src.radial import (
    RadialProfile,
    axial_fiber,
    evolution_pairing,
    evolution_pairings,
    plain_norm,
    resolvent_pairing,
    scaled_resolvent_norm,
    sphere_area,
    tau,
)


# --- profili ---

class TestRadialProfile:
    def test_defaults(self):
        profile = RadialProfile()
        assert profile.shape == "gaussian"
        assert profile.hermite == (1.0,)

    def test_maxwell_pairing_gaussian(self):
        assert RadialProfile(width=1.0).maxwell_pairing(3) == pytest.approx((2 * math.pi) ** 1.5)

    def test_amplitude_and_hermite_scale(self):
        profile = RadialProfile(width=2.0, amplitude=3.0, hermite=(0.5, 1.0))
        assert profile.maxwell_pairing(1) == pytest.approx(3.0 * math.sqrt(8 * math.pi) * 0.5)

    def test_laplacian_has_zero_mean(self):
        profile = RadialProfile(shape="gaussian-laplacian")
        assert profile.fourier(0.0, 4) == 0.0
        assert profile.fourier(1.0, 4) > 0

    def test_hermite_vector(self):
        vec = RadialProfile(hermite=(1.0, 0.0, 2.0)).hermite_vector(5)
        assert np.allclose(vec, [1, 0, 2, 0, 0])
        with pytest.raises(ValueError):
            RadialProfile(hermite=(1.0, 0.0, 2.0)).hermite_vector(2)

    def test_invalid(self):
        with pytest.raises(ValueError):
            RadialProfile(shape="box")
        with pytest.raises(ValueError):
            RadialProfile(width=0.0)
        with pytest.raises(ValueError):
            RadialProfile(hermite=())


class TestHelpers:
    def test_sphere_area(self):
        assert sphere_area(1) == pytest.approx(2.0)
        assert sphere_area(2) == pytest.approx(2 * math.pi)
        assert sphere_area(3) == pytest.approx(4 * math.pi)

    def test_tau(self):
        assert tau(1.0) == pytest.approx(math.exp(-1.0))
        assert tau(1e-8) == pytest.approx(5e-17, rel=1e-6)

    def test_axial_fiber(self):
        fiber = axial_fiber(0.5, 4)
        assert fiber[2, 2] == 2.0
        assert fiber[0, 1] == pytest.approx(0.5j)


# --- integrali radiali ---

class TestRadialIntegrals:
    def test_plain_norm_gaussian(self):
        """‖e^{-x²/2} ⊗ ψ₀‖² = π^{n/2}."""
        for n in (1, 3):
            assert plain_norm(n, RadialProfile()) ** 2 == pytest.approx(math.pi ** (n / 2), rel=1e-10)

    def test_short_time_pairing_is_norm(self):
        profile = RadialProfile()
        value = evolution_pairing(3, profile, profile, 1e-8).value
        assert value.real == pytest.approx(plain_norm(3, profile) ** 2, rel=1e-6)

    def test_exact_gaussian_pairing(self):
        """Per dati ψ₀ il pairing è ∫ |F̂|² e^{-|ξ|² τ(t)} dξ/(2π)ⁿ."""
        profile, t, n = RadialProfile(), 2.0, 1
        expected = math.sqrt(math.pi / (1.0 + tau(t)))
        assert evolution_pairing(n, profile, profile, t).value.real == pytest.approx(expected, rel=1e-6)

    def test_pairings_in_order(self):
        profile = RadialProfile()
        times = [1.0, 2.0, 4.0]
        results = evolution_pairings(1, profile, profile, times, threads=2)
        values = [r.value.real for r in results]
        assert values == sorted(values, reverse=True)

    def test_invalid_time(self):
        with pytest.raises(ValueError):
            evolution_pairing(1, RadialProfile(), RadialProfile(), 0.0)

    def test_resolvent_far_from_spectrum(self):
        """⟨R₀(z) f, f⟩ ≈ -‖f‖²/z per |z| grande lungo l'asse negativo."""
        profile = RadialProfile()
        z = -1e4
        value = resolvent_pairing(1, profile, profile, z).value
        assert value == pytest.approx(-plain_norm(1, profile) ** 2 / z, rel=1e-3)

    def test_resolvent_on_cut(self):
        with pytest.raises(ValueError):
            resolvent_pairing(1, RadialProfile(), RadialProfile(), 0.5)

    def test_scaled_norm_requires_negative(self):
        with pytest.raises(ValueError):
            scaled_resolvent_norm(1, RadialProfile(), 0.1)

    def test_scaled_norm_bounded_by_norm(self):
        """‖λR₀(λ)u‖ <= ‖u‖ per accretività."""
        profile = RadialProfile()
        assert scaled_resolvent_norm(1, profile, -0.5) <= plain_norm(1, profile) * (1 + 1e-10)
