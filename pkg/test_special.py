"""
Test per le funzioni speciali.
Copre: polinomi e funzioni di Hermite, quadratura di Gauss-Hermite,
doppio fattoriale, funzioni di Hankel del primo tipo.
"""

import math

import numpy as np
import pytest
from scipy import special as sp

from src.special import (
    GAUSS_HERMITE_MAX_NODES,
    HERMITE_MAX_IMAG,
    HANKEL_SWITCH,
    _hankel_asymptotic,
    bessel_jy,
    double_factorial,
    gauss_hermite,
    hankel_h1,
    hankel_switch,
    hermite_fn,
    hermite_poly,
    hermite_table,
)


# --- hermite_poly ---

class TestHermitePoly:
    def test_low_degrees(self):
        s = np.array([-1.5, 0.0, 0.3, 2.0])
        assert np.allclose(hermite_poly(0, s), 1.0)
        assert np.allclose(hermite_poly(1, s), s)
        assert np.allclose(hermite_poly(2, s), s ** 2 - 1)
        assert np.allclose(hermite_poly(3, s), s ** 3 - 3 * s)

    def test_matches_scipy_probabilists(self):
        s = np.linspace(-3, 3, 7)
        for j in range(8):
            assert np.allclose(hermite_poly(j, s), sp.eval_hermitenorm(j, s))

    def test_complex_argument(self):
        s = 0.5 + 1.0j
        assert hermite_poly(2, s) == pytest.approx(s * s - 1)

    def test_negative_degree(self):
        with pytest.raises(ValueError):
            hermite_poly(-1, 0.0)

    def test_fractional_degree(self):
        with pytest.raises(ValueError):
            hermite_poly(1.5, 0.0)


# --- hermite_fn / hermite_table ---

class TestHermiteFunctions:
    def test_orthonormal(self):
        """∫ φ_i φ_j = δ_ij con la gaussiana assorbita dal peso di quadratura."""
        rule = gauss_hermite(60)
        table = hermite_table(12, rule.quad_nodes, weighted=False).real
        gram = np.einsum("ik,jk,k->ij", table, table, rule.quad_weights)
        assert np.allclose(gram, np.eye(12), atol=1e-12)

    def test_ground_state(self):
        s = np.array([0.0, 1.0, -2.0])
        expected = (2 * np.pi) ** -0.25 * np.exp(-s ** 2 / 4)
        assert np.allclose(hermite_fn(0, s), expected)

    def test_fn_consistent_with_poly(self):
        s = np.array([-1.0, 0.5, 2.5])
        for j in range(6):
            norm = 1.0 / math.sqrt(math.factorial(j) * math.sqrt(2 * np.pi))
            expected = norm * hermite_poly(j, s) * np.exp(-s ** 2 / 4)
            assert np.allclose(hermite_fn(j, s), expected)

    def test_shifted_complex_argument(self):
        """Argomenti con Im s moderata (autofunzioni traslate φ(v + 2iξ))."""
        value = hermite_fn(3, 0.2 + 1.4j)
        norm = 1.0 / math.sqrt(6 * math.sqrt(2 * np.pi))
        s = 0.2 + 1.4j
        assert value == pytest.approx(norm * (s ** 3 - 3 * s) * np.exp(-s * s / 4))

    def test_imag_window(self):
        with pytest.raises(ValueError):
            hermite_fn(2, 1.0 + (HERMITE_MAX_IMAG + 1.0) * 1j)

    def test_empty_table(self):
        with pytest.raises(ValueError):
            hermite_table(0, 0.0)


# --- gauss_hermite ---

class TestGaussHermite:
    def test_weights_sum(self):
        rule = gauss_hermite(20)
        assert rule.quad_weights.sum() == pytest.approx(math.sqrt(2 * np.pi))

    def test_exact_on_polynomials(self):
        """m nodi integrano esattamente fino al grado 2m-1."""
        rule = gauss_hermite(3)
        assert rule.integrate(rule.quad_nodes ** 4) == pytest.approx(3 * math.sqrt(2 * np.pi))
        assert rule.integrate(rule.quad_nodes ** 5) == pytest.approx(0.0, abs=1e-12)

    def test_integrate_along_first_axis(self):
        rule = gauss_hermite(10)
        values = np.stack([np.ones_like(rule.quad_nodes), rule.quad_nodes ** 2], axis=1)
        assert np.allclose(rule.integrate(values), [math.sqrt(2 * np.pi)] * 2)

    def test_node_bounds(self):
        with pytest.raises(ValueError):
            gauss_hermite(0)
        with pytest.raises(ValueError):
            gauss_hermite(GAUSS_HERMITE_MAX_NODES + 1)


# --- double_factorial ---

class TestDoubleFactorial:
    def test_conventions(self):
        assert double_factorial(-1) == 1
        assert double_factorial(0) == 1

    def test_values(self):
        assert double_factorial(1) == 1
        assert double_factorial(5) == 15
        assert double_factorial(6) == 48
        assert double_factorial(9) == 945

    def test_invalid(self):
        with pytest.raises(ValueError):
            double_factorial(-2)
        with pytest.raises(ValueError):
            double_factorial(2.5)


# --- hankel_h1 ---

class TestHankel:
    def test_half_integer_closed_form(self):
        """H_{1/2}(w) = -i √(2/(πw)) e^{iw}."""
        for w in (0.3, 2.0, 1.0 + 0.5j):
            expected = -1j * np.sqrt(2 / (np.pi * w)) * np.exp(1j * w)
            assert hankel_h1(0.5, w) == pytest.approx(expected, rel=1e-12)

    def test_half_integer_matches_scipy(self):
        for nu in (0.5, 1.5, 2.5):
            assert hankel_h1(nu, 3.0) == pytest.approx(complex(sp.hankel1(nu, 3.0)), rel=1e-10)

    def test_integer_series_branch(self):
        assert hankel_h1(1.0, 2.0 + 0.5j) == pytest.approx(complex(sp.hankel1(1, 2.0 + 0.5j)), rel=1e-12)

    def test_integer_asymptotic_branch(self):
        w = 25.0 + 1.0j
        assert abs(w) >= hankel_switch(1.0)
        assert hankel_h1(1.0, w) == pytest.approx(complex(sp.hankel1(1, w)), rel=1e-10)

    def test_consistent_with_bessel_pair(self):
        j, y = bessel_jy(0.0, 3.0)
        assert hankel_h1(0.0, 3.0) == pytest.approx(j + 1j * y, rel=1e-12)

    @pytest.mark.parametrize("z", [0.7, 3.0, 2.0 + 1.0j, 12.0])
    def test_wronskian(self, z):
        """J₁Y₁' - J₁'Y₁ = 2/(πz), con J₁' = J₀ - J₁/z."""
        j0, y0 = bessel_jy(0.0, z)
        j1, y1 = bessel_jy(1.0, z)
        dj1 = j0 - j1 / z
        dy1 = y0 - y1 / z
        assert j1 * dy1 - dj1 * y1 == pytest.approx(2.0 / (np.pi * z), rel=1e-10)

    def test_leading_term_at_large_argument(self):
        w = 100.0
        leading = np.sqrt(2.0 / (np.pi * w)) * np.exp(1j * (w - 0.75 * np.pi))
        value = hankel_h1(1.0, w)
        assert abs(abs(value) - abs(leading)) <= 1e-3 * abs(value)
        assert abs(value - leading) <= 5e-3 * abs(value)

    @pytest.mark.parametrize("imag", [0.0, 0.5])
    def test_scipy_and_asymptotic_overlap(self, imag):
        for r in np.linspace(9.0, 14.0, 11):
            w = complex(r, imag)
            expected = complex(sp.hankel1(1, w))
            assert _hankel_asymptotic(1.0, w) == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize("angle", [0.0, np.pi / 4])
    def test_smooth_across_switch(self, angle):
        """Differenze seconde lungo un raggio che attraversa |w| = HANKEL_SWITCH."""
        h = 1e-3
        direction = np.exp(1j * angle)
        radii = HANKEL_SWITCH + h * (np.arange(-3, 4) + 0.5)
        values = np.array([hankel_h1(1.0, r * direction) for r in radii])
        second = values[2:] - 2.0 * values[1:-1] + values[:-2]
        assert np.all(np.abs(second) <= 1e-5 * np.abs(values[1:-1]))

    def test_upper_half_plane_decay(self):
        """Per w = i·s la funzione decresce esponenzialmente."""
        assert abs(hankel_h1(1.0, 8j)) < abs(hankel_h1(1.0, 2j))

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            hankel_h1(1.0, 0.0)
        with pytest.raises(ValueError):
            hankel_h1(1.0, 1.0 - 0.1j)
        with pytest.raises(ValueError):
            hankel_h1(0.3, 1.0)
        with pytest.raises(ValueError):
            hankel_h1(-1.0, 1.0)
