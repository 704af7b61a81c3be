# src/constants.py
"""
Costanti di soglia in forma chiusa e inviluppo dell'esponente di Mehler.

Le costanti dipendono solo dalla dimensione n:
- n dispari >= 3: a_{n,n-2} (Laplaciano) e b_n (decadimento in tempo)
- n pari >= 4: c_{n,0} (coefficiente logaritmico) ed e_n
Il prodotto di ciascuna coppia riproduce la costante del calore (4π)^{-n/2}.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gamma

from .special import double_factorial

# Sotto questa soglia σ(t) si valuta con la serie di Taylor
SIGMA_SERIES_THRESHOLD = 1e-3

# Sotto questa soglia il ramo diretto integra tanh² invece di sottrarre
SIGMA_INTEGRAL_THRESHOLD = 1.0
_SIGMA_NODES, _SIGMA_WEIGHTS = leggauss(24)


def _require_odd(n: int) -> None:
    if int(n) != n or n < 3 or n % 2 == 0:
        raise ValueError(f"Dimensione non valida: {n} (serve n dispari >= 3)")


def _require_even(n: int) -> None:
    if int(n) != n or n < 4 or n % 2 == 1:
        raise ValueError(f"Dimensione non valida: {n} (serve n pari >= 4)")


def heat_coefficient(n: int) -> float:
    """(4π)^{-n/2}, costante del nucleo del calore in dimensione n."""
    if int(n) != n or n < 1:
        raise ValueError(f"Dimensione non valida: {n}")
    return (4.0 * np.pi) ** (-n / 2.0)


def a_leading(n: int) -> complex:
    """a_{n,n-2} = i / (2 (2π)^{(n-1)/2} (n-2)!!), n dispari >= 3."""
    _require_odd(n)
    return 1j / (2.0 * (2.0 * np.pi) ** ((n - 1) / 2.0) * double_factorial(n - 2))


def c_log(n: int) -> float:
    """c_{n,0} = -1 / ((2π)^{n/2} 2^{(n-2)/2} ((n-2)/2)!), n pari >= 4."""
    _require_even(n)
    half = (n - 2) // 2
    return -1.0 / ((2.0 * np.pi) ** (n / 2.0) * 2.0 ** half * math.factorial(half))


def b_time(n: int) -> complex:
    """b_n = Γ(n/2) / (π i), n dispari >= 3."""
    _require_odd(n)
    return complex(gamma(n / 2.0)) / (np.pi * 1j)


def b_time_double_factorial(n: int) -> complex:
    """Forma con doppio fattoriale di b_n: (n-2)!! / (√π i 2^{(n-1)/2})."""
    _require_odd(n)
    return double_factorial(n - 2) / (math.sqrt(math.pi) * 1j * 2.0 ** ((n - 1) / 2.0))


def e_time(n: int) -> float:
    """e_n = -((n-2)/2)! / 2, n pari >= 4."""
    _require_even(n)
    return -math.factorial((n - 2) // 2) / 2.0


def heat_product(n: int) -> float:
    """
    Prodotto a·b (n dispari) o c·e (n pari), che vale (4π)^{-n/2}.

    Per n dispari la parte immaginaria del prodotto è nulla a meno di
    arrotondamento e viene scartata.
    """
    if int(n) != n or n < 3:
        raise ValueError(f"Dimensione non valida: {n} (serve n >= 3)")
    if n % 2:
        return float((a_leading(n) * b_time(n)).real)
    return float(c_log(n) * e_time(n))


def newtonian_coefficient(n: int) -> float:
    """Γ(n/2 - 1) / (4 π^{n/2}): coefficiente del nucleo di Newton r^{-(n-2)}."""
    if int(n) != n or n < 3:
        raise ValueError(f"Dimensione non valida: {n} (serve n >= 3)")
    return float(gamma(n / 2.0 - 1.0) / (4.0 * np.pi ** (n / 2.0)))


@dataclass(frozen=True)
class KfpConstants:
    """Riga della tabella delle costanti per una dimensione."""

    dim: int
    a_leading: Optional[complex]
    c_log: Optional[float]
    b_time: Optional[complex]
    e_time: Optional[float]
    heat_product: float
    heat_imag: float
    identity_residual: float


def kfp_constants(n: int) -> KfpConstants:
    """Costruisce la riga di costanti per la dimensione n (>= 3)."""
    exact = heat_coefficient(n)
    if n % 2:
        a, b = a_leading(n), b_time(n)
        product = a * b
        return KfpConstants(
            dim=n, a_leading=a, c_log=None, b_time=b, e_time=None,
            heat_product=float(product.real), heat_imag=float(product.imag),
            identity_residual=abs(product.real - exact) / exact
        )
    c, e = c_log(n), e_time(n)
    return KfpConstants(
        dim=n, a_leading=None, c_log=c, b_time=None, e_time=e,
        heat_product=c * e, heat_imag=0.0,
        identity_residual=abs(c * e - exact) / exact
    )


def constants_table(dims: Iterable[int]) -> List[KfpConstants]:
    """Tabella delle costanti per un insieme di dimensioni."""
    return [kfp_constants(n) for n in dims]


def parse_dim_range(text: str) -> List[int]:
    """
    Interpreta "3..12" o "3,5,7" come lista di dimensioni.

    Raises:
        ValueError: Se il formato non è riconosciuto
    """
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


# --- inviluppo di Mehler ---

@dataclass(frozen=True)
class GammaEnvelope:
    """Valori σ(t), θ(t) e γ(t) = σ(t) θ(t)."""

    t: float
    sigma: float
    theta: float
    gamma: float


def sigma_series(t: float) -> float:
    """Serie di Taylor di t - 2 tanh(t/2) fino a t^9."""
    t2 = t * t
    return t * t2 * (1.0 / 12.0 - t2 * (1.0 / 120.0 - t2 * (17.0 / 20160.0 - t2 * 31.0 / 362880.0)))


def sigma_direct(t: float) -> float:
    """
    σ(t) = t - 2 coth t + 2 csch t = t - 2 tanh(t/2).

    Per t < 1 usa σ(t) = 2 ∫_0^{t/2} tanh²(s) ds (Gauss-Legendre), che non
    sottrae quantità vicine.
    """
    if t < SIGMA_INTEGRAL_THRESHOLD:
        half = 0.5 * t
        s = 0.5 * half * (_SIGMA_NODES + 1.0)
        return float(half * np.dot(_SIGMA_WEIGHTS, np.tanh(s) ** 2))
    return t - 2.0 * math.tanh(t / 2.0)


def gamma_envelope(t: float) -> GammaEnvelope:
    """
    Inviluppo γ(t) = σ(t) θ(t), con θ(t) = 4π e^{-t} sinh t.

    Raises:
        ValueError: Se t <= 0
    """
    if not t > 0:
        raise ValueError(f"Tempo non valido: {t} (serve t > 0)")
    sigma = sigma_series(t) if t < SIGMA_SERIES_THRESHOLD else sigma_direct(t)
    theta = 2.0 * np.pi * -math.expm1(-2.0 * t)
    return GammaEnvelope(t=t, sigma=sigma, theta=theta, gamma=sigma * theta)


def gamma_large_t_slope(t1: float = 50.0, t2: float = 60.0) -> float:
    """Pendenza (γ(t2) - γ(t1)) / (t2 - t1), che tende a 2π per t grande."""
    return (gamma_envelope(t2).gamma - gamma_envelope(t1).gamma) / (t2 - t1)
