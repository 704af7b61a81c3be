# src/radial.py
"""
Via radiale su ℝⁿ per dati di tipo f̂(ξ, v) = F̂(|ξ|) h(v·ξ̂) ψ₀(v⊥).

Per invarianza per rotazioni, ⟨e^{-tP̂₀(ξ)} f̂, ĝ⟩ dipende solo da ρ = |ξ| e si
riduce a una fibra su un solo asse di velocità. Pairing e norme diventano
integrali in ρ calcolati con ``scipy.integrate.quad_vec``.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.integrate import quad_vec
from scipy.special import gamma

from .config import NumericalTrustError
from .fiber import ladder_matrix, number_matrix
from .phase_space import TAIL_FRACTION
from .pool import parallel_map

# -ln(1e-16): oltre questo esponente l'integrando è sotto la precisione macchina
LOG_EPS = 36.84
DEFAULT_TRUNC = 32
DEFAULT_EPSREL = 1e-12
QUAD_LIMIT = 2000

PROFILE_SHAPES = ("gaussian", "gaussian-laplacian")


def sphere_area(n: int) -> float:
    """|S^{n-1}| = 2 π^{n/2} / Γ(n/2) (vale 2 per n = 1)."""
    return float(2.0 * np.pi ** (n / 2.0) / gamma(n / 2.0))


@dataclass(frozen=True)
class RadialProfile:
    """
    Dato radiale: profilo spaziale F e coefficienti Hermite longitudinali h.

    - gaussian: F(x) = A exp(-|x|²/(2σ²))
    - gaussian-laplacian: F = -ΔG con G gaussiana (media nulla, F̂(0) = 0)
    """

    shape: str = "gaussian"
    width: float = 1.0
    amplitude: float = 1.0
    hermite: Tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.shape not in PROFILE_SHAPES:
            raise ValueError(f"Profilo sconosciuto: {self.shape}")
        if not self.width > 0:
            raise ValueError(f"Larghezza non valida: {self.width}")
        if not self.hermite:
            raise ValueError("Servono coefficienti Hermite non vuoti")

    def fourier(self, rho: float, n: int) -> float:
        """F̂(ρ) = ∫ F(x) e^{-ix·ξ} dx con |ξ| = ρ."""
        sigma2 = self.width ** 2
        value = self.amplitude * (2.0 * np.pi * sigma2) ** (n / 2.0) * math.exp(-sigma2 * rho * rho / 2.0)
        if self.shape == "gaussian-laplacian":
            value *= rho * rho
        return value

    def spatial_integral(self, n: int) -> float:
        return self.fourier(0.0, n)

    def maxwell_pairing(self, n: int) -> float:
        """⟨f, 𝔐₀⟩ = F̂(0) h₀."""
        return self.spatial_integral(n) * self.hermite[0]

    def hermite_vector(self, trunc: int) -> np.ndarray:
        if len(self.hermite) > trunc:
            raise ValueError(f"Profilo con {len(self.hermite)} coefficienti oltre il troncamento {trunc}")
        out = np.zeros(trunc, dtype=complex)
        out[:len(self.hermite)] = self.hermite
        return out


@dataclass
class RadialResult:
    """Valore di un integrale radiale con diagnostica."""

    value: complex
    error: float
    intervals: int
    tail_fraction: float


def axial_fiber(rho: float, trunc: int) -> np.ndarray:
    """P̂₀ ristretto all'asse ξ̂: N + iρS."""
    return number_matrix(trunc) + 1j * rho * ladder_matrix(trunc)


def _tail(vec: np.ndarray) -> float:
    energy = np.abs(vec) ** 2
    total = float(np.sum(energy))
    if total == 0:
        return 0.0
    cut = len(vec) - max(1, math.ceil(TAIL_FRACTION * len(vec)))
    return float(np.sum(energy[cut:]) / total)


def tau(t: float) -> float:
    """t - 1 + e^{-t}: esponente della fibra libera su ψ₀."""
    return t + math.expm1(-t)


def _integrate(
    n: int,
    weight: Callable[[float], complex],
    rho_max: float,
    epsrel: float,
    points: Optional[Sequence[float]] = None
) -> Tuple[complex, float, int]:
    """(2π)^{-n} |S^{n-1}| ∫_0^{ρmax} ρ^{n-1} weight(ρ) dρ."""
    def integrand(rho: float) -> np.ndarray:
        value = rho ** (n - 1) * weight(rho)
        return np.array([value.real, value.imag])

    inner = [p for p in (points or ()) if 0 < p < rho_max]
    result, error, info = quad_vec(
        integrand, 0.0, rho_max, epsrel=epsrel, norm="max", limit=QUAD_LIMIT,
        points=inner or None, full_output=True
    )
    if info.status != 0:
        raise NumericalTrustError(f"Quadratura radiale non convergente: {info.message}")
    prefactor = sphere_area(n) / (2.0 * np.pi) ** n
    return prefactor * complex(result[0], result[1]), prefactor * float(error), int(info.intervals.shape[0])


def _profile_cutoff(f: RadialProfile, g: RadialProfile, damping: float = 0.0) -> float:
    """ρ oltre cui |F̂ Ĝ| e^{-damping ρ²} è trascurabile."""
    decay = damping + (f.width ** 2 + g.width ** 2) / 2.0
    return 1.2 * math.sqrt(LOG_EPS / decay) + 1.0


def evolution_pairing(
    n: int,
    f: RadialProfile,
    g: RadialProfile,
    t: float,
    trunc: int = DEFAULT_TRUNC,
    epsrel: float = DEFAULT_EPSREL
) -> RadialResult:
    """
    ⟨e^{-tP₀} f, g⟩ = (2π)^{-n} ∫ F̂ conj(Ĝ) ⟨e^{-tP̂₀(ξ)} h_f, h_g⟩ dξ.

    Raises:
        ValueError: Se t <= 0
        NumericalTrustError: Se la quadratura non converge
    """
    if not t > 0:
        raise ValueError(f"Tempo non valido: {t}")
    hf, hg = f.hermite_vector(trunc), g.hermite_vector(trunc)

    def weight(rho: float) -> complex:
        propagated = linalg.expm(-t * axial_fiber(rho, trunc)) @ hf
        return f.fourier(rho, n) * g.fourier(rho, n) * np.vdot(hg, propagated)

    rho_max = _profile_cutoff(f, g, tau(t))
    value, error, intervals = _integrate(n, weight, rho_max, epsrel)
    rho_eff = math.sqrt(18.42 / (tau(t) + f.width ** 2))
    tail = _tail(linalg.expm(-t * axial_fiber(min(rho_eff, rho_max), trunc)) @ hf)
    return RadialResult(value=value, error=error, intervals=intervals, tail_fraction=tail)


def evolution_pairings(
    n: int,
    f: RadialProfile,
    g: RadialProfile,
    times: Sequence[float],
    trunc: int = DEFAULT_TRUNC,
    epsrel: float = DEFAULT_EPSREL,
    threads: Optional[int] = None
) -> list:
    """``evolution_pairing`` su più tempi, in parallelo e in ordine."""
    return parallel_map(lambda t: evolution_pairing(n, f, g, t, trunc, epsrel), times, threads)


def resolvent_pairing(
    n: int,
    f: RadialProfile,
    g: RadialProfile,
    z: complex,
    trunc: int = DEFAULT_TRUNC,
    epsrel: float = DEFAULT_EPSREL
) -> RadialResult:
    """
    ⟨R₀(z) f, g⟩ per z fuori da [0, ∞) tramite la fibra assiale.

    Raises:
        ValueError: Se z ∈ [0, ∞)
    """
    z = complex(z)
    if z.imag == 0 and z.real >= 0:
        raise ValueError(f"z = {z} sul taglio [0, ∞)")
    hf, hg = f.hermite_vector(trunc), g.hermite_vector(trunc)
    eye = np.eye(trunc)

    def weight(rho: float) -> complex:
        solved = np.linalg.solve(axial_fiber(rho, trunc) - z * eye, hf)
        return f.fourier(rho, n) * g.fourier(rho, n) * np.vdot(hg, solved)

    rho_max = _profile_cutoff(f, g)
    value, error, intervals = _integrate(n, weight, rho_max, epsrel, points=[math.sqrt(abs(z))])
    return RadialResult(value=value, error=error, intervals=intervals, tail_fraction=0.0)


def resolvent_pairings(
    n: int,
    f: RadialProfile,
    g: RadialProfile,
    z_values: Sequence[complex],
    trunc: int = DEFAULT_TRUNC,
    epsrel: float = DEFAULT_EPSREL,
    threads: Optional[int] = None
) -> np.ndarray:
    """``resolvent_pairing`` su più punti z, in parallelo e in ordine."""
    results = parallel_map(lambda z: resolvent_pairing(n, f, g, z, trunc, epsrel), z_values, threads)
    return np.array([r.value for r in results])


def scaled_resolvent_norm(
    n: int,
    u: RadialProfile,
    lam: float,
    trunc: int = DEFAULT_TRUNC,
    epsrel: float = 1e-10
) -> float:
    """
    ‖λ R₀(λ) u‖ per λ < 0, via Plancherel.

    Raises:
        ValueError: Se λ >= 0
    """
    if not lam < 0:
        raise ValueError(f"λ = {lam}: servono valori negativi")
    hu = u.hermite_vector(trunc)
    eye = np.eye(trunc)

    def weight(rho: float) -> complex:
        solved = np.linalg.solve(axial_fiber(rho, trunc) - lam * eye, hu)
        return u.fourier(rho, n) ** 2 * lam * lam * np.vdot(solved, solved).real

    value, _, _ = _integrate(n, weight, _profile_cutoff(u, u), epsrel, points=[math.sqrt(-lam)])
    return math.sqrt(max(value.real, 0.0))


def plain_norm(n: int, u: RadialProfile, epsrel: float = 1e-12) -> float:
    """‖u‖ via Plancherel."""
    h = np.asarray(u.hermite, dtype=float)

    def weight(rho: float) -> complex:
        return u.fourier(rho, n) ** 2 * float(np.dot(h, h))

    value, _, _ = _integrate(n, weight, _profile_cutoff(u, u), epsrel)
    return math.sqrt(value.real)
