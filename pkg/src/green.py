# src/green.py
"""
Nucleo di Green del Laplaciano, A(r; z) = (i/4) (z^{1/2}/(2πr))^{n/2-1} H^{(1)}_{n/2-1}(z^{1/2} r),
ed estrazione numerica dei coefficienti di bassa energia.

Convenzione di ramo: Im z^{1/2} > 0 su ℂ \\ [0, ∞).
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constants import a_leading, c_log, newtonian_coefficient
from .special import hankel_h1

DEFAULT_LAMBDA_MIN = 1e-6
DEFAULT_LAMBDA_MAX = 1e-2
DEFAULT_SAMPLES = 24

# Termini extra oltre l'ordine di interesse, per assorbire le code della serie
EXTRA_TERMS = 2
LOG_TERMS = 3


def principal_sqrt(z: complex) -> complex:
    """z^{1/2} con Im > 0 (z fuori da [0, ∞))."""
    root = complex(np.sqrt(complex(z)))
    if root.imag < 0:
        root = -root
    return root


def _check_point(n: int, z: complex, r: float) -> None:
    if n < 2 or int(n) != n:
        raise ValueError(f"Dimensione non valida: {n} (serve n >= 2)")
    if not r > 0:
        raise ValueError(f"Raggio non valido: {r} (serve r > 0)")
    z = complex(z)
    if z.imag == 0 and z.real >= 0:
        raise ValueError(f"z = {z} sul taglio [0, ∞)")


def green_kernel(n: int, z: complex, r: float) -> complex:
    """
    A(r; z) con la convenzione Im z^{1/2} > 0.

    Raises:
        ValueError: Se r <= 0 o z ∈ [0, ∞)
    """
    _check_point(n, z, r)
    nu = n / 2.0 - 1.0
    root = principal_sqrt(z)
    w = root * r
    if nu == 0:
        return 0.25j * hankel_h1(0.0, w)
    return 0.25j * (root / (2.0 * np.pi * r)) ** nu * hankel_h1(nu, w)


def scaled_lstsq(matrix: np.ndarray, rhs: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """
    Minimi quadrati complessi con colonne normalizzate.

    Returns:
        Tuple: (coefficienti, residuo relativo, numero di condizionamento)
    """
    norms = np.linalg.norm(matrix, axis=0)
    norms[norms == 0] = 1.0
    scaled = matrix / norms
    solution, *_ = np.linalg.lstsq(scaled, rhs, rcond=None)
    coeffs = solution / norms
    residual = float(np.linalg.norm(matrix @ coeffs - rhs) / np.linalg.norm(rhs))
    return coeffs, residual, float(np.linalg.cond(scaled))


@dataclass
class GreenExpansion:
    """Coefficienti di bassa energia stimati da un fit, con riferimenti in forma chiusa."""

    dim: int
    parity: str
    fit_window: Tuple[float, float]
    r_probe: float
    coeffs: Dict[str, complex] = field(default_factory=dict)
    residual: float = 0.0
    condition: float = 0.0
    references: Dict[str, complex] = field(default_factory=dict)

    def relative_errors(self) -> Dict[str, float]:
        """Errore relativo di ogni coefficiente con riferimento noto."""
        return {
            tag: abs(self.coeffs[tag] - ref) / abs(ref)
            for tag, ref in self.references.items()
            if tag in self.coeffs and ref != 0
        }


def default_lambda_grid(
    lambda_min: float = DEFAULT_LAMBDA_MIN,
    lambda_max: float = DEFAULT_LAMBDA_MAX,
    samples: int = DEFAULT_SAMPLES
) -> np.ndarray:
    """Griglia logaritmica di λ > 0."""
    if not 0 < lambda_min < lambda_max:
        raise ValueError(f"Finestra non valida: [{lambda_min}, {lambda_max}]")
    return np.geomspace(lambda_min, lambda_max, samples)


def _samples(n: int, r: float, grid: np.ndarray) -> np.ndarray:
    return np.array([green_kernel(n, -lam, r) for lam in grid]) * r ** (n - 2)


def expand_green_odd(
    n: int,
    r_probe: float = 1.0,
    lambda_grid: Optional[Sequence[float]] = None
) -> GreenExpansion:
    """
    Fit di r^{n-2} A(r; -λ) = Σ_k a_{n,k} (z^{1/2} r)^k, k = 0..n+2.

    Raises:
        ValueError: Se n non è dispari >= 3
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Dimensione non valida: {n} (serve n dispari >= 3)")
    grid = np.asarray(lambda_grid if lambda_grid is not None else default_lambda_grid(), dtype=float)
    w = 1j * np.sqrt(grid) * r_probe
    degree = n + EXTRA_TERMS
    matrix = np.stack([w ** k for k in range(degree + 1)], axis=1)
    coeffs, residual, condition = scaled_lstsq(matrix, _samples(n, r_probe, grid))
    return GreenExpansion(
        dim=n,
        parity="odd",
        fit_window=(float(grid.min()), float(grid.max())),
        r_probe=r_probe,
        coeffs={f"a{k}": complex(c) for k, c in enumerate(coeffs)},
        residual=residual,
        condition=condition,
        references={
            "a0": newtonian_coefficient(n),
            f"a{n - 2}": a_leading(n),
        },
    )


def expand_green_even(
    n: int,
    r_probe: float = 1.0,
    lambda_grid: Optional[Sequence[float]] = None
) -> GreenExpansion:
    """
    Fit di r^{n-2} A(r; -λ) in potenze (z r²)^k e termini (z r²)^{m+j} ln(-i z^{1/2} r).

    Il fit usa ln z^{1/2}; i coefficienti d_{n,m+j} vengono poi riportati alla
    convenzione ln(-i z^{1/2} r), che li rende indipendenti da r.

    Raises:
        ValueError: Se n non è pari >= 4
    """
    if n < 4 or n % 2 == 1:
        raise ValueError(f"Dimensione non valida: {n} (serve n pari >= 4)")
    grid = np.asarray(lambda_grid if lambda_grid is not None else default_lambda_grid(), dtype=float)
    m = (n - 2) // 2
    z = -grid
    zr2 = z * r_probe ** 2
    log_root = np.log(np.sqrt(grid)) + 0.5j * np.pi
    powers = [zr2 ** k for k in range(m + EXTRA_TERMS + 1)]
    logs = [zr2 ** (m + j) * log_root for j in range(LOG_TERMS)]
    matrix = np.stack(powers + logs, axis=1)
    coeffs, residual, condition = scaled_lstsq(matrix, _samples(n, r_probe, grid))

    npow = len(powers)
    result = {f"d{k}": complex(coeffs[k]) for k in range(npow)}
    shift = np.log(r_probe) - 0.5j * np.pi
    for j in range(LOG_TERMS):
        c = complex(coeffs[npow + j])
        result[f"c{j}"] = c
        if m + j < npow:
            result[f"d{m + j}"] -= c * shift
    return GreenExpansion(
        dim=n,
        parity="even",
        fit_window=(float(grid.min()), float(grid.max())),
        r_probe=r_probe,
        coeffs=result,
        residual=residual,
        condition=condition,
        references={
            "d0": newtonian_coefficient(n),
            "c0": c_log(n),
        },
    )


def expand_green(n: int, r_probe: float = 1.0, lambda_grid: Optional[Sequence[float]] = None) -> GreenExpansion:
    """Dispatch per parità di n."""
    if n % 2:
        return expand_green_odd(n, r_probe, lambda_grid)
    return expand_green_even(n, r_probe, lambda_grid)


def green_derivative_oracle(n: int, r: float = 1.0, h: float = 1e-6) -> complex:
    """
    Stima di (1/r²) d/dz [r^{n-2} A(r; z)] per z → 0⁻ tramite differenze finite.

    La differenza centrata in -2h ha un errore O(√h) dal termine z^{(n-2)/2};
    una estrapolazione di Richardson su h e 4h lo elimina. Confrontabile con
    a_{n,2} (n dispari) o d_{n,1} (n pari >= 6).
    """
    if n < 5:
        raise ValueError(f"Dimensione non valida: {n} (serve n >= 5)")

    def y(z: float) -> complex:
        return green_kernel(n, z, r) * r ** (n - 2)

    def centred(step: float) -> complex:
        return (y(-step) - y(-3.0 * step)) / (2.0 * step)

    return (2.0 * centred(h) - centred(4.0 * h)) / r ** 2


def radial_ode_residual(n: int, z: complex, r: float, h: float = 1e-3) -> float:
    """
    Residuo relativo di u'' + (n-1)/r u' + z u = 0 con stencil a 5 punti.

    Returns:
        float: |residuo| / (|u''| + |(n-1)/r u'| + |z u|)
    """
    if r - 2 * h <= 0:
        raise ValueError(f"Raggio troppo piccolo per lo stencil: r={r}, h={h}")
    u = [green_kernel(n, z, r + k * h) for k in (-2, -1, 0, 1, 2)]
    second = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h * h)
    first = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h)
    terms: List[complex] = [second, (n - 1) / r * first, z * u[2]]
    return float(abs(sum(terms)) / sum(abs(t) for t in terms))
