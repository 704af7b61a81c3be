# src/special.py
"""
Funzioni speciali: polinomi e funzioni di Hermite, quadratura di Gauss-Hermite,
funzioni di Hankel del primo tipo, doppio fattoriale.

Convenzione Hermite "probabilisti": F_{j+1}(s) = s F_j(s) - j F_{j-1}(s), con
funzioni normalizzate φ_j(s) = (j! √(2π))^{-1/2} F_j(s) e^{-s²/4}.
"""

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import special as sp

ArrayLike = Union[complex, float, np.ndarray]

# Oltre questa soglia la crescita di e^{-s²/4} rende la valutazione inaffidabile
HERMITE_MAX_IMAG = 8.0

# hermegauss resta accurato fino a qualche centinaio di nodi
GAUSS_HERMITE_MAX_NODES = 400

# Sotto max(HANKEL_SWITCH, 2ν) si usa AMOS (serie/ricorrenza), sopra l'espansione asintotica
HANKEL_SWITCH = 10.0
HANKEL_MAX_TERMS = 60


@dataclass(frozen=True, eq=False)
class HermiteBasis1D:
    """Base di Hermite troncata con regola di quadratura associata (peso e^{-s²/2})."""

    max_degree: int
    quad_nodes: np.ndarray
    quad_weights: np.ndarray

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Σ_i w_i values[i, ...] lungo il primo asse."""
        return np.tensordot(self.quad_weights, values, axes=(0, 0))


def _check_degree(j: int) -> None:
    if int(j) != j or j < 0:
        raise ValueError(f"Grado Hermite non valido: {j} (serve intero >= 0)")


def hermite_poly(j: int, s: ArrayLike) -> ArrayLike:
    """
    Polinomio di Hermite (convenzione probabilisti) F_j(s).

    Args:
        j: Grado (>= 0)
        s: Argomento reale o complesso (scalare o array)

    Returns:
        Valore di F_j(s) con lo stesso shape di ``s``
    """
    _check_degree(j)
    s = np.asarray(s, dtype=complex)
    prev = np.ones_like(s)
    if j == 0:
        return prev
    cur = s.copy()
    for k in range(1, j):
        prev, cur = cur, s * cur - k * prev
    return cur


def _check_imag(s: np.ndarray) -> None:
    if np.any(np.abs(np.imag(s)) > HERMITE_MAX_IMAG):
        raise ValueError(
            f"|Im s| > {HERMITE_MAX_IMAG}: valutazione Hermite fuori dalla finestra di validità"
        )


def hermite_table(max_degree: int, s: ArrayLike, weighted: bool = True) -> np.ndarray:
    """
    Tabella φ_0..φ_{J-1} (o la sola parte polinomiale normalizzata) in ``s``.

    Con ``weighted=False`` restituisce q_j = φ_j e^{s²/4}, utile per integrandi
    in cui la gaussiana è già assorbita dal peso di quadratura.

    Args:
        max_degree: Numero J di funzioni
        s: Punti di valutazione
        weighted: Se True include il fattore e^{-s²/4}

    Returns:
        np.ndarray: Shape (J,) + shape(s), complesso
    """
    if max_degree < 1:
        raise ValueError(f"Numero di funzioni Hermite non valido: {max_degree}")
    s = np.asarray(s, dtype=complex)
    _check_imag(s)
    table = np.empty((max_degree,) + s.shape, dtype=complex)
    head = (2.0 * np.pi) ** -0.25
    table[0] = head * np.exp(-s * s / 4.0) if weighted else head
    if max_degree > 1:
        table[1] = s * table[0]
    for j in range(1, max_degree - 1):
        table[j + 1] = (s * table[j] - math.sqrt(j) * table[j - 1]) / math.sqrt(j + 1)
    return table


def hermite_fn(j: int, s: ArrayLike) -> ArrayLike:
    """
    Funzione di Hermite normalizzata φ_j(s), anche per s complesso.

    La ricorrenza normalizzata evita i fattoriali espliciti.

    Raises:
        ValueError: Se |Im s| > HERMITE_MAX_IMAG o j non valido
    """
    _check_degree(j)
    return hermite_table(j + 1, s)[j]


def gauss_hermite(m: int) -> HermiteBasis1D:
    """
    Regola di Gauss-Hermite a m nodi per il peso e^{-s²/2}.

    Integra esattamente i polinomi di grado <= 2m-1.

    Raises:
        ValueError: Se m < 1 o m supera GAUSS_HERMITE_MAX_NODES
    """
    if m < 1 or m > GAUSS_HERMITE_MAX_NODES:
        raise ValueError(
            f"Numero di nodi Gauss-Hermite non valido: {m} (ammessi 1..{GAUSS_HERMITE_MAX_NODES})"
        )
    nodes, weights = hermegauss(m)
    return HermiteBasis1D(max_degree=m, quad_nodes=nodes, quad_weights=weights)


def double_factorial(k: int) -> int:
    """k!! con la convenzione (-1)!! = 0!! = 1."""
    if int(k) != k or k < -1:
        raise ValueError(f"Doppio fattoriale non definito per {k}")
    return math.prod(range(int(k), 0, -2))


def _check_order(nu: float) -> None:
    if nu < 0 or abs(2 * nu - round(2 * nu)) > 1e-12:
        raise ValueError(f"Ordine di Hankel non valido: {nu} (serve intero o semi-intero >= 0)")


def _is_half_integer(nu: float) -> bool:
    return abs(nu - math.floor(nu) - 0.5) < 1e-12


def hankel_switch(nu: float) -> float:
    """Modulo oltre il quale si passa al ramo asintotico."""
    return max(HANKEL_SWITCH, 2.0 * nu)


def _hankel_asymptotic(nu: float, w: complex) -> complex:
    """
    Espansione asintotica di Hankel, troncata al termine minimo.

    Per ν semi-intero la serie termina ed è esatta per ogni w.
    """
    mu = 4.0 * nu * nu
    terminating = _is_half_integer(nu)
    term = 1.0 + 0.0j
    total = term
    prev = 1.0
    for k in range(1, HANKEL_MAX_TERMS):
        term = term * 1j * (mu - (2 * k - 1) ** 2) / (8.0 * k * w)
        mag = abs(term)
        if mag == 0.0:
            break
        if terminating:
            total += term
            continue
        if mag > prev:
            break
        total += term
        if mag < 1e-17 * abs(total):
            break
        prev = mag
    phase = w - nu * np.pi / 2.0 - np.pi / 4.0
    return np.sqrt(2.0 / (np.pi * w)) * np.exp(1j * phase) * total


def hankel_h1(nu: float, w: complex) -> complex:
    """
    Funzione di Hankel del primo tipo H^{(1)}_ν(w), ramo principale.

    Per ordini semi-interi usa la forma chiusa (serie terminante); altrimenti
    AMOS sotto ``hankel_switch(nu)`` e l'espansione asintotica sopra.

    Args:
        nu: Ordine intero o semi-intero >= 0
        w: Argomento complesso con Im w >= 0, w != 0

    Raises:
        ValueError: Se w = 0, Im w < 0 o l'ordine non è ammesso
    """
    _check_order(nu)
    w = complex(w)
    if w == 0:
        raise ValueError("Hankel H1 non definita in w = 0")
    if w.imag < 0:
        raise ValueError(f"Argomento con Im w < 0 non ammesso: {w}")
    if _is_half_integer(nu) or abs(w) >= hankel_switch(nu):
        return complex(_hankel_asymptotic(nu, w))
    return complex(sp.hankel1(nu, w))


def bessel_jy(nu: float, w: complex) -> Tuple[complex, complex]:
    """Coppia (J_ν(w), Y_ν(w)) da scipy, per i controlli di consistenza su H1."""
    _check_order(nu)
    return complex(sp.jv(nu, w)), complex(sp.yv(nu, w))
