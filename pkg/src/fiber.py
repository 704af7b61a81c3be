# src/fiber.py
"""
Operatore di fibra P̂₀(ξ) = N + i Σ_j ξ_j S_j sulla base di Hermite troncata.

Gli autovalori sono ℓ + |ξ|² con autofunzioni traslate φ_α(v + 2iξ); le
proiezioni di Riesz si costruiscono in forma chiusa tramite la coppia
biortogonale {φ_α(v + 2iξ)}, {φ_α(v - 2iξ)}.
"""

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from .config import NumericalTrustError
from .special import hermite_table, gauss_hermite

# Frazione massima della dimensione troncata di cui ci si fida degli autovalori
MAX_SPECTRUM_FRACTION = 0.25

# Distanza minima da un autovalore troncato per il risolvente denso
RESOLVENT_POLE_GUARD = 1e-8

# Soglia sul residuo di idempotenza di una proiezione di Riesz
IDEMPOTENCY_TOL = 1e-8

XiLike = Union[float, Sequence[float]]


def ladder_matrix(trunc: int) -> np.ndarray:
    """S: moltiplicazione per v, tridiagonale con sovradiagonali √(j+1)."""
    off = np.sqrt(np.arange(1, trunc, dtype=float))
    return np.diag(off, 1) + np.diag(off, -1)


def annihilation_matrix(trunc: int) -> np.ndarray:
    """a: (a c)_j = √(j+1) c_{j+1}."""
    return np.diag(np.sqrt(np.arange(1, trunc, dtype=float)), 1)


def number_matrix(trunc: int) -> np.ndarray:
    """N = a*a, diagonale 0..J-1."""
    return np.diag(np.arange(trunc, dtype=float))


def axis_operator(block: np.ndarray, dim: int, axis: int) -> np.ndarray:
    """I ⊗ .. ⊗ block ⊗ .. ⊗ I, ordine dei multi-indici row-major (α_1 più lento)."""
    trunc = block.shape[0]
    eye = np.eye(trunc)
    out = np.ones((1, 1))
    for j in range(dim):
        out = np.kron(out, block if j == axis else eye)
    return out


def _as_xi(dim: int, xi: XiLike) -> Tuple[float, ...]:
    vec = np.atleast_1d(np.asarray(xi, dtype=float))
    if vec.size == 1 and dim > 1:
        vec = np.concatenate([vec, np.zeros(dim - 1)])
    if vec.size != dim:
        raise ValueError(f"ξ ha {vec.size} componenti, attese {dim}")
    return tuple(float(x) for x in vec)


@dataclass(frozen=True, eq=False)
class FiberOperator:
    """Matrice troncata di P̂₀(ξ) di dimensione J^n."""

    dim: int
    xi: Tuple[float, ...]
    trunc: int
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def xi_norm_sq(self) -> float:
        return float(np.dot(self.xi, self.xi))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Autovalori troncati ordinati per parte reale (poi immaginaria)."""
        try:
            values = linalg.eigvals(self.matrix)
        except linalg.LinAlgError as exc:
            raise NumericalTrustError(f"Autovalori di fibra non convergenti: {exc}")
        return values[np.lexsort((values.imag, values.real))]

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return self.matrix @ coeffs


def assemble_fiber(dim: int, xi: XiLike, trunc: int) -> FiberOperator:
    """
    Assembla P̂₀(ξ) = Σ_j (N_j + i ξ_j S_j) in base prodotto.

    Args:
        dim: Dimensione n >= 1
        xi: Frequenza (vettore di n componenti, o modulo lungo il primo asse)
        trunc: Troncamento per asse J >= 2

    Raises:
        ValueError: Se J < 2 o ξ ha dimensione errata
    """
    if dim < 1:
        raise ValueError(f"Dimensione non valida: {dim}")
    if trunc < 2:
        raise ValueError(f"Troncamento Hermite non valido: {trunc} (serve J >= 2)")
    xi_vec = _as_xi(dim, xi)
    number = number_matrix(trunc)
    ladder = ladder_matrix(trunc)
    matrix = np.zeros((trunc ** dim, trunc ** dim), dtype=complex)
    for axis, xi_j in enumerate(xi_vec):
        matrix += axis_operator(number + 1j * xi_j * ladder, dim, axis)
    return FiberOperator(dim=dim, xi=xi_vec, trunc=trunc, matrix=matrix)


def fiber_spectrum(op: FiberOperator, count: int) -> np.ndarray:
    """
    I primi ``count`` autovalori (per parte reale) dell'operatore troncato.

    Raises:
        ValueError: Se count supera MAX_SPECTRUM_FRACTION della dimensione
    """
    if count < 1 or count > MAX_SPECTRUM_FRACTION * op.size:
        raise ValueError(
            f"count={count} fuori dalla regione fidata (max {int(MAX_SPECTRUM_FRACTION * op.size)})"
        )
    return op.eigenvalues[:count].copy()


def fiber_propagate(op: FiberOperator, t: float, coeffs: np.ndarray) -> np.ndarray:
    """e^{-t P̂₀(ξ)} c tramite esponenziale di matrice densa."""
    if not t > 0:
        raise ValueError(f"Tempo non valido: {t} (serve t > 0)")
    return linalg.expm(-t * op.matrix) @ coeffs


def fiber_resolvent(op: FiberOperator, z: complex, coeffs: np.ndarray) -> np.ndarray:
    """
    (P̂₀(ξ) - z)^{-1} c tramite fattorizzazione densa.

    Raises:
        ValueError: Se z dista meno di RESOLVENT_POLE_GUARD da un autovalore troncato
    """
    distance = np.min(np.abs(op.eigenvalues - z))
    if distance < RESOLVENT_POLE_GUARD:
        raise ValueError(f"z = {z} troppo vicino a un autovalore (distanza {distance:.1e})")
    return linalg.solve(op.matrix - z * np.eye(op.size), coeffs)


# --- proiezioni di Riesz ---

def shifted_hermite_coefficients(xi: float, trunc: int) -> np.ndarray:
    """
    C[β, α] = ∫ φ_β(v) φ_α(v + 2iξ) dv, cioè i coefficienti delle autofunzioni traslate.

    Integrando q_β(v) q_α(v+2iξ) e^{ξ²} e^{-iξv} contro il peso e^{-v²/2}.
    """
    rule = gauss_hermite(min(2 * trunc + 40, 400))
    v = rule.quad_nodes
    q_plain = hermite_table(trunc, v, weighted=False)
    q_shift = hermite_table(trunc, v + 2j * xi, weighted=False)
    phase = np.exp(xi * xi - 1j * xi * v) * rule.quad_weights
    return np.einsum("bk,ak,k->ba", q_plain, q_shift, phase)


@dataclass(frozen=True, eq=False)
class RieszProjection:
    """Proiezione spettrale Π_ℓ(ξ) sull'autospazio ℓ + |ξ|²."""

    level: int
    xi: Tuple[float, ...]
    matrix: np.ndarray
    pairing: str
    idempotency_residual: float

    @property
    def eigenvalue(self) -> float:
        return self.level + float(np.dot(self.xi, self.xi))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return self.matrix @ coeffs


def _level_vectors(columns: Sequence[np.ndarray], level: int) -> np.ndarray:
    """Colonne c_α = ⊗_j C_j[:, α_j] per |α| = ℓ, impilate come righe."""
    dim = len(columns)
    trunc = columns[0].shape[0]
    vectors = []
    for alpha in itertools.product(range(level + 1), repeat=dim):
        if sum(alpha) != level:
            continue
        vec = np.ones(1, dtype=complex)
        for axis, a in enumerate(alpha):
            vec = np.kron(vec, columns[axis][:, a])
        vectors.append(vec)
    return np.array(vectors)


def riesz_projection(op: FiberOperator, level: int) -> RieszProjection:
    """
    Π_ℓ(ξ) = Σ_{|α|=ℓ} ⟨ψ_α^{-ξ}, ·⟩ ψ_α^{ξ} in forma matriciale.

    Il pairing sesquilineare con ψ^{-ξ} equivale a quello bilineare con ψ^{ξ}
    (Π = Σ c cᵀ). Se il controllo di idempotenza fallisce si prova l'altra
    convenzione (Σ c c^H) e si tiene quella con residuo minore.

    Raises:
        ValueError: Se ℓ < 0
        NumericalTrustError: Se nessuna convenzione supera il controllo
    """
    if level < 0 or level >= op.trunc:
        raise ValueError(f"Livello non valido: {level} (ammessi 0..{op.trunc - 1})")
    columns = [shifted_hermite_coefficients(x, op.trunc) for x in op.xi]
    vectors = _level_vectors(columns, level)

    candidates = {
        "conjugate": vectors.T @ vectors,
        "bilinear": vectors.T @ vectors.conj(),
    }
    best = None
    for pairing, matrix in candidates.items():
        scale = max(np.linalg.norm(matrix), 1.0)
        residual = float(np.linalg.norm(matrix @ matrix - matrix) / scale)
        if best is None or residual < best[2]:
            best = (pairing, matrix, residual)
        if residual <= IDEMPOTENCY_TOL:
            break
    pairing, matrix, residual = best
    if residual > IDEMPOTENCY_TOL:
        raise NumericalTrustError(
            f"Proiezione di Riesz ℓ={level} mal condizionata: residuo di idempotenza {residual:.1e}"
        )
    return RieszProjection(
        level=level, xi=op.xi, matrix=matrix, pairing=pairing, idempotency_residual=residual
    )


def projection_overlap(first: RieszProjection, second: RieszProjection) -> float:
    """
    ‖Π_ℓ Π_m‖ / (‖Π_ℓ‖ ‖Π_m‖) in norma di Frobenius.

    Le norme delle proiezioni crescono come e^{|ξ|²}: il prodotto assoluto
    tocca il limite della doppia precisione già a |ξ| = 1.5.
    """
    scale = np.linalg.norm(first.matrix) * np.linalg.norm(second.matrix)
    return float(np.linalg.norm(first.matrix @ second.matrix) / scale)


# --- simbolo del termine di soglia ---

@dataclass(frozen=True)
class CutoffChi:
    """Cutoff liscio: 1 per |ξ|² <= a+3, 0 per |ξ|² >= a+4."""

    a: float = 0.5

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        r2 = np.sum(np.atleast_2d(np.asarray(xi, dtype=float)) ** 2, axis=-1)
        inner, outer = self.a + 3.0, self.a + 4.0
        s = np.clip((outer - r2) / (outer - inner), 0.0, 1.0)
        return _smooth_step(s)


def _smooth_step(s: np.ndarray) -> np.ndarray:
    def bump(x):
        out = np.zeros_like(x)
        mask = x > 0
        out[mask] = np.exp(-1.0 / x[mask])
        return out
    up, down = bump(s), bump(1.0 - s)
    return up / (up + down)


def b0_symbol(
    v: np.ndarray,
    xi: np.ndarray,
    eta: np.ndarray,
    chi: Callable[[np.ndarray], np.ndarray] = CutoffChi()
) -> np.ndarray:
    """
    b₀(v, ξ, η) = 2^{n/2} χ(ξ) exp(-|v|² - |η|² + 2i v·ξ + 2|ξ|²).

    Gli argomenti sono array con ultima dimensione n.
    """
    v, xi, eta = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (v, xi, eta))
    n = v.shape[-1]
    exponent = (
        -np.sum(v * v, axis=-1) - np.sum(eta * eta, axis=-1)
        + 2j * np.sum(v * xi, axis=-1) + 2.0 * np.sum(xi * xi, axis=-1)
    )
    return 2.0 ** (n / 2.0) * chi(xi) * np.exp(exponent)


# --- oracoli ---

def exact_free_pairing(xi: XiLike, t: float) -> float:
    """⟨e^{-tP̂₀(ξ)}ψ₀, ψ₀⟩ = exp(-|ξ|² (t - 1 + e^{-t}))."""
    xi_sq = float(np.sum(np.asarray(xi, dtype=float) ** 2))
    return float(np.exp(-xi_sq * (t + np.expm1(-t))))


def accretivity_gap(op: FiberOperator, coeffs: np.ndarray) -> float:
    """|Re⟨P̂₀ c, c⟩ - Σ_j ‖a_j c‖²|: nullo per l'identità di accretività."""
    real_part = np.vdot(coeffs, op.apply(coeffs)).real
    lower = annihilation_matrix(op.trunc)
    damping = sum(
        np.linalg.norm(axis_operator(lower, op.dim, axis) @ coeffs) ** 2
        for axis in range(op.dim)
    )
    return float(abs(real_part - damping))


def numerical_range_box(op: FiberOperator) -> Tuple[float, float, float, float]:
    """Rettangolo (re_min, re_max, im_min, im_max) che contiene il rango numerico."""
    hermitian = (op.matrix + op.matrix.conj().T) / 2.0
    skew = (op.matrix - op.matrix.conj().T) / 2j
    re = linalg.eigvalsh(hermitian)
    im = linalg.eigvalsh(skew)
    return float(re[0]), float(re[-1]), float(im[0]), float(im[-1])


def fiber_resolvent_norm(op: FiberOperator, z: complex) -> float:
    """‖(P̂₀(ξ) - z)^{-1}‖ = 1 / σ_min(P̂₀(ξ) - z)."""
    singular = linalg.svdvals(op.matrix - z * np.eye(op.size))
    return float(1.0 / singular[-1])


def box_distance(box: Tuple[float, float, float, float], z: complex) -> float:
    """Distanza di z dal rettangolo (0 se interno)."""
    re_min, re_max, im_min, im_max = box
    dx = max(re_min - z.real, 0.0, z.real - re_max)
    dy = max(im_min - z.imag, 0.0, z.imag - im_max)
    return float(np.hypot(dx, dy))
