# src/phase_space.py
"""
Discretizzazione spettrale dello spazio delle fasi: Fourier periodico in x sul
toro [-L, L)^n, Hermite troncato in v.

Layout dei coefficienti: shape (nx,)*n + (nv,)*n, assi di Fourier per primi,
trasformata "ortho" di scipy.fft. Il prodotto scalare discreto è
⟨f, g⟩ = h^n Σ_{x, α} f conj(g), con h = 2L / nx.
"""

import math
import struct
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy import fft, linalg

from .config import NumericalTrustError, log
from .fiber import annihilation_matrix, axis_operator, ladder_matrix, number_matrix
from .reports import atomic_write_bytes

# Frazione dei gradi Hermite più alti monitorata dal guard di coda
TAIL_FRACTION = 0.1
DEFAULT_TAIL_THRESHOLD = 1e-6

# Blocchi di fibra risolti insieme (elementi complessi per chunk)
SOLVE_CHUNK_ENTRIES = 2 ** 22

CHECKPOINT_MAGIC = b"KFPS"
CHECKPOINT_VERSION = 1
CHECKPOINT_HEADER = struct.Struct("<4sIidii")

POTENTIAL_FAMILIES = ("zero", "polynomial-decay", "compact-bump")


# --- griglia e stati ---

@dataclass(frozen=True)
class PhaseGrid:
    """Griglia tensoriale: nx punti di Fourier per asse, nv funzioni di Hermite per asse."""

    dim: int
    box_half_width: float
    nx: int
    nv: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"Dimensione non valida: {self.dim} (ammesse 1, 2, 3)")
        if self.nx < 8 or self.nx & (self.nx - 1):
            raise ValueError(f"nx non valido: {self.nx} (serve potenza di 2 >= 8)")
        if self.nv < 4:
            raise ValueError(f"nv non valido: {self.nv} (serve >= 4)")
        if not self.box_half_width > 0:
            raise ValueError(f"Semi-lato del box non valido: {self.box_half_width}")

    @property
    def dx(self) -> float:
        return 2.0 * self.box_half_width / self.nx

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.dim

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.nx,) * self.dim + (self.nv,) * self.dim

    @property
    def x_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.dim))

    @property
    def v_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.dim, 2 * self.dim))

    @property
    def spectral_gap(self) -> float:
        """(π/L)²: più piccolo |k|² non nullo sul toro."""
        return (np.pi / self.box_half_width) ** 2

    def x_nodes(self) -> np.ndarray:
        return -self.box_half_width + self.dx * np.arange(self.nx)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * fft.fftfreq(self.nx, d=self.dx)

    def derivative_wavenumbers(self) -> np.ndarray:
        """Numeri d'onda per la derivata: il modo di Nyquist è azzerato."""
        k = self.wavenumbers()
        k[self.nx // 2] = 0.0
        return k

    def x_mesh(self) -> List[np.ndarray]:
        nodes = self.x_nodes()
        return np.meshgrid(*([nodes] * self.dim), indexing="ij")

    def x_broadcast(self, values: np.ndarray) -> np.ndarray:
        """Aggiunge assi unitari per le velocità."""
        return values.reshape(values.shape + (1,) * self.dim)

    def axis_broadcast(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Vettore 1D sull'asse ``axis`` (fra i 2n), unitario sugli altri."""
        shape = [1] * (2 * self.dim)
        shape[axis] = values.size
        return values.reshape(shape)


def _to_physical(coeffs: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    return fft.ifftn(coeffs, axes=grid.x_axes, norm="ortho")


def _to_coeffs(values: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    return fft.fftn(values, axes=grid.x_axes, norm="ortho")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Stato discreto: coefficienti Fourier × Hermite su una ``PhaseGrid``."""

    grid: PhaseGrid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != self.grid.shape:
            raise ValueError(f"Shape {coeffs.shape} incompatibile con la griglia {self.grid.shape}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, grid: PhaseGrid) -> 'StateVector':
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_physical(cls, grid: PhaseGrid, values: np.ndarray) -> 'StateVector':
        """Da valori sui nodi x (× coefficienti Hermite) a coefficienti."""
        return cls(grid, _to_coeffs(np.asarray(values, dtype=complex), grid))

    @classmethod
    def from_vector(cls, grid: PhaseGrid, vector: np.ndarray) -> 'StateVector':
        return cls(grid, np.asarray(vector).reshape(grid.shape))

    def physical(self) -> np.ndarray:
        return _to_physical(self.coeffs, self.grid)

    def vector(self) -> np.ndarray:
        return self.coeffs.ravel()

    def inner(self, other: 'StateVector') -> complex:
        """⟨self, other⟩ = h^n Σ self conj(other)."""
        self._check(other)
        return complex(self.grid.cell_volume * np.vdot(other.coeffs, self.coeffs))

    def norm(self) -> float:
        return float(math.sqrt(self.grid.cell_volume) * np.linalg.norm(self.coeffs))

    def _check(self, other: 'StateVector') -> None:
        if other.grid != self.grid:
            raise ValueError("Stati su griglie diverse")

    def __add__(self, other: 'StateVector') -> 'StateVector':
        self._check(other)
        return StateVector(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: 'StateVector') -> 'StateVector':
        self._check(other)
        return StateVector(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> 'StateVector':
        return StateVector(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> 'StateVector':
        return StateVector(self.grid, -self.coeffs)


def make_state(grid: PhaseGrid, x_values: np.ndarray, v_coeffs: np.ndarray) -> StateVector:
    """Stato prodotto f(x) ⊗ Σ_α c_α φ_α(v)."""
    x_values = np.asarray(x_values, dtype=complex)
    v_coeffs = np.asarray(v_coeffs, dtype=complex)
    if x_values.shape != (grid.nx,) * grid.dim or v_coeffs.shape != (grid.nv,) * grid.dim:
        raise ValueError("Profili incompatibili con la griglia")
    return StateVector.from_physical(grid, np.multiply.outer(x_values, v_coeffs))


def hermite_unit(grid: PhaseGrid, alpha: Sequence[int] = ()) -> np.ndarray:
    """Coefficienti Hermite di φ_α (α = 0 se vuoto)."""
    alpha = tuple(alpha) or (0,) * grid.dim
    out = np.zeros((grid.nv,) * grid.dim, dtype=complex)
    out[alpha] = 1.0
    return out


def gaussian_packet(
    grid: PhaseGrid,
    width: float = 1.0,
    center: Sequence[float] = (),
    alpha: Sequence[int] = (),
    amplitude: float = 1.0
) -> StateVector:
    """Pacchetto A exp(-|x - x₀|²/(2σ²)) ⊗ φ_α(v)."""
    mesh = grid.x_mesh()
    center = np.asarray(center or (0.0,) * grid.dim, dtype=float)
    r2 = sum((m - c) ** 2 for m, c in zip(mesh, center))
    return make_state(grid, amplitude * np.exp(-r2 / (2.0 * width ** 2)), hermite_unit(grid, alpha))


def odd_packet(grid: PhaseGrid, width: float = 1.0) -> StateVector:
    """x₁ exp(-|x|²/(2σ²)) ⊗ ψ₀: ⟨f, 𝔐⟩ = 0 per potenziali pari in x₁."""
    mesh = grid.x_mesh()
    r2 = sum(m * m for m in mesh)
    return make_state(grid, mesh[0] * np.exp(-r2 / (2.0 * width ** 2)), hermite_unit(grid))


def parseval_gap(state: StateVector) -> float:
    """Scarto relativo fra ‖coefficienti‖² e ‖valori fisici‖²."""
    coeff_energy = float(np.sum(np.abs(state.coeffs) ** 2))
    phys_energy = float(np.sum(np.abs(state.physical()) ** 2))
    if coeff_energy == 0:
        return 0.0
    return abs(coeff_energy - phys_energy) / coeff_energy


# --- potenziali ---

@dataclass(frozen=True)
class PotentialSpec:
    """
    Famiglia di potenziali lisci e decrescenti.

    - zero
    - polynomial-decay: V = c (1 + |x - x₀|²)^{-ρ/2}
    - compact-bump: V = c exp(1 - 1/(1 - |x - x₀|²/R²)) per |x - x₀| < R
    """

    family: str = "zero"
    amplitude: float = 0.0
    decay_rho: float = 1.0
    center: Tuple[float, ...] = ()
    radius: float = 2.0

    def __post_init__(self):
        if self.family not in POTENTIAL_FAMILIES:
            raise ValueError(f"Famiglia di potenziale sconosciuta: {self.family}")
        if not np.isfinite(self.amplitude):
            raise ValueError(f"Ampiezza non valida: {self.amplitude}")
        if self.family != "zero" and not self.decay_rho > 0:
            raise ValueError(
                f"rho={self.decay_rho}: il potenziale deve soddisfare "
                "|V(x)| + <x>|∇V(x)| <= C <x>^(-rho) con rho > 0"
            )
        if self.family == "compact-bump" and not self.radius > 0:
            raise ValueError(f"Raggio del bump non valido: {self.radius}")

    @property
    def is_zero(self) -> bool:
        return self.family == "zero" or self.amplitude == 0.0

    def center_for(self, dim: int) -> np.ndarray:
        if not self.center:
            return np.zeros(dim)
        if len(self.center) == 1:
            return np.full(dim, self.center[0])
        if len(self.center) != dim:
            raise ValueError(f"Centro con {len(self.center)} componenti, attese {dim}")
        return np.asarray(self.center, dtype=float)

    def evaluate(self, mesh: Sequence[np.ndarray]) -> Tuple[np.ndarray, List[np.ndarray]]:
        """
        Valori di V e delle componenti di ∇V sui punti ``mesh``.

        Returns:
            Tuple: (V, [∂_1 V, ..., ∂_n V])
        """
        dim = len(mesh)
        shape = np.shape(mesh[0])
        if self.is_zero:
            return np.zeros(shape), [np.zeros(shape) for _ in range(dim)]
        center = self.center_for(dim)
        offsets = [np.asarray(m, dtype=float) - c for m, c in zip(mesh, center)]
        r2 = sum(o * o for o in offsets)
        if self.family == "polynomial-decay":
            base = 1.0 + r2
            values = self.amplitude * base ** (-self.decay_rho / 2.0)
            factor = -self.decay_rho * values / base
            return values, [factor * o for o in offsets]
        q = r2 / self.radius ** 2
        inside = q < 1.0
        values = np.zeros(shape)
        factor = np.zeros(shape)
        gap = 1.0 - q[inside]
        values[inside] = self.amplitude * np.exp(1.0 - 1.0 / gap)
        factor[inside] = -values[inside] * 2.0 / (self.radius ** 2 * gap ** 2)
        return values, [factor * o for o in offsets]


class PotentialFunctions(NamedTuple):
    """Chiusure V(mesh) e ∇V(mesh) di un PotentialSpec."""

    value: Callable[[Sequence[np.ndarray]], np.ndarray]
    gradient: Callable[[Sequence[np.ndarray]], List[np.ndarray]]


def make_potential(spec: PotentialSpec) -> PotentialFunctions:
    """
    Valutatori di V e ∇V sui punti di una mesh (una coordinata per array).

    La validazione dei parametri avviene alla costruzione di ``spec``.
    """
    def value(mesh: Sequence[np.ndarray]) -> np.ndarray:
        return spec.evaluate(mesh)[0]

    def gradient(mesh: Sequence[np.ndarray]) -> List[np.ndarray]:
        return spec.evaluate(mesh)[1]

    return PotentialFunctions(value=value, gradient=gradient)


def decay_constant(spec: PotentialSpec, dim: int, extent: float = 200.0, samples: int = 4001) -> float:
    """
    Stima numerica di sup_x <x>^ρ (|V| + <x>|∇V|) lungo assi e diagonale.

    Una costante finita certifica il vincolo di decadimento sul dominio campionato.
    """
    radii = np.concatenate([-np.geomspace(extent, 1e-3, samples // 2), [0.0],
                            np.geomspace(1e-3, extent, samples // 2)])
    potential = make_potential(spec)
    directions = [np.eye(dim)[j] for j in range(dim)] + [np.ones(dim) / math.sqrt(dim)]
    best = 0.0
    for direction in directions:
        points = [radii * d for d in direction]
        values, grad = potential.value(points), potential.gradient(points)
        bracket = np.sqrt(1.0 + sum(p * p for p in points))
        grad_norm = np.sqrt(sum(g * g for g in grad))
        weight = bracket ** spec.decay_rho
        best = max(best, float(np.max(weight * (np.abs(values) + bracket * grad_norm))))
    return best


# --- pesi e operatore Λ ---

@dataclass(frozen=True)
class WeightSpec:
    """Peso 𝓗^{r,s}: ⟨x⟩^s Λ^r."""

    r: float = 0.0
    s: float = 0.0


@lru_cache(maxsize=32)
def _oscillator_eigh(nv: int) -> Tuple[np.ndarray, np.ndarray]:
    """Autodecomposizione di -∂_v² + v² = (5/4)(2N+1) + (3/4)(a² + a*²) troncato."""
    lower = annihilation_matrix(nv)
    square = lower @ lower
    matrix = 1.25 * (2.0 * number_matrix(nv) + np.eye(nv)) + 0.75 * (square + square.T)
    return linalg.eigh(matrix)


def _velocity_transform(coeffs: np.ndarray, grid: PhaseGrid, basis: np.ndarray) -> np.ndarray:
    """Applica ``basis`` lungo ogni asse di velocità."""
    out = coeffs
    for axis in grid.v_axes:
        out = np.moveaxis(np.tensordot(basis, out, axes=(1, axis)), 0, axis)
    return out


def apply_lambda_power(state: StateVector, r: float, base: float = 2.0, include_x: bool = True) -> StateVector:
    """
    (base + ⟨D_x⟩^{2/3} + Σ_j (-∂_{v_j}² + v_j²))^{r/2} applicato a uno stato.

    Con base=2 e include_x=True è Λ^r; con base=1 e include_x=False è la
    potenza dell'oscillatore in velocità.
    """
    if r == 0:
        return state
    grid = state.grid
    mu, basis = _oscillator_eigh(grid.nv)
    symbol = np.full(grid.shape, float(base))
    if include_x:
        k2 = sum(grid.axis_broadcast(grid.wavenumbers(), j) ** 2 for j in grid.x_axes)
        symbol = symbol + (1.0 + k2) ** (1.0 / 3.0)
    for axis in grid.v_axes:
        symbol = symbol + grid.axis_broadcast(mu, axis)
    rotated = _velocity_transform(state.coeffs, grid, basis.T)
    return StateVector(grid, _velocity_transform(rotated * symbol ** (r / 2.0), grid, basis))


def _bracket_x(grid: PhaseGrid, s: float) -> np.ndarray:
    r2 = sum(m * m for m in grid.x_mesh())
    return grid.x_broadcast((1.0 + r2) ** (s / 2.0))


def weighted_pair(f: StateVector, g: StateVector, weight: WeightSpec = WeightSpec()) -> complex:
    """⟨⟨x⟩^s Λ^r f, g⟩ sul dominio fondamentale."""
    f._check(g)
    lifted = apply_lambda_power(f, weight.r)
    if weight.s == 0:
        return lifted.inner(g)
    values = lifted.physical() * _bracket_x(f.grid, weight.s)
    return complex(f.grid.cell_volume * np.vdot(g.physical(), values))


def weighted_norm(f: StateVector, weight: WeightSpec = WeightSpec()) -> float:
    """‖⟨x⟩^s Λ^r f‖."""
    lifted = apply_lambda_power(f, weight.r)
    if weight.s == 0:
        return lifted.norm()
    values = lifted.physical() * _bracket_x(f.grid, weight.s)
    return float(math.sqrt(f.grid.cell_volume) * np.linalg.norm(values))


def velocity_smoothing_norm(state: StateVector) -> float:
    """‖(1 - Δ_v + |v|²)^{1/2} u‖."""
    return apply_lambda_power(state, 1.0, base=1.0, include_x=False).norm()


# --- blocchi di fibra liberi ---

class FreeFiberBlocks:
    """
    P₀ sul toro è diagonale a blocchi nei modi di Fourier: P̂₀(k) = N + i Σ k_j S_j.

    Risolvente ed esponenziale liberi si calcolano blocco per blocco.
    """

    def __init__(self, grid: PhaseGrid):
        self.grid = grid
        n, nv = grid.dim, grid.nv
        kd = grid.derivative_wavenumbers()
        mesh = np.meshgrid(*([kd] * n), indexing="ij")
        self.kvecs = np.stack([m.ravel() for m in mesh], axis=-1)
        self.mode_count = self.kvecs.shape[0]
        self.block_size = nv ** n
        self._number = sum(axis_operator(number_matrix(nv), n, j) for j in range(n))
        self._ladders = [axis_operator(ladder_matrix(nv), n, j) for j in range(n)]
        self.chunk = max(1, SOLVE_CHUNK_ENTRIES // (self.block_size ** 2))

    def blocks(self, start: int, stop: int) -> np.ndarray:
        """Blocchi P̂₀(k) per i modi [start, stop), shape (m, D, D)."""
        k = self.kvecs[start:stop]
        out = np.broadcast_to(self._number, (stop - start,) + self._number.shape).astype(complex)
        for j, ladder in enumerate(self._ladders):
            out = out + 1j * k[:, j, None, None] * ladder[None]
        return out

    def _flat(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs.reshape(self.mode_count, self.block_size)

    def solve(self, z: complex, coeffs: np.ndarray) -> np.ndarray:
        """(P₀ - z)^{-1} coeffs."""
        rhs = self._flat(coeffs)
        out = np.empty_like(rhs, dtype=complex)
        eye = np.eye(self.block_size)
        for start in range(0, self.mode_count, self.chunk):
            stop = min(self.mode_count, start + self.chunk)
            mats = self.blocks(start, stop) - z * eye
            out[start:stop] = np.linalg.solve(mats, rhs[start:stop, :, None])[..., 0]
        return out.reshape(coeffs.shape)

    def resolvent(self, z: complex) -> 'FreeResolvent':
        return FreeResolvent(self, z)

    def propagate(self, t: float, coeffs: np.ndarray) -> np.ndarray:
        """e^{-t P₀} coeffs, esatto blocco per blocco."""
        rhs = self._flat(coeffs)
        out = np.empty_like(rhs, dtype=complex)
        for start in range(0, self.mode_count, self.chunk):
            stop = min(self.mode_count, start + self.chunk)
            props = linalg.expm(-t * self.blocks(start, stop))
            out[start:stop] = np.einsum("kij,kj->ki", props, rhs[start:stop])
        return out.reshape(coeffs.shape)


class FreeResolvent:
    """(P₀ - z)^{-1} a z fisso; le inverse dei blocchi sono memorizzate se piccole."""

    def __init__(self, blocks: FreeFiberBlocks, z: complex):
        self.blocks = blocks
        self.z = complex(z)
        self._inverses = None
        if blocks.mode_count * blocks.block_size ** 2 <= SOLVE_CHUNK_ENTRIES:
            mats = blocks.blocks(0, blocks.mode_count) - self.z * np.eye(blocks.block_size)
            self._inverses = np.linalg.inv(mats)

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        if self._inverses is None:
            return self.blocks.solve(self.z, coeffs)
        flat = self.blocks._flat(coeffs)
        return np.einsum("kij,kj->ki", self._inverses, flat).reshape(coeffs.shape)


# --- operatore completo ---

class PhaseOperator:
    """
    P = P₀ + W sulla griglia, con W = -∇V(x)·∂_v.

    P₀ agisce nello spazio dei coefficienti (numeri d'onda con Nyquist azzerato),
    W in x fisico.
    """

    def __init__(self, grid: PhaseGrid, potential: PotentialSpec = PotentialSpec()):
        self.grid = grid
        self.potential = potential
        n = grid.dim
        self._root = np.sqrt(np.arange(1, grid.nv, dtype=float))
        kd = grid.derivative_wavenumbers()
        self._ik = [1j * grid.axis_broadcast(kd, j) for j in range(n)]
        levels = np.arange(grid.nv, dtype=float)
        self._number = sum(grid.axis_broadcast(levels, n + j) for j in range(n))
        values, grad = potential.evaluate(grid.x_mesh())
        self.potential_values = values
        self._grad = [grid.x_broadcast(g) for g in grad]
        self.has_potential = any(np.any(g != 0) for g in grad)
        self.grad_max = max(float(np.max(np.abs(g))) for g in grad)

    @cached_property
    def free(self) -> FreeFiberBlocks:
        return FreeFiberBlocks(self.grid)

    # ladder lungo l'asse di velocità j
    def _shifted(self, coeffs: np.ndarray, j: int, up: bool) -> np.ndarray:
        axis = self.grid.dim + j
        out = np.zeros_like(coeffs)
        head = [slice(None)] * coeffs.ndim
        tail = [slice(None)] * coeffs.ndim
        head[axis], tail[axis] = slice(1, None), slice(None, -1)
        root = self.grid.axis_broadcast(self._root, axis)
        if up:
            out[tuple(head)] = root * coeffs[tuple(tail)]
        else:
            out[tuple(tail)] = root * coeffs[tuple(head)]
        return out

    def multiply_v(self, coeffs: np.ndarray, j: int) -> np.ndarray:
        """v_j · = a_j + a_j*."""
        return self._shifted(coeffs, j, up=False) + self._shifted(coeffs, j, up=True)

    def derivative_v(self, coeffs: np.ndarray, j: int) -> np.ndarray:
        """∂_{v_j} = (a_j - a_j*)/2."""
        return 0.5 * (self._shifted(coeffs, j, up=False) - self._shifted(coeffs, j, up=True))

    def apply_free(self, state: StateVector) -> StateVector:
        c = state.coeffs
        out = self._number * c
        for j, ik in enumerate(self._ik):
            out = out + ik * self.multiply_v(c, j)
        return StateVector(self.grid, out)

    def apply_potential(self, state: StateVector) -> StateVector:
        if not self.has_potential:
            return StateVector.zeros(self.grid)
        values = state.physical()
        out = np.zeros_like(values)
        for j, grad in enumerate(self._grad):
            out -= grad * self.derivative_v(values, j)
        return StateVector.from_physical(self.grid, out)

    def apply(self, state: StateVector) -> StateVector:
        if not self.has_potential:
            return self.apply_free(state)
        return self.apply_free(state) + self.apply_potential(state)

    def apply_adjoint(self, state: StateVector) -> StateVector:
        """P* = J P J con J il flip v → -v."""
        return velocity_flip(self.apply(velocity_flip(state)))

    def matvec(self, vector: np.ndarray) -> np.ndarray:
        return self.apply(StateVector.from_vector(self.grid, vector)).vector()

    def norm_bound(self) -> float:
        """Maggiorazione analitica di ‖P‖ sulla griglia."""
        n, nv = self.grid.dim, self.grid.nv
        k_max = float(np.max(np.abs(self.grid.derivative_wavenumbers())))
        return n * (nv - 1) + n * k_max * 2.0 * math.sqrt(nv - 1) + n * self.grad_max * math.sqrt(nv - 1)


@lru_cache(maxsize=8)
def phase_operator(grid: PhaseGrid, potential: PotentialSpec = PotentialSpec()) -> PhaseOperator:
    """Operatore memorizzato per (griglia, potenziale)."""
    return PhaseOperator(grid, potential)


def apply_P0(state: StateVector) -> StateVector:
    return phase_operator(state.grid).apply_free(state)


def apply_W(state: StateVector, potential: PotentialSpec) -> StateVector:
    return phase_operator(state.grid, potential).apply_potential(state)


def apply_P(state: StateVector, potential: PotentialSpec = PotentialSpec()) -> StateVector:
    return phase_operator(state.grid, potential).apply(state)


def apply_P0_adjoint(state: StateVector) -> StateVector:
    return phase_operator(state.grid).apply_adjoint(state)


def velocity_flip(state: StateVector) -> StateVector:
    """(J f)(x, v) = f(x, -v): segno (-1)^{|α|} sui coefficienti."""
    grid = state.grid
    parity = np.ones((1,) * grid.dim + (grid.nv,) * grid.dim)
    for axis in grid.v_axes:
        parity = parity * grid.axis_broadcast((-1.0) ** np.arange(grid.nv), axis)
    return StateVector(grid, state.coeffs * parity)


def maxwell_state(grid: PhaseGrid, potential: PotentialSpec = PotentialSpec()) -> StateVector:
    """𝔐 = e^{-V/2} ψ₀(v): solo il coefficiente α = 0 è non nullo."""
    values, _ = potential.evaluate(grid.x_mesh())
    return make_state(grid, np.exp(-values / 2.0), hermite_unit(grid))


def maxwell_residual(grid: PhaseGrid, potential: PotentialSpec = PotentialSpec()) -> float:
    """‖P𝔐‖ / ‖𝔐‖: nullo a meno della risoluzione spettrale."""
    state = maxwell_state(grid, potential)
    return apply_P(state, potential).norm() / state.norm()


def deflate_maxwell(state: StateVector, potential: PotentialSpec = PotentialSpec()) -> StateVector:
    """Rimuove la componente lungo 𝔐: f - 𝔐 ⟨f, 𝔐⟩ / ‖𝔐‖²."""
    maxwell = maxwell_state(state.grid, potential)
    return state - maxwell * (state.inner(maxwell) / maxwell.inner(maxwell).real)


def zero_mode_norm(state: StateVector) -> float:
    """Norma della componente k = 0, α = 0 (il limite di -λR₀(λ) sul toro)."""
    grid = state.grid
    index = (0,) * (2 * grid.dim)
    return float(math.sqrt(grid.cell_volume) * abs(state.coeffs[index]))


# --- diagnostica ---

def hermite_tail_fraction(state: StateVector) -> float:
    """Frazione di ‖u‖² nei gradi Hermite più alti (ultimo 10% per asse)."""
    grid = state.grid
    energy = np.sum(np.abs(state.coeffs) ** 2, axis=grid.x_axes)
    total = float(np.sum(energy))
    if total == 0:
        return 0.0
    cut = grid.nv - max(1, math.ceil(TAIL_FRACTION * grid.nv))
    mask = np.zeros(energy.shape, dtype=bool)
    for index in np.indices(energy.shape):
        mask |= index >= cut
    return float(np.sum(energy[mask]) / total)


def check_tail(state: StateVector, threshold: float = DEFAULT_TAIL_THRESHOLD, strict: bool = True) -> float:
    """
    Verifica il guard di coda Hermite.

    Returns:
        float: Frazione di coda misurata

    Raises:
        NumericalTrustError: Se la coda supera la soglia e ``strict`` è True
    """
    fraction = hermite_tail_fraction(state)
    if fraction > threshold:
        message = f"Coda Hermite {fraction:.2e} oltre la soglia {threshold:.0e} (nv={state.grid.nv})"
        if strict:
            raise NumericalTrustError(message)
        log(f"⚠️ {message}")
    return fraction


def subelliptic_ratio(states: Sequence[StateVector]) -> float:
    """
    max_f (‖Δ_v f‖ + ‖|v|² f‖ + ‖⟨D_x⟩^{2/3} f‖) / (‖P₀ f‖ + ‖f‖).

    Stime limitate su famiglie lisce indicano la regolarizzazione ipoellittica.
    """
    best = 0.0
    for state in states:
        op = phase_operator(state.grid)
        grid = state.grid
        c = state.coeffs
        laplace = sum(op.derivative_v(op.derivative_v(c, j), j) for j in range(grid.dim))
        square = sum(op.multiply_v(op.multiply_v(c, j), j) for j in range(grid.dim))
        k2 = sum(grid.axis_broadcast(grid.wavenumbers(), j) ** 2 for j in grid.x_axes)
        smooth = (1.0 + k2) ** (1.0 / 3.0) * c
        scale = math.sqrt(grid.cell_volume)
        top = scale * (np.linalg.norm(laplace) + np.linalg.norm(square) + np.linalg.norm(smooth))
        bottom = op.apply_free(state).norm() + state.norm()
        best = max(best, float(top / bottom))
    return best


# --- checkpoint ---

def save_state(path: str, state: StateVector) -> None:
    """
    Checkpoint binario: header ``<4sIidii`` (magic, versione, n, L, nx, nv)
    seguito dai coefficienti complex128 little-endian in ordine row-major.
    """
    grid = state.grid
    header = CHECKPOINT_HEADER.pack(
        CHECKPOINT_MAGIC, CHECKPOINT_VERSION, grid.dim, grid.box_half_width, grid.nx, grid.nv
    )
    payload = np.ascontiguousarray(state.coeffs, dtype="<c16").tobytes()
    atomic_write_bytes(path, header + payload)


def load_state(path: str) -> StateVector:
    """
    Rilegge un checkpoint scritto da ``save_state``.

    Raises:
        ValueError: Se magic, versione o lunghezza non sono validi
    """
    with open(path, "rb") as handle:
        data = handle.read()
    if len(data) < CHECKPOINT_HEADER.size:
        raise ValueError(f"Checkpoint troncato: {path}")
    magic, version, dim, box, nx, nv = CHECKPOINT_HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"Checkpoint non valido (magic {magic!r}): {path}")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"Versione checkpoint non supportata: {version}")
    grid = PhaseGrid(dim, box, nx, nv)
    expected = int(np.prod(grid.shape)) * 16
    if len(data) - CHECKPOINT_HEADER.size != expected:
        raise ValueError(f"Checkpoint troncato: attesi {expected} byte di payload")
    coeffs = np.frombuffer(data, dtype="<c16", offset=CHECKPOINT_HEADER.size)
    return StateVector(grid, coeffs.reshape(grid.shape).astype(complex))
