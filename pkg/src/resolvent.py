# src/resolvent.py
"""
Risolvente R(z) = (P - z)^{-1}: soluzioni GMRES sulla griglia, continuazione
verso l'asse reale (limiting absorption), fit di bassa energia e scansione ad
alta energia.

Sulla griglia si risolve (I + W R₀(z)) y = f con R₀(z) esatto per blocchi di
Fourier (precondizionamento destro) e si pone u = R₀(z) y.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .config import NumericalTrustError, log
from .constants import a_leading, c_log
from .green import scaled_lstsq
from .phase_space import (
    PhaseGrid,
    PotentialSpec,
    StateVector,
    deflate_maxwell,
    hermite_unit,
    make_state,
    maxwell_residual,
    maxwell_state,
    phase_operator,
    velocity_smoothing_norm,
    zero_mode_norm,
)
from .pool import parallel_map
from .radial import RadialProfile, resolvent_pairings, scaled_resolvent_norm

DEFAULT_TOL = 1e-10
GMRES_RESTART = 60
GMRES_MAXITER = 200

DEFAULT_FIT_MIN = 1e-4
DEFAULT_FIT_MAX = 5e-2
DEFAULT_FIT_SAMPLES = 16

# Residuo massimo ammesso per l'identità di soglia
THRESHOLD_RESOLUTION = 1e-8

# Punti entro la risoluzione della griglia necessari per fidarsi delle pendenze
HIGH_ENERGY_MIN_RESOLVED = 5

SPECIAL_TERMS = 2
EXTRA_POWERS = 2


def _check_z(z: complex) -> complex:
    z = complex(z)
    if z.imag == 0 and z.real >= 0:
        raise ValueError(f"z = {z} sul taglio [0, ∞): serve un offset ε esplicito")
    return z


# --- soluzioni sulla griglia ---

@dataclass
class ResolventSolve:
    """Soluzione GMRES con diagnostica."""

    state: StateVector
    z: complex
    iterations: int
    residual: float


def solve_resolvent_report(
    f: StateVector,
    z: complex,
    tol: float = DEFAULT_TOL,
    potential: PotentialSpec = PotentialSpec(),
    restart: int = GMRES_RESTART,
    maxiter: int = GMRES_MAXITER
) -> ResolventSolve:
    """
    Risolve (P - z) u = f e restituisce soluzione e diagnostica.

    Raises:
        ValueError: Se z ∈ [0, ∞)
        NumericalTrustError: Se GMRES non raggiunge la tolleranza
    """
    z = _check_z(z)
    op = phase_operator(f.grid, potential)
    free = op.free.resolvent(z)
    if not op.has_potential:
        state = StateVector(f.grid, free(f.coeffs))
        return ResolventSolve(state=state, z=z, iterations=0, residual=0.0)

    grid = f.grid
    size = f.coeffs.size

    def matvec(y: np.ndarray) -> np.ndarray:
        lifted = StateVector(grid, free(y.reshape(grid.shape)))
        return y + op.apply_potential(lifted).vector()

    counter = {"iterations": 0}

    def callback(_residual):
        counter["iterations"] += 1

    system = LinearOperator((size, size), matvec=matvec, dtype=complex)
    rhs = f.vector()
    y, info = gmres(
        system, rhs, rtol=tol, atol=0.0, restart=restart, maxiter=maxiter,
        callback=callback, callback_type="pr_norm"
    )
    state = StateVector(grid, free(y.reshape(grid.shape)))
    residual = float(np.linalg.norm(matvec(y) - rhs) / np.linalg.norm(rhs))
    if info != 0 or residual > 10.0 * tol:
        raise NumericalTrustError(
            f"GMRES non convergente a z={z:.3g}: residuo {residual:.1e} dopo {counter['iterations']} iterazioni"
        )
    return ResolventSolve(state=state, z=z, iterations=counter["iterations"], residual=residual)


def solve_resolvent(
    f: StateVector,
    z: complex,
    tol: float = DEFAULT_TOL,
    potential: PotentialSpec = PotentialSpec(),
    **options
) -> StateVector:
    """u = R(z) f con ‖(P - z)u - f‖ <= tol ‖f‖."""
    return solve_resolvent_report(f, z, tol, potential, **options).state


def free_resolvent_apply(f: StateVector, z: complex) -> StateVector:
    """R₀(z) f esatto, blocco per blocco nei modi di Fourier."""
    z = _check_z(z)
    return StateVector(f.grid, phase_operator(f.grid).free.solve(z, f.coeffs))


# --- identità di soglia e decadimento di λR₀(λ) ---

@dataclass
class ThresholdReport:
    """Residui di (1 + R₀(λ)W + λR₀(λ))𝔐 = 0 e stabilizzazione verso 𝔐₀."""

    lambdas: np.ndarray
    residuals: np.ndarray
    stabilization: np.ndarray
    floor: float
    maxwell_residual: float
    resolution_ok: bool


def threshold_identity_check(
    grid: PhaseGrid,
    potential: PotentialSpec,
    lambdas: Sequence[float],
    strict: bool = True
) -> ThresholdReport:
    """
    Verifica l'identità di soglia per λ < 0 con R₀ esatto per blocchi.

    Sul toro (1 + R₀W)𝔐 tende alla componente k = 0 di 𝔐, non a 𝔐₀:
    lo scarto residuo è riportato come ``floor``.

    Raises:
        ValueError: Se qualche λ >= 0
        NumericalTrustError: Se ‖P𝔐‖ supera la risoluzione e ``strict`` è True
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas >= 0):
        raise ValueError("Servono λ negativi")
    op = phase_operator(grid, potential)
    maxwell = maxwell_state(grid, potential)
    free_maxwell = make_state(grid, np.ones((grid.nx,) * grid.dim), hermite_unit(grid))
    pushed = op.apply_potential(maxwell)
    norm = maxwell.norm()

    residuals, stabilization = [], []
    for lam in lambdas:
        resolvent = op.free.resolvent(lam)
        corrected = maxwell + StateVector(grid, resolvent(pushed.coeffs))
        identity = corrected + StateVector(grid, lam * resolvent(maxwell.coeffs))
        residuals.append(identity.norm() / norm)
        stabilization.append((corrected - free_maxwell).norm() / free_maxwell.norm())

    mean_part = StateVector(grid, np.zeros(grid.shape, dtype=complex))
    mean_part.coeffs[(0,) * (2 * grid.dim)] = maxwell.coeffs[(0,) * (2 * grid.dim)]
    floor = (mean_part - free_maxwell).norm() / free_maxwell.norm()

    resolution = maxwell_residual(grid, potential)
    resolution_ok = resolution <= THRESHOLD_RESOLUTION
    if not resolution_ok:
        message = f"Risoluzione insufficiente: ‖P𝔐‖/‖𝔐‖ = {resolution:.1e}"
        if strict:
            raise NumericalTrustError(message)
        log(f"⚠️ {message}")
    return ThresholdReport(
        lambdas=lambdas,
        residuals=np.array(residuals),
        stabilization=np.array(stabilization),
        floor=float(floor),
        maxwell_residual=resolution,
        resolution_ok=resolution_ok,
    )


@dataclass
class VanishingTrace:
    """‖λR₀(λ)u‖ al decrescere di |λ|."""

    lambdas: np.ndarray
    norms: np.ndarray
    floor: float
    route: str

    @property
    def decade_ratios(self) -> np.ndarray:
        return self.norms[1:] / self.norms[:-1]


def lambda_vanishing_check(u: StateVector, lambdas: Sequence[float]) -> VanishingTrace:
    """‖λR₀(λ)u‖ sulla griglia; sul toro satura alla norma del modo k = 0."""
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas >= 0):
        raise ValueError("Servono λ negativi")
    norms = [(lam * free_resolvent_apply(u, lam)).norm() for lam in lambdas]
    return VanishingTrace(lambdas=lambdas, norms=np.array(norms), floor=zero_mode_norm(u), route="grid")


def lambda_vanishing_check_radial(
    dim: int,
    u: RadialProfile,
    lambdas: Sequence[float],
    threads: Optional[int] = None
) -> VanishingTrace:
    """‖λR₀(λ)u‖ su ℝⁿ via Plancherel: tende a zero."""
    lambdas = np.asarray(lambdas, dtype=float)
    norms = parallel_map(lambda lam: scaled_resolvent_norm(dim, u, lam), lambdas, threads)
    return VanishingTrace(lambdas=lambdas, norms=np.array(norms), floor=0.0, route="radial")


# --- fit di bassa energia ---

@dataclass
class ResolventFit:
    """Fit di ⟨R(z) f, g⟩ vicino a z = 0."""

    dim: int
    route: str
    branch: str
    model: List[str]
    z_samples: np.ndarray
    pairings: np.ndarray
    coefficients: Dict[str, complex]
    residual: float
    condition: float
    leading_special: Optional[complex] = None
    predicted_special: Optional[complex] = None

    @property
    def lambda_samples(self) -> np.ndarray:
        return np.abs(self.z_samples)

    @property
    def special_error(self) -> Optional[float]:
        if self.leading_special is None or not self.predicted_special:
            return None
        return abs(self.leading_special - self.predicted_special) / abs(self.predicted_special)


def default_fit_grid(
    lambda_min: float = DEFAULT_FIT_MIN,
    lambda_max: float = DEFAULT_FIT_MAX,
    samples: int = DEFAULT_FIT_SAMPLES
) -> np.ndarray:
    if not 0 < lambda_min < lambda_max:
        raise ValueError(f"Finestra non valida: [{lambda_min}, {lambda_max}]")
    return np.geomspace(lambda_min, lambda_max, samples)


def _branch_root(z: np.ndarray, branch: str) -> np.ndarray:
    root = np.sqrt(z.astype(complex))
    root = np.where(root.imag < 0, -root, root)
    if branch == "principal":
        return root
    if branch == "flipped":
        return np.conj(root)
    raise ValueError(f"Ramo sconosciuto: {branch}")


def model_columns(
    dim: int,
    z: np.ndarray,
    branch: str = "principal",
    model: str = "threshold",
    extra: Sequence[str] = ()
) -> Tuple[np.ndarray, List[str]]:
    """
    Colonne del modello di bassa energia.

    - threshold: potenze intere z^k (k = 0..m+2) e termini speciali
      z^{(n-2)/2 + j} (n dispari) o z^{m+j} ln z^{1/2} (n pari), j = 0, 1
    - analytic: sole potenze intere
    ``extra`` può contenere "inverse" per una colonna z^{-1}.
    """
    z = np.asarray(z, dtype=complex)
    m = (dim - 2) // 2
    top = max(m, 0) + EXTRA_POWERS
    columns, tags = [], []
    for k in range(top + 1):
        columns.append(z ** k)
        tags.append(f"z^{k}")
    if model == "threshold":
        root = _branch_root(z, branch)
        for j in range(SPECIAL_TERMS):
            if dim % 2:
                power = dim - 2 + 2 * j
                columns.append(root ** power)
                tags.append(f"s{j}")
            else:
                columns.append(z ** (m + j) * np.log(root))
                tags.append(f"s{j}")
    elif model != "analytic":
        raise ValueError(f"Modello sconosciuto: {model}")
    if "inverse" in extra:
        columns.append(1.0 / z)
        tags.append("z^-1")
    return np.stack(columns, axis=1), tags


def predicted_special(dim: int, maxwell_product: complex) -> Optional[complex]:
    """a_{n,n-2} ⟨f,𝔐₀⟩⟨𝔐₀,g⟩ (n dispari) o c_{n,0} ⟨f,𝔐₀⟩⟨𝔐₀,g⟩ (n pari)."""
    if dim >= 3 and dim % 2:
        return a_leading(dim) * maxwell_product
    if dim >= 4 and dim % 2 == 0:
        return c_log(dim) * maxwell_product
    return None


def fit_pairings(
    dim: int,
    z: np.ndarray,
    pairings: np.ndarray,
    branch: str = "principal",
    model: str = "threshold",
    extra: Sequence[str] = (),
    route: str = "radial",
    maxwell_product: Optional[complex] = None
) -> ResolventFit:
    """Fit ai minimi quadrati di pairing già calcolati."""
    matrix, tags = model_columns(dim, z, branch, model, extra)
    coeffs, residual, condition = scaled_lstsq(matrix, np.asarray(pairings, dtype=complex))
    coefficients = {tag: complex(c) for tag, c in zip(tags, coeffs)}
    predicted = predicted_special(dim, maxwell_product) if maxwell_product is not None else None
    return ResolventFit(
        dim=dim,
        route=route,
        branch=branch,
        model=tags,
        z_samples=np.asarray(z, dtype=complex),
        pairings=np.asarray(pairings, dtype=complex),
        coefficients=coefficients,
        residual=residual,
        condition=condition,
        leading_special=coefficients.get("s0"),
        predicted_special=predicted,
    )


def ray_samples(lambda_grid: Sequence[float], angles: Sequence[float] = (math.pi,)) -> np.ndarray:
    """Punti z = λ e^{iθ}; θ = π dà esattamente z = -λ."""
    out = []
    for theta in angles:
        for lam in lambda_grid:
            out.append(complex(-lam, 0.0) if theta == math.pi else lam * complex(math.cos(theta), math.sin(theta)))
    return np.array(out)


def fit_low_energy_radial(
    dim: int,
    f: RadialProfile,
    g: RadialProfile,
    lambda_grid: Optional[Sequence[float]] = None,
    branch: str = "principal",
    angles: Sequence[float] = (math.pi,),
    trunc: int = 32,
    threads: Optional[int] = None
) -> ResolventFit:
    """
    Fit di bassa energia per il risolvente libero su ℝⁿ (via radiale).

    Raises:
        ValueError: Se dim < 1 o la griglia non è valida
    """
    if dim < 1:
        raise ValueError(f"Dimensione non valida: {dim}")
    grid = np.asarray(lambda_grid if lambda_grid is not None else default_fit_grid(), dtype=float)
    z = ray_samples(grid, angles)
    log(f"🚀 Fit di bassa energia n={dim}: {z.size} campioni su {len(angles)} raggi")
    pairings = resolvent_pairings(dim, f, g, z, trunc=trunc, threads=threads)
    product = f.maxwell_pairing(dim) * g.maxwell_pairing(dim)
    fit = fit_pairings(dim, z, pairings, branch=branch, route="radial", maxwell_product=product)
    if fit.special_error is not None:
        log(f"✅ Termine speciale {fit.leading_special:.6g} (errore relativo {fit.special_error:.2e})")
    return fit


def fit_low_energy_grid(
    f: StateVector,
    g: StateVector,
    lambda_grid: Optional[Sequence[float]] = None,
    potential: PotentialSpec = PotentialSpec(),
    tol: float = DEFAULT_TOL,
    deflate: bool = True,
    extra: Sequence[str] = ("inverse",),
    threads: Optional[int] = None
) -> ResolventFit:
    """
    Fit di bassa energia sul toro, con deflazione dello stato stazionario 𝔐.

    Dopo la deflazione il pairing è analitico per |λ| sotto il gap (π/L)²:
    il modello usa sole potenze intere e una colonna z^{-1} di controllo.

    Raises:
        ValueError: Se la finestra supera il gap del toro
    """
    grid_points = np.asarray(lambda_grid if lambda_grid is not None else default_fit_grid(), dtype=float)
    if grid_points.max() >= f.grid.spectral_gap:
        raise ValueError(
            f"λ_max={grid_points.max():.3g} oltre il gap del toro {f.grid.spectral_gap:.3g}"
        )
    source = deflate_maxwell(f, potential) if deflate else f
    z = -grid_points.astype(complex)
    solves = parallel_map(lambda zz: solve_resolvent(source, zz, tol, potential), z, threads)
    pairings = np.array([u.inner(g) for u in solves])
    return fit_pairings(f.grid.dim, z, pairings, model="analytic", extra=extra, route="grid")


def fit_low_energy(f, g, lambda_grid=None, dim: Optional[int] = None, **options) -> ResolventFit:
    """Dispatch: profili radiali su ℝⁿ oppure stati sul toro."""
    if isinstance(f, RadialProfile):
        if dim is None:
            raise ValueError("La via radiale richiede la dimensione")
        return fit_low_energy_radial(dim, f, g, lambda_grid, **options)
    return fit_low_energy_grid(f, g, lambda_grid, **options)


@dataclass
class BranchCheck:
    """Residui del fit con il ramo corretto e con quello ribaltato."""

    principal_residual: float
    flipped_residual: float

    @property
    def inflation(self) -> float:
        return self.flipped_residual / max(self.principal_residual, 1e-300)


def branch_flip_inflation(
    dim: int,
    f: RadialProfile,
    g: RadialProfile,
    lambda_grid: Optional[Sequence[float]] = None,
    angles: Sequence[float] = (math.pi, 0.75 * math.pi),
    threads: Optional[int] = None
) -> BranchCheck:
    """
    Rifà il fit su due raggi con z^{1/2} coniugato: un ramo sbagliato gonfia il residuo.
    """
    grid = np.asarray(lambda_grid if lambda_grid is not None else default_fit_grid(), dtype=float)
    z = ray_samples(grid, angles)
    pairings = resolvent_pairings(dim, f, g, z, threads=threads)
    good = fit_pairings(dim, z, pairings, branch="principal")
    bad = fit_pairings(dim, z, pairings, branch="flipped")
    return BranchCheck(principal_residual=good.residual, flipped_residual=bad.residual)


@dataclass
class RankOneCheck:
    """Confronto fra rapporto dei termini speciali e rapporto dei prodotti di Maxwell."""

    special_ratio: complex
    maxwell_ratio: complex

    @property
    def deviation(self) -> float:
        return abs(self.special_ratio - self.maxwell_ratio) / abs(self.maxwell_ratio)


def rank_one_ratio_check(
    dim: int,
    pairs: Sequence[Tuple[RadialProfile, RadialProfile]],
    lambda_grid: Optional[Sequence[float]] = None,
    threads: Optional[int] = None
) -> RankOneCheck:
    """Il termine speciale è di rango uno: il rapporto segue ⟨f,𝔐₀⟩⟨𝔐₀,g⟩."""
    if len(pairs) != 2:
        raise ValueError("Servono esattamente due coppie (f, g)")
    fits = [fit_low_energy_radial(dim, f, g, lambda_grid, threads=threads) for f, g in pairs]
    products = [f.maxwell_pairing(dim) * g.maxwell_pairing(dim) for f, g in pairs]
    return RankOneCheck(
        special_ratio=fits[0].leading_special / fits[1].leading_special,
        maxwell_ratio=products[0] / products[1],
    )


def fit_window_stability(
    dim: int,
    f: RadialProfile,
    g: RadialProfile,
    lambda_grid: Optional[Sequence[float]] = None,
    threads: Optional[int] = None
) -> float:
    """Variazione relativa del termine speciale dimezzando λ_max."""
    grid = np.asarray(lambda_grid if lambda_grid is not None else default_fit_grid(), dtype=float)
    full = fit_low_energy_radial(dim, f, g, grid, threads=threads)
    narrow = fit_low_energy_radial(dim, f, g, np.geomspace(grid.min(), grid.max() / 2.0, grid.size), threads=threads)
    return abs(full.leading_special - narrow.leading_special) / abs(full.leading_special)


# --- limiting absorption ---

@dataclass
class LapTrace:
    """Traccia di ⟨R(λ + iε) f, g⟩ per ε decrescente."""

    lam: float
    eps: np.ndarray
    pairings: np.ndarray
    norms: np.ndarray
    cauchy: np.ndarray
    monotone: bool
    extrapolated: complex
    rate: float
    symmetry_gap: float
    torus_spacing: float
    iterations: List[int] = field(default_factory=list)

    COLUMNS = ["eps", "pairing_re", "pairing_im", "norm", "cauchy"]

    def rows(self) -> List[list]:
        cauchy = np.concatenate([[float("nan")], self.cauchy])
        return [
            [float(e), float(p.real), float(p.imag), float(n), float(c)]
            for e, p, n, c in zip(self.eps, self.pairings, self.norms, cauchy)
        ]


def torus_spacing(grid: PhaseGrid, lam: float) -> float:
    """Distanza fra livelli liberi k² = (πm/L)² vicino a λ."""
    step = math.pi / grid.box_half_width
    m = max(1, int(round(math.sqrt(max(lam, 0.0)) / step)))
    return (step * (m + 1)) ** 2 - (step * m) ** 2


def lap_continuation(
    f: StateVector,
    g: StateVector,
    lam: float,
    eps_schedule: Sequence[float],
    potential: PotentialSpec = PotentialSpec(),
    tol: float = DEFAULT_TOL,
    strict: bool = True,
    threads: Optional[int] = None
) -> LapTrace:
    """
    ⟨R(λ + iε) f, g⟩ per ε decrescente, con estrapolazione di Richardson.

    Raises:
        ValueError: Se λ <= 0 o la schedule non è decrescente
        NumericalTrustError: Se la traccia diverge e ``strict`` è True
    """
    if not lam > 0:
        raise ValueError(f"λ = {lam}: serve λ > 0")
    eps = np.asarray(eps_schedule, dtype=float)
    if eps.size < 2 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("La schedule di ε deve essere positiva e strettamente decrescente")

    solves = parallel_map(
        lambda e: solve_resolvent_report(f, complex(lam, e), tol, potential), eps, threads
    )
    pairings = np.array([s.state.inner(g) for s in solves])
    norms = np.array([s.state.norm() for s in solves])
    cauchy = np.abs(np.diff(pairings))
    monotone = bool(np.all(np.diff(cauchy) <= 0)) if cauchy.size > 1 else True

    # Richardson lineare in ε sugli ultimi due punti
    e1, e2 = eps[-2], eps[-1]
    p1, p2 = pairings[-2], pairings[-1]
    extrapolated = complex((e1 * p2 - e2 * p1) / (e1 - e2))
    if cauchy.size > 1 and cauchy[-2] > 0 and cauchy[-1] > 0:
        rate = float(math.log(cauchy[-2] / cauchy[-1]) / math.log(eps[-3] / eps[-2]))
    else:
        rate = float("nan")

    mirror = solve_resolvent(f, complex(lam, -eps[-1]), tol, potential).inner(g)
    symmetry_gap = abs(mirror - np.conj(pairings[-1])) / max(abs(pairings[-1]), 1e-300)

    if not monotone:
        message = f"Traccia LAP divergente a λ={lam}: differenze di Cauchy non decrescenti"
        if strict:
            raise NumericalTrustError(message)
        log(f"⚠️ {message}")
    return LapTrace(
        lam=lam,
        eps=eps,
        pairings=pairings,
        norms=norms,
        cauchy=cauchy,
        monotone=monotone,
        extrapolated=extrapolated,
        rate=rate,
        symmetry_gap=float(symmetry_gap),
        torus_spacing=torus_spacing(f.grid, lam),
        iterations=[s.iterations for s in solves],
    )


# --- alta energia ---

@dataclass
class HighEnergyScan:
    """Norme di R(iy) f e del guadagno di regolarità in velocità."""

    y: np.ndarray
    norm_ratios: np.ndarray
    smoothing_ratios: np.ndarray
    resolved: np.ndarray
    norm_slope: float
    smoothing_slope: float

    COLUMNS = ["y", "norm_ratio", "smoothing_ratio", "resolved"]

    @property
    def resolved_count(self) -> int:
        return int(self.resolved.sum())

    @property
    def trusted(self) -> bool:
        """Pendenze stimate su almeno HIGH_ENERGY_MIN_RESOLVED punti risolti."""
        return self.resolved_count >= HIGH_ENERGY_MIN_RESOLVED

    def rows(self) -> List[list]:
        return [
            [float(y), float(a), float(b), bool(r)]
            for y, a, b, r in zip(self.y, self.norm_ratios, self.smoothing_ratios, self.resolved)
        ]


def high_energy_scan(
    f: StateVector,
    y_grid: Sequence[float],
    potential: PotentialSpec = PotentialSpec(),
    tol: float = DEFAULT_TOL,
    threads: Optional[int] = None
) -> HighEnergyScan:
    """
    ‖R(iy) f‖/‖f‖ e ‖(1 - Δ_v + |v|²)^{1/2} R(iy) f‖/‖f‖ per y grande.

    Le pendenze log-log usano solo i punti con y entro la risoluzione della
    griglia (y <= maggiorazione di ‖P‖); gli altri sono marcati.
    """
    y = np.asarray(y_grid, dtype=float)
    if np.any(y <= 0):
        raise ValueError("Servono y > 0")
    op = phase_operator(f.grid, potential)
    base = f.norm()
    solves = parallel_map(lambda yy: solve_resolvent(f, 1j * yy, tol, potential), y, threads)
    norm_ratios = np.array([u.norm() / base for u in solves])
    smoothing = np.array([velocity_smoothing_norm(u) / base for u in solves])
    resolved = y <= op.norm_bound()
    fit_mask = resolved if resolved.sum() >= 2 else np.ones_like(resolved)
    logy = np.log(y[fit_mask])
    norm_slope = float(np.polyfit(logy, np.log(norm_ratios[fit_mask]), 1)[0])
    smoothing_slope = float(np.polyfit(logy, np.log(smoothing[fit_mask]), 1)[0])
    if not resolved.all():
        log(f"⚠️ {int((~resolved).sum())} valori di y oltre la risoluzione della griglia")
    if resolved.sum() < HIGH_ENERGY_MIN_RESOLVED:
        log(f"⚠️ Solo {int(resolved.sum())} punti risolti: pendenze non affidabili (servono {HIGH_ENERGY_MIN_RESOLVED})")
    return HighEnergyScan(
        y=y,
        norm_ratios=norm_ratios,
        smoothing_ratios=smoothing,
        resolved=resolved,
        norm_slope=norm_slope,
        smoothing_slope=smoothing_slope,
    )
