# src/evolve.py
"""
Evoluzione temporale e^{-tP} con esponenziale di Krylov a passo adattivo
(schema Expokit) e scansione del decadimento a tempi lunghi.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg

from .config import NumericalTrustError, log
from .constants import heat_coefficient
from .phase_space import (
    DEFAULT_TAIL_THRESHOLD,
    PotentialSpec,
    StateVector,
    WeightSpec,
    check_tail,
    maxwell_state,
    phase_operator,
    weighted_pair,
)
from .radial import RadialProfile, evolution_pairings

KRYLOV_DIM = 30
BREAKDOWN_TOL = 1e-12
STEP_SAFETY = 0.9
STEP_SLACK = 1.2
MAX_REJECTIONS = 10
MAX_STEPS = 200000

# Frazione di L² oltre la quale le immagini periodiche contaminano il pairing
DEFAULT_WRAP_BETA = 0.05
DEFAULT_WINDOW = (20.0, 100.0)
MIN_WINDOW_DECADES = 0.5
# Sotto questa soglia relativa la proiezione su 𝔐 si considera nulla
MAXWELL_PROJECTION_TOL = 1e-12


@dataclass
class KrylovStats:
    """Statistiche di una chiamata a ``expv``."""

    steps: int = 0
    rejections: int = 0
    error_estimate: float = 0.0
    hump: float = 0.0


def _round_step(step: float) -> float:
    """Arrotonda il passo a 2 cifre significative per eccesso."""
    scale = 10.0 ** (math.floor(math.log10(step)) - 1)
    return math.ceil(step / scale) * scale


def expv(
    t: float,
    matvec: Callable[[np.ndarray], np.ndarray],
    v: np.ndarray,
    anorm: float,
    tol: float = 1e-10,
    m: int = KRYLOV_DIM
) -> Tuple[np.ndarray, KrylovStats]:
    """
    w = e^{tA} v con Arnoldi a passo adattivo.

    L'errore locale stimato è confrontato con ``tol`` relativo alla norma
    iniziale; un passo rifiutato viene ridotto e ritentato.

    Args:
        t: Tempo finale (>= 0)
        matvec: Prodotto A x
        v: Vettore iniziale
        anorm: Stima di ‖A‖ per il primo passo
        tol: Tolleranza relativa
        m: Dimensione dello spazio di Krylov

    Returns:
        Tuple: (w, statistiche)

    Raises:
        NumericalTrustError: Se il passo collassa o i rifiuti si esauriscono
    """
    stats = KrylovStats()
    w = np.array(v, dtype=complex)
    beta = float(np.linalg.norm(w))
    if t == 0 or beta == 0:
        return w, stats
    n = w.size
    m = min(m, n)
    anorm = max(anorm, 1e-300)
    tol_abs = tol * beta
    rndoff = anorm * np.finfo(float).eps
    xm = 1.0 / m
    fact = ((m + 1) / math.e) ** (m + 1) * math.sqrt(2 * math.pi * (m + 1))
    t_new = _round_step((1.0 / anorm) * (fact * tol_abs / (4.0 * beta * anorm)) ** xm)
    t_now = 0.0
    stats.hump = beta

    while t_now < t:
        stats.steps += 1
        if stats.steps > MAX_STEPS:
            raise NumericalTrustError(f"Krylov: superati {MAX_STEPS} passi a t={t_now:.3g}")
        t_step = min(t - t_now, t_new)
        basis = np.zeros((n, m + 1), dtype=complex)
        hess = np.zeros((m + 2, m + 2), dtype=complex)
        basis[:, 0] = w / beta
        happy = False
        size = m
        # STEP 1: Arnoldi
        for j in range(m):
            p = matvec(basis[:, j])
            for i in range(j + 1):
                hess[i, j] = np.vdot(basis[:, i], p)
                p = p - hess[i, j] * basis[:, i]
            s = float(np.linalg.norm(p))
            if s < BREAKDOWN_TOL:
                happy = True
                size = j + 1
                t_step = t - t_now
                break
            hess[j + 1, j] = s
            basis[:, j + 1] = p / s
        avnorm = 0.0
        if not happy:
            hess[m + 1, m] = 1.0
            avnorm = float(np.linalg.norm(matvec(basis[:, m])))

        # STEP 2: stima d'errore con riduzione del passo
        for attempt in range(MAX_REJECTIONS + 1):
            if happy:
                expo = linalg.expm(t_step * hess[:size, :size])
                err_loc = rndoff
                break
            expo = linalg.expm(t_step * hess[:m + 2, :m + 2])
            phi1 = abs(beta * expo[m, 0])
            phi2 = abs(beta * expo[m + 1, 0] * avnorm)
            if phi1 > 10.0 * phi2:
                err_loc, xm = phi2, 1.0 / m
            elif phi1 > phi2:
                err_loc, xm = phi1 * phi2 / (phi1 - phi2), 1.0 / m
            else:
                err_loc, xm = phi1, 1.0 / (m - 1)
            if err_loc <= STEP_SLACK * t_step * tol_abs:
                break
            if attempt == MAX_REJECTIONS:
                raise NumericalTrustError(f"Krylov: passo rifiutato {MAX_REJECTIONS} volte a t={t_now:.3g}")
            t_step = _round_step(STEP_SAFETY * t_step * (t_step * tol_abs / err_loc) ** xm)
            stats.rejections += 1
            log(f"⏳ Retry {attempt + 1}/{MAX_REJECTIONS} passo Krylov ridotto a {t_step:.2e}")
            if t_step < 1e-12 * t:
                raise NumericalTrustError(f"Krylov: passo collassato ({t_step:.1e}) a t={t_now:.3g}")

        # STEP 3: avanzamento
        cols = size if happy else m + 1
        w = basis[:, :cols] @ (beta * expo[:cols, 0])
        beta = float(np.linalg.norm(w))
        stats.hump = max(stats.hump, beta)
        t_now += t_step
        if happy or beta == 0:
            stats.error_estimate += err_loc
            if beta == 0:
                break
            continue
        err_loc = max(err_loc, rndoff)
        t_new = _round_step(STEP_SAFETY * t_step * (t_step * tol_abs / err_loc) ** xm)
        stats.error_estimate += err_loc
    return w, stats


def wrap_time(state: StateVector, wrap_beta: float = DEFAULT_WRAP_BETA) -> float:
    """Tempo massimo β L² prima che il wrap-around del toro conti."""
    return wrap_beta * state.grid.box_half_width ** 2


def propagate_with_stats(
    state: StateVector,
    t: float,
    tol: float = 1e-10,
    potential: PotentialSpec = PotentialSpec(),
    wrap_beta: Optional[float] = DEFAULT_WRAP_BETA,
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    strict: bool = True
) -> Tuple[StateVector, KrylovStats, float]:
    """
    e^{-tP} f con statistiche Krylov e frazione di coda finale.

    Args:
        wrap_beta: Guard t <= β L² (None lo disattiva)

    Raises:
        ValueError: Se t < 0
        NumericalTrustError: Se scatta il guard di wrap-around o di coda
    """
    if t < 0:
        raise ValueError(f"Tempo non valido: {t} (serve t >= 0)")
    if wrap_beta is not None and t > wrap_time(state, wrap_beta):
        raise NumericalTrustError(
            f"t={t:.3g} oltre il limite di wrap-around {wrap_time(state, wrap_beta):.3g} (β={wrap_beta})"
        )
    op = phase_operator(state.grid, potential)
    vector, stats = expv(t, lambda x: -op.matvec(x), state.vector(), op.norm_bound(), tol)
    result = StateVector.from_vector(state.grid, vector)
    tail = check_tail(result, tail_threshold, strict)
    return result, stats, tail


def propagate(
    state: StateVector,
    t: float,
    tol: float = 1e-10,
    potential: PotentialSpec = PotentialSpec(),
    **guards
) -> StateVector:
    """e^{-tP} f sulla griglia (vedi ``propagate_with_stats`` per i guard)."""
    return propagate_with_stats(state, t, tol, potential, **guards)[0]


def free_evolution_exact(state: StateVector, t: float) -> StateVector:
    """e^{-tP₀} f esatto, modo di Fourier per modo di Fourier."""
    if t < 0:
        raise ValueError(f"Tempo non valido: {t}")
    blocks = phase_operator(state.grid).free
    return StateVector(state.grid, blocks.propagate(t, state.coeffs))


# --- scansione del decadimento ---

@dataclass
class DecayReport:
    """Risultato di una scansione del decadimento ⟨S(t) f, g⟩."""

    dim: int
    potential: str
    times: np.ndarray
    pairings: np.ndarray
    fitted_exponent: float
    fitted_amplitude: complex
    predicted_amplitude: complex
    amplitude_ratio: float
    window: Tuple[float, float]
    wrap_guard_ok: bool = True
    tail_ok: bool = True
    envelope_ok: bool = True
    max_tail: float = 0.0
    claim: str = "full"
    route: str = "grid"
    box_half_width: Optional[float] = None
    krylov_steps: List[int] = field(default_factory=list)

    def rows(self) -> List[list]:
        """Righe CSV: t, Re p, Im p, previsione, rapporto."""
        out = []
        for t, p in zip(self.times, self.pairings):
            prediction = self.predicted_amplitude * t ** (-self.dim / 2.0)
            ratio = (p / prediction).real if prediction != 0 else float("nan")
            out.append([float(t), float(p.real), float(p.imag), float(prediction.real), float(ratio)])
        return out

    COLUMNS = ["t", "pairing_re", "pairing_im", "prediction", "ratio"]


def _fit_decay(
    dim: int,
    times: np.ndarray,
    pairings: np.ndarray,
    window: Tuple[float, float],
    predicted: complex
) -> Tuple[float, complex, float, bool]:
    """Fit log-log nella finestra: (esponente, ampiezza, rapporto, inviluppo monotono)."""
    lo, hi = window
    mask = (times >= lo) & (times <= hi)
    if mask.sum() < 2:
        raise ValueError(f"Finestra [{lo:.3g}, {hi:.3g}] con meno di 2 campioni")
    t_fit, p_fit = times[mask], pairings[mask]
    slope, intercept = np.polyfit(np.log(t_fit), np.log(np.abs(p_fit)), 1)
    phase = p_fit[-1] / abs(p_fit[-1]) if abs(p_fit[-1]) > 0 else 1.0
    amplitude = complex(math.exp(intercept) * phase)
    if predicted != 0:
        ratio = float(np.mean((p_fit * t_fit ** (dim / 2.0)) / predicted).real)
    else:
        ratio = float("nan")
    envelope = np.abs(p_fit)
    envelope_ok = bool(np.all(np.diff(envelope) <= 1e-12 * envelope.max()))
    return float(slope), amplitude, ratio, envelope_ok


def _check_window(window: Tuple[float, float]) -> None:
    lo, hi = window
    if not 0 < lo < hi or math.log10(hi / lo) < MIN_WINDOW_DECADES:
        raise ValueError(
            f"Finestra di fit [{lo:.3g}, {hi:.3g}] troppo corta (serve almeno mezza decade)"
        )


def decay_scan(
    f: StateVector,
    g: StateVector,
    times: Sequence[float],
    weight: WeightSpec = WeightSpec(),
    potential: PotentialSpec = PotentialSpec(),
    tol: float = 1e-10,
    wrap_beta: float = DEFAULT_WRAP_BETA,
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    window: Tuple[float, float] = DEFAULT_WINDOW,
    strict: bool = True
) -> DecayReport:
    """
    Scansione di ⟨⟨x⟩^s Λ^r S(t) f, g⟩ su tempi crescenti e fit della legge di potenza.

    L'evoluzione procede in sequenza: ogni tempo riparte dal precedente.

    Raises:
        ValueError: Se la finestra di fit è più corta di mezza decade
        NumericalTrustError: Se scatta un guard (coda Hermite, wrap-around)
    """
    times = np.sort(np.asarray(times, dtype=float))
    if times.size == 0 or times[0] <= 0:
        raise ValueError("Servono tempi positivi")
    grid = f.grid
    t_wrap = wrap_time(f, wrap_beta)
    fit_window = (window[0], min(window[1], t_wrap))
    _check_window(fit_window)

    wrap_ok = bool(times[-1] <= t_wrap)
    if not wrap_ok:
        message = f"Tempi oltre il limite di wrap-around {t_wrap:.3g}"
        if strict:
            raise NumericalTrustError(message)
        log(f"⚠️ {message}: scansione troncata")
        times = times[times <= t_wrap]

    # STEP 1: evoluzione sequenziale
    log(f"🚀 Scansione decadimento n={grid.dim}, {times.size} tempi fino a t={times[-1]:.3g}")
    state, t_prev = f, 0.0
    pairings, steps, tails = [], [], []
    for t in times:
        state, stats, tail = propagate_with_stats(
            state, t - t_prev, tol, potential, wrap_beta=None,
            tail_threshold=tail_threshold, strict=strict
        )
        t_prev = t
        pairings.append(weighted_pair(state, g, weight))
        steps.append(stats.steps)
        tails.append(tail)
    pairings = np.array(pairings)

    # STEP 2: fit e confronto con la previsione
    maxwell = maxwell_state(grid, potential)
    f_proj, g_proj = f.inner(maxwell), maxwell.inner(g)
    scale = MAXWELL_PROJECTION_TOL * maxwell.norm()
    orthogonal = abs(f_proj) <= scale * f.norm() or abs(g_proj) <= scale * g.norm()
    predicted = 0j if orthogonal else heat_coefficient(grid.dim) * f_proj * g_proj
    exponent, amplitude, ratio, envelope_ok = _fit_decay(grid.dim, times, pairings, fit_window, predicted)
    max_tail = max(tails)
    if orthogonal:
        log(f"✅ Esponente {exponent:.4f} (dati ortogonali a 𝔐: nessuna previsione)")
    else:
        log(f"✅ Esponente {exponent:.4f} (atteso {-grid.dim / 2:.1f}), rapporto ampiezze {ratio:.4f}")
    return DecayReport(
        dim=grid.dim,
        potential=potential.family,
        times=times,
        pairings=pairings,
        fitted_exponent=exponent,
        fitted_amplitude=amplitude,
        predicted_amplitude=predicted,
        amplitude_ratio=ratio,
        window=fit_window,
        wrap_guard_ok=wrap_ok,
        tail_ok=max_tail <= tail_threshold,
        envelope_ok=envelope_ok,
        max_tail=max_tail,
        claim="full" if grid.dim != 2 else "none",
        route="grid",
        box_half_width=grid.box_half_width,
        krylov_steps=steps,
    )


def free_decay_radial(
    dim: int,
    f: RadialProfile,
    g: RadialProfile,
    times: Sequence[float],
    window: Optional[Tuple[float, float]] = None,
    trunc: int = 32,
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    threads: Optional[int] = None
) -> DecayReport:
    """
    Decadimento libero su ℝⁿ per dati radiali, senza toro né wrap-around.

    Raises:
        ValueError: Se dim < 1 o la finestra è troppo corta
    """
    if dim < 1:
        raise ValueError(f"Dimensione non valida: {dim}")
    times = np.sort(np.asarray(times, dtype=float))
    window = window or (float(times[0]), float(times[-1]))
    _check_window(window)
    log(f"🚀 Decadimento libero radiale n={dim}, {times.size} tempi")
    results = evolution_pairings(dim, f, g, times, trunc=trunc, threads=threads)
    pairings = np.array([r.value for r in results])
    predicted = heat_coefficient(dim) * f.maxwell_pairing(dim) * g.maxwell_pairing(dim)
    exponent, amplitude, ratio, envelope_ok = _fit_decay(dim, times, pairings, window, predicted)
    max_tail = max(r.tail_fraction for r in results)
    log(f"✅ Esponente {exponent:.4f} (atteso {-dim / 2:.1f}), rapporto ampiezze {ratio:.4f}")
    return DecayReport(
        dim=dim,
        potential="zero",
        times=times,
        pairings=pairings,
        fitted_exponent=exponent,
        fitted_amplitude=amplitude,
        predicted_amplitude=predicted,
        amplitude_ratio=ratio,
        window=window,
        tail_ok=max_tail <= tail_threshold,
        envelope_ok=envelope_ok,
        max_tail=max_tail,
        claim="full" if dim != 2 else "none",
        route="radial",
    )


# --- consistenza con il risolvente ---

@dataclass
class LaplaceCheck:
    """Confronto R(z) f contro ∫ e^{zt} S(t) f dt."""

    z: complex
    relative_error: float
    nodes: int


def laplace_transform_check(
    f: StateVector,
    potential: PotentialSpec = PotentialSpec(),
    z: complex = -1.0,
    tol: float = 1e-10,
    horizon: float = 40.0,
    order: int = 16
) -> LaplaceCheck:
    """
    Verifica R(z) f = ∫_0^∞ e^{zt} S(t) f dt per Re z < 0.

    L'integrale usa Gauss-Legendre composito su pannelli geometrici in [0, T].
    """
    from .resolvent import solve_resolvent

    if not complex(z).real < 0:
        raise ValueError(f"z = {z}: serve Re z < 0")
    edges = np.concatenate([[0.0], np.geomspace(1e-3, horizon, 14)])
    base_nodes, base_weights = leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * base_nodes + 0.5 * (b + a))
        weights.append(0.5 * (b - a) * base_weights)
    nodes, weights = np.concatenate(nodes), np.concatenate(weights)

    total = np.zeros(f.grid.shape, dtype=complex)
    state, t_prev = f, 0.0
    for t, weight in zip(nodes, weights):
        state, _, _ = propagate_with_stats(state, t - t_prev, tol, potential, wrap_beta=None, strict=False)
        t_prev = t
        total += weight * np.exp(z * t) * state.coeffs
    quadrature = StateVector(f.grid, total)
    direct = solve_resolvent(f, z, tol=tol, potential=potential)
    error = (direct - quadrature).norm() / direct.norm()
    return LaplaceCheck(z=complex(z), relative_error=float(error), nodes=int(nodes.size))
