#!/usr/bin/env python3
# kfp_lab.py
"""
Laboratorio numerico per l'operatore di Kramers-Fokker-Planck.

Comandi:
- constants: costanti in forma chiusa e identità dei prodotti di calore
- fiber-spectrum: autovalori e proiezioni di Riesz di P̂₀(ξ)
- green-coeffs: coefficienti di bassa energia del nucleo di Green
- free-decay: decadimento libero su ℝⁿ (via radiale, ogni n)
- evolve: decadimento perturbato sulla griglia (n <= 3)
- resolvent-fit: fit di bassa energia del risolvente
- lap-scan: continuazione R(λ + iε) per ε → 0
- high-energy-scan: norme di R(iy) per y grande
- acceptance: suite dei criteri di accettazione

Ogni comando scrive <output-dir>/<comando>.csv, .json e (con --plot) .gp.
Codici di uscita: 0 ok, 2 configurazione, 3 guard numerico, 4 accettazione, 1 altro.
"""

import argparse
import itertools
import math
import sys
import traceback
from typing import Dict, List, Optional

import numpy as np

from src.config import (
    DEFAULTS,
    EXIT_ACCEPTANCE,
    EXIT_CONFIG,
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_TRUST,
    AcceptanceError,
    ConfigError,
    ExperimentConfig,
    NumericalTrustError,
    log,
)
from src.constants import constants_table, gamma_envelope, gamma_large_t_slope, parse_dim_range
from src.evolve import DecayReport, decay_scan, free_decay_radial
from src.fiber import assemble_fiber, fiber_spectrum, projection_overlap, riesz_projection
from src.green import default_lambda_grid, expand_green, green_derivative_oracle
from src.phase_space import (
    PhaseGrid,
    PotentialSpec,
    StateVector,
    decay_constant,
    gaussian_packet,
    odd_packet,
    subelliptic_ratio,
)
from src.radial import RadialProfile
from src.reports import ReportWriter
from src.resolvent import (
    branch_flip_inflation,
    default_fit_grid,
    fit_low_energy_grid,
    fit_low_energy_radial,
    fit_window_stability,
    high_energy_scan,
    lap_continuation,
    threshold_identity_check,
)

# Colonne CSV per comando (riportate anche in --help)
CSV_COLUMNS: Dict[str, List[str]] = {
    "constants": [
        "dim", "a_re", "a_im", "c_log", "b_re", "b_im", "e_time",
        "heat_product", "heat_imag", "identity_residual",
    ],
    "fiber-spectrum": ["index", "eig_re", "eig_im", "expected", "residual"],
    "green-coeffs": ["term", "coeff_re", "coeff_im", "reference_re", "reference_im", "relative_error"],
    "free-decay": DecayReport.COLUMNS,
    "evolve": DecayReport.COLUMNS,
    "resolvent-fit": ["z_re", "z_im", "pairing_re", "pairing_im"],
    "lap-scan": ["eps", "pairing_re", "pairing_im", "norm", "cauchy"],
    "high-energy-scan": ["y", "norm_ratio", "smoothing_ratio", "resolved"],
    "acceptance": ["criterion", "title", "passed"],
}

COMMAND_HELP: Dict[str, str] = {
    "constants": "Costanti a_{n,n-2}, c_{n,0}, b_n, e_n e residuo delle identità",
    "fiber-spectrum": "Autovalori più bassi di P̂₀(ξ) troncato e proiezioni di Riesz",
    "green-coeffs": "Coefficienti del nucleo di Green estratti da un fit in λ",
    "free-decay": "Decadimento ⟨S₀(t) f, g⟩ su ℝⁿ per dati radiali",
    "evolve": "Decadimento ⟨S(t) f, g⟩ con potenziale sulla griglia",
    "resolvent-fit": "Fit di bassa energia di ⟨R(z) f, g⟩",
    "lap-scan": "Continuazione di ⟨R(λ + iε) f, g⟩ per ε decrescente",
    "high-energy-scan": "Norme di R(iy) f per y grande e pendenze log-log",
    "acceptance": "Suite dei criteri di accettazione (--quick per il sottoinsieme veloce)",
}

# Chiavi comuni gestite dai flag generali
_COMMON_KEYS = ("seed", "output_dir", "plot")

RIESZ_MAX_SIZE = 4096


# --- costruzione degli oggetti dal config ---

def grid_from(config: ExperimentConfig) -> PhaseGrid:
    """PhaseGrid dai parametri dim, box, nx, nv."""
    return PhaseGrid(config["dim"], config["box"], config["nx"], config["nv"])


def potential_from(config: ExperimentConfig) -> PotentialSpec:
    """PotentialSpec dai parametri potential, amplitude, rho, center, radius."""
    return PotentialSpec(
        family=config["potential"],
        amplitude=config["amplitude"],
        decay_rho=config["rho"],
        center=tuple(config["center"]),
        radius=config["radius"],
    )


def grid_state(grid: PhaseGrid, profile: str, width: float) -> StateVector:
    """
    Dato iniziale sulla griglia.

    - gaussian: pacchetto gaussiano ⊗ ψ₀
    - odd: x₁ · gaussiana ⊗ ψ₀ (massa nulla per potenziali pari)
    """
    if profile == "gaussian":
        return gaussian_packet(grid, width)
    if profile == "odd":
        return odd_packet(grid, width)
    raise ConfigError(f"Profilo sconosciuto: {profile} (ammessi gaussian, odd)")


def grid_info(grid: PhaseGrid) -> Dict:
    return {"dim": grid.dim, "box_half_width": grid.box_half_width, "nx": grid.nx, "nv": grid.nv}


def potential_info(spec: PotentialSpec, dim: int) -> Dict:
    info = {"family": spec.family, "amplitude": spec.amplitude, "rho": spec.decay_rho}
    if not spec.is_zero:
        info["decay_constant"] = decay_constant(spec, dim)
    return info


def _level_multiset(dim: int, trunc: int, xi_sq: float, count: int) -> np.ndarray:
    """I primi ``count`` valori |α| + |ξ|², con molteplicità."""
    levels = np.arange(trunc)
    total = levels
    for _ in range(dim - 1):
        total = np.add.outer(total, levels).ravel()
    return np.sort(total)[:count] + xi_sq


def _decay_fields(writer: ReportWriter, result: DecayReport) -> None:
    writer.set_table(DecayReport.COLUMNS, result.rows())
    writer.set_plot("t", ["pairing_re", "prediction"])
    writer.guards.update({
        "wrap_guard_ok": result.wrap_guard_ok,
        "tail_ok": result.tail_ok,
        "max_tail": result.max_tail,
        "envelope_ok": result.envelope_ok,
    })
    writer.predicted.update({
        "exponent": -result.dim / 2.0,
        "amplitude": result.predicted_amplitude,
    })
    writer.measured.update({
        "fitted_exponent": result.fitted_exponent,
        "fitted_amplitude": result.fitted_amplitude,
        "amplitude_ratio": result.amplitude_ratio,
        "window": list(result.window),
        "claim": result.claim,
        "route": result.route,
    })
    if result.claim == "none":
        log("⚠️ n=2: modalità esplorativa, nessuna affermazione sul risultato")


# --- comandi ---

def cmd_constants(config: ExperimentConfig, writer: ReportWriter) -> None:
    dims = parse_dim_range(config["dim_range"])
    if not dims or min(dims) < 3:
        raise ConfigError(f"dim_range non valido: {config['dim_range']} (serve n >= 3)")
    rows = []
    for row in constants_table(dims):
        a = row.a_leading if row.a_leading is not None else complex("nan")
        b = row.b_time if row.b_time is not None else complex("nan")
        rows.append([
            row.dim, a.real, a.imag,
            row.c_log if row.c_log is not None else float("nan"),
            b.real, b.imag,
            row.e_time if row.e_time is not None else float("nan"),
            row.heat_product, row.heat_imag, row.identity_residual,
        ])
    writer.set_table(CSV_COLUMNS["constants"], rows)
    writer.set_plot("dim", ["identity_residual"])
    writer.predicted["heat_product"] = {str(n): (4.0 * math.pi) ** (-n / 2.0) for n in dims}
    writer.measured["max_identity_residual"] = max(r[-1] for r in rows)
    envelope = gamma_envelope(1e-2)
    writer.measured["gamma_small_t_ratio"] = envelope.gamma / (math.pi * 1e-8 / 3.0)
    writer.measured["gamma_large_t_slope"] = gamma_large_t_slope()
    writer.predicted["gamma_large_t_slope"] = 2.0 * math.pi


def cmd_fiber_spectrum(config: ExperimentConfig, writer: ReportWriter) -> None:
    dim, trunc, count = config["dim"], config["trunc"], config["count"]
    op = assemble_fiber(dim, config["xi"], trunc)
    values = fiber_spectrum(op, count)
    expected = _level_multiset(dim, trunc, op.xi_norm_sq, count)
    rows = [
        [k, v.real, v.imag, e, abs(v - e)]
        for k, (v, e) in enumerate(zip(values, expected))
    ]
    writer.set_table(CSV_COLUMNS["fiber-spectrum"], rows)
    writer.set_plot("index", ["residual"], logscale=False)
    writer.grid = {"dim": dim, "trunc": trunc, "xi": list(op.xi)}

    # STEP 2: proiezioni di Riesz sui livelli bassi (solo matrici dense piccole)
    if op.size > RIESZ_MAX_SIZE:
        log(f"⚠️ Proiezioni di Riesz saltate: dimensione {op.size} oltre {RIESZ_MAX_SIZE}")
        writer.measured["max_eigen_residual"] = max(r[-1] for r in rows)
        return
    levels = range(min(4, trunc - 1))
    projections = [riesz_projection(op, level) for level in levels]
    cross = max(
        (projection_overlap(p, q) for p, q in itertools.permutations(projections, 2)),
        default=0.0,
    )
    writer.measured.update({
        "max_eigen_residual": max(r[-1] for r in rows),
        "idempotency": {str(p.level): p.idempotency_residual for p in projections},
        "pairing": {str(p.level): p.pairing for p in projections},
        "traces": {str(p.level): p.trace for p in projections},
        "max_cross_product": cross,
    })
    writer.predicted["eigenvalues"] = expected


def cmd_green_coeffs(config: ExperimentConfig, writer: ReportWriter) -> None:
    dim, r = config["dim"], config["r"]
    grid = default_lambda_grid(config["lambda_min"], config["lambda_max"], config["samples"])
    expansion = expand_green(dim, r, grid)
    errors = expansion.relative_errors()
    rows = []
    for tag, value in expansion.coeffs.items():
        ref = expansion.references.get(tag)
        ref_c = complex(ref) if ref is not None else complex("nan")
        rows.append([tag, value.real, value.imag, ref_c.real, ref_c.imag, errors.get(tag, float("nan"))])
    writer.set_table(CSV_COLUMNS["green-coeffs"], rows)
    writer.grid = {"dim": dim, "parity": expansion.parity, "r_probe": r, "fit_window": list(expansion.fit_window)}
    writer.predicted["references"] = expansion.references
    writer.measured.update({
        "coefficients": expansion.coeffs,
        "relative_errors": errors,
        "residual": expansion.residual,
        "condition": expansion.condition,
    })
    if dim >= 5:
        tag = "a2" if dim % 2 else "d1"
        writer.measured["derivative_oracle"] = green_derivative_oracle(dim, r)
        writer.measured["derivative_oracle_tag"] = tag


def cmd_free_decay(config: ExperimentConfig, writer: ReportWriter) -> None:
    profile = RadialProfile(shape=config["profile"], width=config["width"])
    times = np.geomspace(config["t_min"], config["t_max"], config["samples"])
    result = free_decay_radial(
        config["dim"], profile, profile, times, trunc=config["trunc"], threads=config.threads
    )
    writer.grid = {"dim": config["dim"], "route": "radial", "trunc": config["trunc"]}
    _decay_fields(writer, result)


def cmd_evolve(config: ExperimentConfig, writer: ReportWriter) -> None:
    grid = grid_from(config)
    potential = potential_from(config)
    f = grid_state(grid, config["profile"], config["width"])
    times = np.geomspace(config["t_min"], config["t_max"], config["samples"])
    log(f"📐 Griglia n={grid.dim}, L={grid.box_half_width}, nx={grid.nx}, nv={grid.nv}")
    result = decay_scan(
        f, f, times, potential=potential, tol=config["tol"], wrap_beta=config["wrap_beta"],
        tail_threshold=config["tail_threshold"], window=(config["t_min"], config["t_max"]),
        strict=config["strict"]
    )
    writer.grid = {**grid_info(grid), "potential": potential_info(potential, grid.dim)}
    writer.guards["wrap_beta"] = config["wrap_beta"]
    writer.measured["krylov_steps"] = result.krylov_steps
    writer.measured["subelliptic_ratio"] = subelliptic_ratio([f])
    _decay_fields(writer, result)


def cmd_resolvent_fit(config: ExperimentConfig, writer: ReportWriter) -> None:
    lambdas = default_fit_grid(config["lambda_min"], config["lambda_max"], config["samples"])
    route = config["route"]
    if route == "fiber":
        profile = RadialProfile(shape=config["profile"], width=config["width"])
        fit = fit_low_energy_radial(
            config["dim"], profile, profile, lambdas, trunc=config["trunc"], threads=config.threads
        )
        branch = branch_flip_inflation(config["dim"], profile, profile, lambdas, threads=config.threads)
        writer.grid = {"dim": config["dim"], "route": "radial", "trunc": config["trunc"]}
        writer.measured["branch_flip_inflation"] = branch.inflation
        writer.measured["fit_window_stability"] = fit_window_stability(
            config["dim"], profile, profile, lambdas, threads=config.threads
        )
    elif route == "grid":
        grid = grid_from(config)
        potential = potential_from(config)
        f = grid_state(grid, config["profile"], config["width"])
        fit = fit_low_energy_grid(f, f, lambdas, potential, config["tol"], threads=config.threads)
        writer.grid = {**grid_info(grid), "potential": potential_info(potential, grid.dim)}
        if not potential.is_zero:
            check = threshold_identity_check(grid, potential, [-1e-2, -1e-3], strict=config["strict"])
            writer.guards["maxwell_residual"] = check.maxwell_residual
            writer.measured["threshold_residuals"] = check.residuals
            writer.measured["threshold_stabilization"] = check.stabilization
            writer.measured["torus_floor"] = check.floor
    else:
        raise ConfigError(f"Via sconosciuta: {route} (ammesse fiber, grid)")

    rows = [[z.real, z.imag, p.real, p.imag] for z, p in zip(fit.z_samples, fit.pairings)]
    writer.set_table(CSV_COLUMNS["resolvent-fit"], rows)
    writer.set_plot("z_re", ["pairing_re"], logscale=False)
    writer.guards["branch"] = "Im z^(1/2) > 0"
    writer.predicted["leading_special"] = fit.predicted_special
    writer.measured.update({
        "model": fit.model,
        "coefficients": fit.coefficients,
        "leading_special": fit.leading_special,
        "special_error": fit.special_error,
        "residual": fit.residual,
        "condition": fit.condition,
        "claim": "none" if fit.dim == 2 else "full",
    })
    if fit.dim == 2:
        log("⚠️ n=2: modalità esplorativa, nessuna affermazione sul risultato")


def cmd_lap_scan(config: ExperimentConfig, writer: ReportWriter) -> None:
    grid = grid_from(config)
    potential = potential_from(config)
    f = gaussian_packet(grid, config["width"])
    eps = np.geomspace(config["eps_max"], config["eps_min"], max(config["eps_count"], 2))
    trace = lap_continuation(
        f, f, config["lam"], eps, potential, config["tol"], config["strict"], threads=config.threads
    )
    writer.set_table(CSV_COLUMNS["lap-scan"], trace.rows())
    writer.set_plot("eps", ["cauchy"])
    writer.grid = {**grid_info(grid), "potential": potential_info(potential, grid.dim)}
    writer.guards.update({"monotone": trace.monotone, "torus_spacing": trace.torus_spacing})
    writer.measured.update({
        "extrapolated": trace.extrapolated,
        "rate": trace.rate,
        "symmetry_gap": trace.symmetry_gap,
        "gmres_iterations": trace.iterations,
    })


def cmd_high_energy_scan(config: ExperimentConfig, writer: ReportWriter) -> None:
    grid = grid_from(config)
    potential = potential_from(config)
    f = gaussian_packet(grid, config["width"])
    y = np.geomspace(config["y_min"], config["y_max"], config["samples"])
    scan = high_energy_scan(f, y, potential, config["tol"], threads=config.threads)
    writer.set_table(CSV_COLUMNS["high-energy-scan"], scan.rows())
    writer.set_plot("y", ["norm_ratio", "smoothing_ratio"])
    writer.grid = {**grid_info(grid), "potential": potential_info(potential, grid.dim)}
    writer.guards["all_resolved"] = bool(scan.resolved.all())
    writer.guards["slopes_trusted"] = scan.trusted
    writer.predicted.update({"norm_slope": -0.5, "smoothing_slope": -0.25})
    writer.measured.update({
        "norm_slope": scan.norm_slope,
        "smoothing_slope": scan.smoothing_slope,
        "resolved_points": scan.resolved_count,
    })


def cmd_acceptance(config: ExperimentConfig, writer: ReportWriter) -> None:
    from acceptance import run_suite

    results = run_suite(quick=config["quick"], seed=config.seed, threads=config.threads)
    writer.set_table(
        CSV_COLUMNS["acceptance"],
        [[r.number, r.title, r.passed] for r in results],
    )
    writer.measured["criteria"] = {str(r.number): r.measured for r in results}
    failed = [r.number for r in results if not r.passed]
    if failed:
        # il report va scritto anche in caso di fallimento
        writer.write()
        raise AcceptanceError(f"Criteri non soddisfatti: {failed}")


COMMANDS = {
    "constants": cmd_constants,
    "fiber-spectrum": cmd_fiber_spectrum,
    "green-coeffs": cmd_green_coeffs,
    "free-decay": cmd_free_decay,
    "evolve": cmd_evolve,
    "resolvent-fit": cmd_resolvent_fit,
    "lap-scan": cmd_lap_scan,
    "high-energy-scan": cmd_high_energy_scan,
    "acceptance": cmd_acceptance,
}


def run(command: str, config: ExperimentConfig) -> int:
    """
    Esegue un comando e scrive i report.

    Returns:
        int: EXIT_OK se il comando termina

    Raises:
        ConfigError, ValueError, NumericalTrustError, AcceptanceError
    """
    log(f"🚀 Avvio comando {command} (seed={config.seed}, thread={config.threads})")
    with ReportWriter(config.output_dir, command, plot=config.plot) as writer:
        writer.command = command
        writer.config = config.as_dict()
        COMMANDS[command](config, writer)
    log(f"✅ Comando {command} completato")
    return EXIT_OK


# --- linea di comando ---

def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    """Parser con un sottocomando per comando e un flag per parametro."""
    parser = argparse.ArgumentParser(
        prog="kfp_lab",
        description="Laboratorio numerico Kramers-Fokker-Planck",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, defaults in DEFAULTS.items():
        columns = ", ".join(CSV_COLUMNS[command])
        cmd = sub.add_parser(
            command,
            help=COMMAND_HELP[command],
            description=f"{COMMAND_HELP[command]}. Colonne CSV: {columns}.",
        )
        cmd.add_argument("--config", help="File key = value con sezioni per comando")
        cmd.add_argument("--seed", help="Seed per le famiglie casuali")
        cmd.add_argument("--output-dir", dest="output_dir", help="Directory dei report")
        cmd.add_argument("--plot", action="store_const", const="true", help="Scrive anche lo script gnuplot")
        cmd.add_argument(
            "--set", action="append", default=[], metavar="KEY=VALUE",
            help="Override di un parametro (ripetibile)"
        )
        for key, default in defaults.items():
            if isinstance(default, bool):
                if default:
                    cmd.add_argument(_flag("no_" + key), dest=key, action="store_const", const="false")
                else:
                    cmd.add_argument(_flag(key), dest=key, action="store_const", const="true")
                continue
            cmd.add_argument(_flag(key), dest=key, help=f"default: {default}")
    return parser


def parse_overrides(args: argparse.Namespace) -> Dict[str, Optional[str]]:
    """
    Raccoglie i valori da CLI: flag specifici e --set KEY=VALUE.

    Raises:
        ConfigError: Se un --set non ha la forma KEY=VALUE
    """
    overrides: Dict[str, Optional[str]] = {}
    for key in list(DEFAULTS[args.command]) + list(_COMMON_KEYS):
        overrides[key] = getattr(args, key, None)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set non valido: {item!r} (serve KEY=VALUE)")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point principale: restituisce il codice di uscita."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = ExperimentConfig.load(args.command, args.config, parse_overrides(args))
        return run(args.command, config)
    except NumericalTrustError as e:
        log(f"❌ Guard numerico: {e}")
        return EXIT_TRUST
    except AcceptanceError as e:
        log(f"❌ Accettazione fallita: {e}")
        return EXIT_ACCEPTANCE
    except ValueError as e:
        log(f"❌ Configurazione non valida: {e}")
        return EXIT_CONFIG
    except Exception as e:
        log(f"❌ Errore fatale: {e}")
        traceback.print_exc()
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
