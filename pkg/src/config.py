# src/config.py
"""
Configurazione centralizzata degli esperimenti con validazione.

Le sorgenti, in ordine di precedenza crescente, sono: i default per comando
(``DEFAULTS``), la sezione ``[comando]`` del file di configurazione
(``key = value``) e i flag da linea di comando. Il numero di thread arriva
solo dalla variabile d'ambiente ``KFP_THREADS``.
"""

import configparser
import os
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


def log(msg: str) -> None:
    """Log con timestamp formattato."""
    ts = time.strftime("%Y-%m-%d %H:%M:%S")
    print(f"[{ts}] {msg}", flush=True)


# Codici di uscita della CLI
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_TRUST = 3
EXIT_ACCEPTANCE = 4

THREADS_ENV = "KFP_THREADS"


class ConfigError(ValueError):
    """Configurazione mancante o non valida."""


class NumericalTrustError(RuntimeError):
    """Un guard numerico (coda Hermite, wrap-around, convergenza) è scattato."""


class AcceptanceError(RuntimeError):
    """Almeno un criterio di accettazione non è soddisfatto."""


# Chiavi comuni a tutti i comandi
COMMON_DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "output_dir": "reports",
    "plot": False,
}

# Parametri di griglia e potenziale condivisi dai comandi sul toro
_GRID_DEFAULTS: Dict[str, Any] = {
    "dim": 1,
    "box": 16.0,
    "nx": 256,
    "nv": 16,
    "potential": "polynomial-decay",
    "amplitude": 0.3,
    "rho": 6.0,
    "radius": 2.0,
    "center": (0.0,),
    "tol": 1e-10,
    "tail_threshold": 1e-6,
    "strict": True,
}

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "constants": {
        "dim_range": "3..12",
    },
    "fiber-spectrum": {
        "dim": 1,
        "xi": 0.7,
        "trunc": 64,
        "count": 5,
    },
    "green-coeffs": {
        "dim": 5,
        "r": 1.0,
        "lambda_min": 1e-6,
        "lambda_max": 1e-2,
        "samples": 24,
    },
    "free-decay": {
        "dim": 4,
        "t_min": 10.0,
        "t_max": 200.0,
        "samples": 16,
        "width": 1.0,
        "profile": "gaussian",
        "trunc": 32,
    },
    "evolve": {
        **_GRID_DEFAULTS,
        "box": 48.0,
        "nx": 512,
        "profile": "gaussian",
        "width": 1.0,
        "t_min": 20.0,
        "t_max": 100.0,
        "samples": 12,
        "wrap_beta": 0.05,
    },
    "resolvent-fit": {
        **_GRID_DEFAULTS,
        "dim": 5,
        "route": "fiber",
        "potential": "zero",
        "profile": "gaussian",
        "width": 1.0,
        "trunc": 32,
        "lambda_min": 1e-4,
        "lambda_max": 5e-2,
        "samples": 16,
    },
    "lap-scan": {
        **_GRID_DEFAULTS,
        "lam": 0.3,
        "eps_max": 1e-2,
        "eps_min": 1e-5,
        "eps_count": 4,
        "width": 1.0,
    },
    "high-energy-scan": {
        **_GRID_DEFAULTS,
        "nx": 512,
        "y_min": 1e2,
        "y_max": 4e2,
        "samples": 9,
        "width": 1.0,
    },
    "acceptance": {
        "quick": False,
    },
}


def threads_from_env() -> int:
    """
    Legge il numero di thread da ``KFP_THREADS``.

    Returns:
        int: Numero di thread (default 1)

    Raises:
        ConfigError: Se il valore non è un intero positivo
    """
    raw = os.getenv(THREADS_ENV, "1").strip()
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} non valido: {raw!r} (serve un intero positivo)")
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV} non valido: {raw!r} (serve un intero positivo)")
    return threads


def _coerce(key: str, raw: Any, default: Any) -> Any:
    """
    Converte un valore grezzo (stringa da file/CLI) nel tipo del default.

    Raises:
        ValueError: Se la conversione fallisce
    """
    if not isinstance(raw, str):
        if isinstance(default, tuple) and not isinstance(raw, tuple):
            return tuple(float(x) for x in raw)
        return raw
    text = raw.strip()
    if isinstance(default, bool):
        if text.lower() in ("true", "1", "yes", "on"):
            return True
        if text.lower() in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"{key}: booleano non valido {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return tuple(float(x) for x in text.split(",") if x.strip())
    return text


@dataclass
class ExperimentConfig:
    """Configurazione completa di un comando (parametri + seed + output)."""

    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "reports"
    plot: bool = False
    threads: int = 1

    @classmethod
    def load(
        cls,
        command: str,
        config_path: Optional[str] = None,
        overrides: Optional[Dict[str, Any]] = None
    ) -> 'ExperimentConfig':
        """
        Costruisce la configurazione di un comando con validazione.

        Args:
            command: Nome del comando CLI (es. "free-decay")
            config_path: File ``key = value`` con sezioni per comando (opzionale)
            overrides: Valori da linea di comando (None = non specificato)

        Returns:
            ExperimentConfig: Istanza validata

        Raises:
            ConfigError: Se ci sono chiavi sconosciute o valori non validi
        """
        if command not in DEFAULTS:
            raise ConfigError(f"Comando sconosciuto: {command}")

        defaults = {**COMMON_DEFAULTS, **DEFAULTS[command]}
        values = dict(defaults)
        errors: List[str] = []

        # File di configurazione (sezione del comando)
        if config_path:
            if not os.path.isfile(config_path):
                raise ConfigError(f"File di configurazione non trovato: {config_path}")
            parser = configparser.ConfigParser()
            parser.read(config_path, encoding="utf-8")
            if parser.has_section(command):
                for key, raw in parser.items(command):
                    key = key.replace("-", "_")
                    if key not in defaults:
                        errors.append(f"chiave sconosciuta '{key}' in [{command}]")
                        continue
                    try:
                        values[key] = _coerce(key, raw, defaults[key])
                    except ValueError as exc:
                        errors.append(str(exc) or key)

        # Override da CLI
        for key, raw in (overrides or {}).items():
            if raw is None:
                continue
            key = key.replace("-", "_")
            if key not in defaults:
                errors.append(f"chiave sconosciuta '{key}'")
                continue
            try:
                values[key] = _coerce(key, raw, defaults[key])
            except ValueError as exc:
                errors.append(str(exc) or key)

        errors.extend(cls._validate(values))

        if errors:
            log(f"❌ Configurazione non valida: {'; '.join(errors)}")
            raise ConfigError("; ".join(errors))

        try:
            threads = threads_from_env()
        except ConfigError as exc:
            log(f"❌ {exc}")
            raise

        seed = int(values.pop("seed"))
        output_dir = str(values.pop("output_dir"))
        plot = bool(values.pop("plot"))
        return cls(
            command=command,
            params=values,
            seed=seed,
            output_dir=output_dir,
            plot=plot,
            threads=threads
        )

    @staticmethod
    def _validate(values: Dict[str, Any]) -> List[str]:
        """Controlli di coerenza sui parametri numerici."""
        errors = []
        for key in ("trunc", "nx", "nv", "samples", "count", "eps_count"):
            if key in values and values[key] < 1:
                errors.append(f"{key} deve essere positivo")
        for low, high in (("t_min", "t_max"), ("lambda_min", "lambda_max"),
                          ("eps_min", "eps_max"), ("y_min", "y_max")):
            if low in values and high in values and not 0 < values[low] < values[high]:
                errors.append(f"serve 0 < {low} < {high}")
        if "box" in values and values["box"] <= 0:
            errors.append("box deve essere positivo")
        if "tol" in values and not 0 < values["tol"] < 1:
            errors.append("tol deve stare in (0, 1)")
        return errors

    def __getitem__(self, key: str) -> Any:
        return self.params[key]

    def rng(self):
        """Generatore casuale riproducibile dal seed."""
        import numpy as np
        return np.random.default_rng(self.seed)

    def as_dict(self) -> Dict[str, Any]:
        """Vista serializzabile per i report JSON."""
        return {
            "command": self.command,
            "seed": self.seed,
            "params": {k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()},
        }
