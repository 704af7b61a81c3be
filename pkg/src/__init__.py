# kfp-lab/src
# Moduli condivisi per il laboratorio numerico Kramers-Fokker-Planck

__version__ = "1.0.0"

from .config import (
    AcceptanceError,
    ConfigError,
    ExperimentConfig,
    NumericalTrustError,
    log,
)
from .phase_space import PhaseGrid, PotentialSpec, StateVector, WeightSpec
from .reports import ReportWriter

__all__ = [
    '__version__', 'AcceptanceError', 'ConfigError', 'ExperimentConfig',
    'NumericalTrustError', 'log', 'PhaseGrid', 'PotentialSpec', 'StateVector',
    'WeightSpec', 'ReportWriter',
]
