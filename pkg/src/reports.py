# src/reports.py
"""
Scrittura dei risultati: CSV tabellare, JSON con metadati ed eventuale
script gnuplot. Tutte le scritture sono atomiche (file temporaneo + rename).
"""

import csv
import io
import json
import os
import tempfile
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import scipy

from .config import log

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Scrive ``data`` in ``path`` passando da un file temporaneo nella stessa directory."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _to_json(value: Any) -> Any:
    """Converte tipi numpy e complessi in strutture JSON."""
    if isinstance(value, dict):
        return {str(k): _to_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_json(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_json(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        # NaN e infiniti non sono JSON valido
        return float(value) if np.isfinite(value) else None
    return value


def library_versions() -> Dict[str, str]:
    from . import __version__
    return {"kfp_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


class ReportWriter:
    """
    Raccoglie tabella e metadati di un comando e li scrive alla chiusura.

    Uso:
        with ReportWriter("reports", "free-decay") as report:
            report.set_table(["t", "re", "im"], rows)
            report.measured["fitted_exponent"] = -2.0
    """

    def __init__(self, output_dir: str, stem: str, plot: bool = False):
        """
        Args:
            output_dir: Directory di destinazione
            stem: Nome base dei file (senza estensione)
            plot: Se True scrive anche uno script gnuplot
        """
        self.output_dir = output_dir
        self.stem = stem
        self.plot = plot
        self.command: str = stem
        self.config: Dict[str, Any] = {}
        self.grid: Dict[str, Any] = {}
        self.guards: Dict[str, Any] = {}
        self.predicted: Dict[str, Any] = {}
        self.measured: Dict[str, Any] = {}
        self._columns: Optional[List[str]] = None
        self._rows: List[Sequence[Any]] = []
        self._plot_axes: Optional[tuple] = None
        self._open = False

    def open(self) -> 'ReportWriter':
        """Prepara la directory di output."""
        os.makedirs(self.output_dir, exist_ok=True)
        self._open = True
        return self

    def _require_open(self) -> None:
        if not self._open:
            raise RuntimeError("Report non aperto. Chiamare open() prima.")

    def set_table(self, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
        """Imposta colonne e righe della tabella CSV."""
        self._require_open()
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"Riga con {len(row)} celle, attese {len(columns)}")
        self._columns = list(columns)
        self._rows = [list(row) for row in rows]

    def set_plot(self, x_column: str, y_columns: Sequence[str], logscale: bool = True) -> None:
        """Colonne da tracciare nello script gnuplot."""
        self._plot_axes = (x_column, list(y_columns), logscale)

    @property
    def csv_path(self) -> str:
        return os.path.join(self.output_dir, f"{self.stem}.csv")

    @property
    def json_path(self) -> str:
        return os.path.join(self.output_dir, f"{self.stem}.json")

    @property
    def plot_path(self) -> str:
        return os.path.join(self.output_dir, f"{self.stem}.gp")

    def metadata(self) -> Dict[str, Any]:
        return _to_json({
            "schema_version": SCHEMA_VERSION,
            "versions": library_versions(),
            "command": self.command,
            "config": self.config,
            "grid": self.grid,
            "guards": self.guards,
            "predicted": self.predicted,
            "measured": self.measured,
        })

    def write(self) -> None:
        """Scrive CSV (se presente), JSON e script gnuplot."""
        self._require_open()
        if self._columns is not None:
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(self._columns)
            for row in self._rows:
                writer.writerow([_format_cell(v) for v in row])
            atomic_write_text(self.csv_path, buffer.getvalue())
        atomic_write_text(self.json_path, json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
        if self.plot and self._plot_axes and self._columns is not None:
            atomic_write_text(self.plot_path, self._gnuplot_script())
        log(f"📄 Report scritto: {self.json_path}")

    def _gnuplot_script(self) -> str:
        x_column, y_columns, logscale = self._plot_axes
        x_index = self._columns.index(x_column) + 1
        lines = [
            "set datafile separator ','",
            "set key autotitle columnhead",
        ]
        if logscale:
            lines.append("set logscale xy")
        plots = [
            f"'{os.path.basename(self.csv_path)}' using {x_index}:(abs(${self._columns.index(y) + 1})) with linespoints"
            for y in y_columns
        ]
        lines.append("plot " + ", \\\n     ".join(plots))
        return "\n".join(lines) + "\n"

    def close(self) -> None:
        self._open = False

    def __enter__(self) -> 'ReportWriter':
        """Context manager entry."""
        return self.open()

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        """Context manager exit: scrive solo se il blocco è terminato senza errori."""
        try:
            if exc_type is None:
                self.write()
        finally:
            self.close()
