"""CSV readers and writers for traces, spectra and reports."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import SensitivityReport, Spectrum
from .camera import PixelTrace
from .signal_model import Schedule

TRACE_HEADER = ("exposure_index", "count")
SPECTRUM_HEADER = ("frequency_hz", "magnitude")
REPORT_HEADER = ("snr", "eta_t_per_sqrthz", "resolution_hz", "t_tot_s", "b_z_t", "n_rep")


def fmt(value) -> str:
    """Shortest round-trip text for numbers; keeps output byte-stable."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


def write_table(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_table(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def trace_filename(row: int, col: int) -> str:
    return f"pixel_r{row}_c{col}.csv"


def write_trace(trace: PixelTrace, directory: str | Path) -> Path:
    r, c = trace.pixel
    return write_table(Path(directory) / trace_filename(r, c), TRACE_HEADER, enumerate(trace.counts))


def read_trace(path: str | Path, schedule: Schedule) -> PixelTrace:
    header, rows = read_table(path)
    if tuple(header) != TRACE_HEADER:
        raise ValueError(f"{path}: expected header {','.join(TRACE_HEADER)}")
    idx = [int(r[0]) for r in rows]
    if idx != list(range(len(rows))):
        raise ValueError(f"{path}: exposure_index must run 0..n-1")
    text = [r[1] for r in rows]
    if all(t.lstrip("-").isdigit() for t in text):
        counts = np.array([int(t) for t in text], dtype=np.int64)
    else:
        counts = np.array([float(t) for t in text])
    return PixelTrace(counts, schedule)


def write_spectrum(spec: Spectrum, path: str | Path) -> Path:
    return write_table(path, SPECTRUM_HEADER, zip(spec.bin_frequencies, spec.magnitudes))


def report_row(report: SensitivityReport, n_rep: int) -> list:
    return [report.snr, report.eta_normalized, report.resolution, report.t_tot, report.b_z, n_rep]


def write_reports(rows: Iterable[Sequence], path: str | Path) -> Path:
    return write_table(path, REPORT_HEADER, rows)
