"""CSV artifacts with fixed 17-significant-digit formatting."""
from __future__ import annotations

import csv
import hashlib
import os

import numpy as np

from .analysis import ComparisonReport, KappaProfile
from .spectral import FrequencyGrid, SpectralTrace


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if np.isnan(v):
        return "nan"
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def write_rows(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_trace(path, trace: SpectralTrace):
    """Long format: one row per (time, xi)."""
    rows = (
        (t, xi, v.real, v.imag, abs(v))
        for t, vals in zip(trace.times, trace.values)
        for xi, v in zip(trace.grid.freqs, vals)
    )
    return write_rows(path, ["time", "xi", "re", "im", "abs"], rows)


def write_kappa(path, prof: KappaProfile):
    rows = zip(prof.grid.freqs, prof.kappa, prof.fit_r2, prof.valid.astype(bool))
    return write_rows(path, ["xi", "kappa", "r2", "valid"], rows)


def write_comparison(path, rep: ComparisonReport):
    rows = zip(rep.snapshot_times, rep.model_times, rep.distances)
    write_rows(path, ["nn_time", "model_time", "rel_l2"], rows)
    summary = os.path.splitext(path)[0] + ".txt"
    with open(summary, "w") as fh:
        fh.write(f"time_scale = {fmt(rep.time_scale)}\n")
        fh.write(f"spearman = {fmt(rep.spearman)}\n")
        fh.write(f"band_min = {fmt(rep.band[0])}\n")
        fh.write(f"band_max = {fmt(rep.band[1])}\n")
    return path, summary


def _read_columns(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader if row])
    if data.size == 0:
        raise ValueError(f"{path} has no data rows")
    return {name: data[:, i] for i, name in enumerate(header)}


def _grid_from_freqs(freqs):
    spacing = float(freqs[1] - freqs[0]) if freqs.size > 1 else 1.0
    weights = np.ones(freqs.size)
    return FrequencyGrid(freqs, spacing, weights)


def read_trace(path) -> SpectralTrace:
    cols = _read_columns(path)
    # keep file order of snapshots
    _, first = np.unique(cols["time"], return_index=True)
    times = cols["time"][np.sort(first)]
    nt = times.size
    nf = cols["xi"].size // nt
    if nf * nt != cols["xi"].size:
        raise ValueError(f"{path}: ragged trace")
    freqs = cols["xi"][:nf]
    values = (cols["re"] + 1j * cols["im"]).reshape(nt, nf)
    return SpectralTrace(_grid_from_freqs(freqs), times, values)


def read_kappa(path) -> KappaProfile:
    cols = _read_columns(path)
    return KappaProfile(_grid_from_freqs(cols["xi"]), cols["kappa"], cols["r2"], cols["valid"] > 0)


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
