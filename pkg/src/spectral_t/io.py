"""Plain-text file formats used by the command line tools.

CSV files carry a header row and write floats with 17 significant digits so
that reading and re-emitting them is lossless.  Priors, posteriors and chain
summaries are JSON.  Every write goes through a temporary file in the target
directory followed by an atomic rename.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .fourier_core import FourierGrid, TimeSeries
from .spectrum_model import SpectrumDraw, SpectrumPrior

FLOAT_FORMAT = ".17g"


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), FLOAT_FORMAT)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_output(path, text: str) -> None:
    """Write to ``path``, or to standard output when ``path`` is ``-``."""
    if str(path) == "-":
        import sys

        sys.stdout.write(text)
    else:
        atomic_write_text(path, text)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, data


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


# --- time series ----------------------------------------------------------


def series_csv(ts: TimeSeries) -> str:
    return csv_text(["t", "x"], zip(ts.times, ts.samples))


def read_series(path) -> TimeSeries:
    header, data = read_csv(path)
    if header != ["t", "x"]:
        raise ValueError(f"{path}: expected header 't,x', got {','.join(header)}")
    if data.shape[0] < 2:
        raise ValueError(f"{path}: need at least 2 samples")
    t = data[:, 0]
    dt = (t[-1] - t[0]) / (t.size - 1)
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0):
        raise ValueError(f"{path}: samples are not uniformly spaced")
    if abs(t[0]) > 1e-9 * dt:
        raise ValueError(f"{path}: first sample must be at t = 0")
    return TimeSeries(data[:, 1], dt)


# --- spectra --------------------------------------------------------------


def grid_dict(grid: FourierGrid) -> dict:
    return {"n": grid.n, "dt": grid.dt}


def grid_from_dict(d) -> FourierGrid:
    return FourierGrid(int(d["n"]), float(d["dt"]))


def prior_dict(prior: SpectrumPrior, **extra) -> dict:
    bins = [
        {"j": j, "nu": float(nu), "s2": float(s2), "improper": bool(nu <= 0)}
        for j, (nu, s2) in enumerate(zip(prior.nu, prior.s2))
    ]
    out = {"grid": grid_dict(prior.grid)}
    out.update(extra)
    out["bins"] = bins
    return out


def read_prior(path) -> SpectrumPrior:
    with open(path) as fh:
        d = json.load(fh)
    grid = grid_from_dict(d["grid"])
    bins = d["bins"]
    nu = [float(b["nu"]) for b in bins]
    s2 = [float(b["s2"]) for b in bins]
    for b in bins:
        if "improper" in b and bool(b["improper"]) != (float(b["nu"]) <= 0):
            raise ValueError(f"{path}: improper flag inconsistent with nu at bin {b.get('j')}")
    return SpectrumPrior(nu, s2, grid)


def spectrum_csv(draw: SpectrumDraw) -> str:
    g = draw.grid
    return csv_text(["j", "frequency", "sigma2"], zip(range(g.nbins), g.frequencies, draw.sigma2))


def read_spectrum(path, grid: FourierGrid) -> SpectrumDraw:
    header, data = read_csv(path)
    if header != ["j", "frequency", "sigma2"]:
        raise ValueError(f"{path}: expected header 'j,frequency,sigma2'")
    if data.shape[0] != grid.nbins:
        raise ValueError(f"{path}: {data.shape[0]} bins, data grid has {grid.nbins}")
    if not np.allclose(data[:, 1], grid.frequencies, rtol=1e-9, atol=1e-12):
        raise ValueError(f"{path}: frequencies do not match the data grid")
    return SpectrumDraw(data[:, 2], grid)


# --- manifests ------------------------------------------------------------


def config_digest(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_manifest(outputs: Sequence[str], argv: Sequence[str], config: dict, seed=None) -> Path | None:
    """Write ``<first output>.manifest.json`` describing the run."""
    files = [str(p) for p in outputs if p and str(p) != "-"]
    if not files:
        return None
    manifest = {
        "command": list(argv),
        "seed": seed,
        "config": config,
        "config_digest": config_digest(config),
        "version": __version__,
        "outputs": files,
    }
    path = Path(files[0] + ".manifest.json")
    atomic_write_text(path, json_text(manifest))
    return path
