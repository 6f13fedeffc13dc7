"""Reading and writing spectra, count images, trial batches and sweep tables.

All text formats share one layout: ``# key: value`` metadata lines, then a
comma-separated header row, then data rows. Reals are written with ``repr``
so they read back bit-identical. Writers go through a temporary file in
the destination directory followed by an atomic rename.

Spectrum file (schema 1)::

    # ghostks spectrum
    # schema_version: 1
    # seed: 7
    wavelength_nm,count
    790.0,12

Count image, text form (schema 1); rows are the spatial axis, columns the
spectral axis starting at ``lambda0_nm`` with step ``dlambda_nm``::

    # ghostks count image
    # schema_version: 1
    # lambda0_nm: 790.0
    # dlambda_nm: 0.25
    0 3 1 ...

The binary form is an ``.npz`` with arrays ``counts``, ``lambda0_nm`` and
``dlambda_nm``.

Sweep table columns: ``axis1, n_t, rejection_rate@<level>...,
p_mean, p_q25, p_q75, p_min, p_max, median_statistic, mean_detected,
cell_seed``.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import (
    CalibrationMissingError,
    FileFormatError,
    InvalidCountError,
    NonMonotoneWavelengthError,
    ParseError,
    RaggedImageError,
    SchemaVersionError,
)
from .montecarlo import PValueSummary, SweepCell, SweepResult, TrialBatch
from .spectra import BinnedSpectrum, WavelengthGrid

SCHEMA_VERSION = 1

SPECTRUM_COLUMNS = ("wavelength_nm", "count")
BATCH_COLUMNS = ("trial", "p_value", "statistic", "realized_total")
PVALUE_COLUMNS = ("p_mean", "p_q25", "p_q75", "p_min", "p_max")
SWEEP_TAIL_COLUMNS = PVALUE_COLUMNS + ("median_statistic", "mean_detected", "cell_seed")
BAR_TAIL_COLUMNS = ("detected_mean",)
BOX_COLUMNS = ("axis1", "n_t", "mean", "q25", "q75", "min", "max")


def rate_column(level) -> str:
    return f"rejection_rate@{float(level):g}"


def sweep_columns(levels):
    return ("axis1", "n_t") + tuple(rate_column(a) for a in levels) + SWEEP_TAIL_COLUMNS


# --------------------------------------------------------------------------
# helpers


def atomic_write_text(path, text: str):
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=parent)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _render(kind, meta, columns, rows) -> str:
    lines = [f"# ghostks {kind}", f"# schema_version: {SCHEMA_VERSION}"]
    for k, v in meta.items():
        lines.append(f"# {k}: {_fmt(v)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _read_table(path):
    """Split a text table into (metadata, header or None, [(lineno, fields)])."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileFormatError(f"cannot read file: {exc.strerror}", path=path) from None
    meta = {}
    header = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                k, v = body.split(":", 1)
                meta[k.strip()] = v.strip()
            continue
        fields = [f.strip() for f in line.split(",")] if "," in line else line.split()
        if header is None and not rows and not _looks_numeric(fields[0]):
            header = tuple(fields)
            continue
        rows.append((lineno, fields))
    if "schema_version" in meta and meta["schema_version"] != str(SCHEMA_VERSION):
        raise SchemaVersionError(
            f"schema_version {meta['schema_version']} not supported (expected {SCHEMA_VERSION})",
            path=path,
        )
    return meta, header, rows


def _looks_numeric(s) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _parse_count(text, path, lineno) -> int:
    try:
        v = int(text)
    except ValueError:
        if _looks_numeric(text):
            raise InvalidCountError(
                f"count {text!r} is not an integer", path=path, line=lineno
            ) from None
        raise ParseError(f"count {text!r} is not a number", path=path, line=lineno) from None
    if v < 0:
        raise InvalidCountError(f"count {text!r} is negative", path=path, line=lineno)
    return v


def _parse_float(text, path, lineno) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{text!r} is not a number", path=path, line=lineno) from None


# --------------------------------------------------------------------------
# spectra


def save_spectrum(spectrum: BinnedSpectrum, path, metadata=None):
    meta = dict(spectrum.metadata)
    meta.update(metadata or {})
    rows = zip(spectrum.grid.bin_centers, spectrum.counts)
    atomic_write_text(path, _render("spectrum", meta, SPECTRUM_COLUMNS, rows))


def load_spectrum(path) -> BinnedSpectrum:
    meta, header, rows = _read_table(path)
    if header is not None and tuple(h.lower() for h in header[:2]) != SPECTRUM_COLUMNS:
        raise ParseError(f"unexpected header {','.join(header)}", path=path)
    if len(rows) < 2:
        raise ParseError("a spectrum needs at least 2 data lines", path=path)
    lam, counts = [], []
    for lineno, fields in rows:
        if len(fields) != 2:
            raise ParseError(f"expected 2 columns, got {len(fields)}", path=path, line=lineno)
        w = _parse_float(fields[0], path, lineno)
        if not np.isfinite(w):
            raise ParseError(f"wavelength {fields[0]!r} is not finite", path=path, line=lineno)
        if lam and not w > lam[-1]:
            raise NonMonotoneWavelengthError(
                f"wavelength {w} does not exceed previous {lam[-1]}", path=path, line=lineno
            )
        lam.append(w)
        counts.append(_parse_count(fields[1], path, lineno))
    meta.pop("schema_version", None)
    return BinnedSpectrum(WavelengthGrid(np.array(lam)), np.array(counts, dtype=np.int64), meta)


def load_transmittance_table(path):
    """Two-column ``wavelength_nm,transmittance`` file -> (wavelengths, values) tuples."""
    meta, header, rows = _read_table(path)
    if len(rows) < 2:
        raise ParseError("a transmittance table needs at least 2 data lines", path=path)
    lam, val = [], []
    for lineno, fields in rows:
        if len(fields) != 2:
            raise ParseError(f"expected 2 columns, got {len(fields)}", path=path, line=lineno)
        w = _parse_float(fields[0], path, lineno)
        t = _parse_float(fields[1], path, lineno)
        if lam and not w > lam[-1]:
            raise NonMonotoneWavelengthError(
                f"wavelength {w} does not exceed previous {lam[-1]}", path=path, line=lineno
            )
        if not 0.0 <= t <= 1.0:
            raise ParseError(f"transmittance {t} outside [0, 1]", path=path, line=lineno)
        lam.append(w)
        val.append(t)
    return tuple(lam), tuple(val)


# --------------------------------------------------------------------------
# count images


def save_count_image(image, lambda0, dlambda, path):
    path = Path(path)
    img = np.asarray(image, dtype=np.int64)
    if path.suffix == ".npz":
        fd, tmp = tempfile.mkstemp(suffix=".npz", dir=path.parent)
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, counts=img, lambda0_nm=float(lambda0), dlambda_nm=float(dlambda))
        os.replace(tmp, path)
        return
    lines = [
        "# ghostks count image",
        f"# schema_version: {SCHEMA_VERSION}",
        f"# lambda0_nm: {float(lambda0)!r}",
        f"# dlambda_nm: {float(dlambda)!r}",
    ]
    lines += [" ".join(str(int(v)) for v in row) for row in img]
    atomic_write_text(path, "\n".join(lines) + "\n")


def _calibrated_grid(lambda0, dlambda, n_cols, path):
    if not dlambda > 0:
        raise FileFormatError(f"calibration increment must be > 0, got {dlambda}", path=path)
    return WavelengthGrid(lambda0 + dlambda * np.arange(n_cols))


def load_count_image(path):
    """Return ``(counts, grid)``; counts has shape (rows, spectral columns)."""
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as z:
            if "lambda0_nm" not in z or "dlambda_nm" not in z:
                raise CalibrationMissingError("npz lacks lambda0_nm/dlambda_nm", path=path)
            counts = np.asarray(z["counts"])
            lambda0, dlambda = float(z["lambda0_nm"]), float(z["dlambda_nm"])
        if counts.ndim != 2:
            raise RaggedImageError("counts array must be 2-D", path=path)
        if counts.dtype.kind == "f" and np.any(counts != np.round(counts)):
            raise InvalidCountError("fractional counts in image", path=path)
        if np.any(counts < 0):
            raise InvalidCountError("negative counts in image", path=path)
        return counts.astype(np.int64), _calibrated_grid(lambda0, dlambda, counts.shape[1], path)

    meta, header, rows = _read_table(path)
    if "lambda0_nm" not in meta or "dlambda_nm" not in meta:
        raise CalibrationMissingError(
            "calibration block (lambda0_nm, dlambda_nm) missing", path=path
        )
    if header is not None:
        raise ParseError(f"unexpected non-numeric row {','.join(header)}", path=path)
    if not rows:
        raise ParseError("image has no rows", path=path)
    width = len(rows[0][1])
    data = []
    for lineno, fields in rows:
        if len(fields) != width:
            raise RaggedImageError(
                f"row has {len(fields)} columns, expected {width}", path=path, line=lineno
            )
        data.append([_parse_count(f, path, lineno) for f in fields])
    try:
        lambda0, dlambda = float(meta["lambda0_nm"]), float(meta["dlambda_nm"])
    except ValueError:
        raise ParseError("calibration values are not numbers", path=path) from None
    counts = np.array(data, dtype=np.int64)
    return counts, _calibrated_grid(lambda0, dlambda, width, path)


# --------------------------------------------------------------------------
# trial batches and sweeps


def write_batch(batch: TrialBatch, path):
    rows = (
        (t, p, s, n)
        for t, (p, s, n) in enumerate(zip(batch.p_values, batch.statistics, batch.realized_totals))
    )
    meta = dict(batch.descriptor)
    meta["n_trials"] = batch.n_trials
    atomic_write_text(path, _render("trial batch", meta, BATCH_COLUMNS, rows))


def load_batch(path) -> TrialBatch:
    meta, header, rows = _read_table(path)
    if header != BATCH_COLUMNS:
        raise ParseError("not a trial batch table", path=path)
    p, s, n = [], [], []
    for lineno, f in rows:
        if len(f) != len(BATCH_COLUMNS):
            raise ParseError("wrong column count", path=path, line=lineno)
        p.append(_parse_float(f[1], path, lineno))
        s.append(_parse_float(f[2], path, lineno))
        n.append(_parse_count(f[3], path, lineno))
    meta.pop("schema_version", None)
    meta.pop("n_trials", None)
    desc = {k: _coerce(v) for k, v in meta.items()}
    return TrialBatch(desc, np.array(p), np.array(s), np.array(n, dtype=np.int64))


def _coerce(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def _grid_meta(grid: WavelengthGrid) -> str:
    c = grid.bin_centers
    if np.array_equal(np.linspace(c[0], c[-1], c.size), c):
        return f"uniform {float(c[0])!r} {float(c[-1])!r} {c.size}"
    return "centers " + " ".join(repr(float(v)) for v in c)


def _parse_grid_meta(text: str, path) -> WavelengthGrid:
    parts = text.split()
    try:
        if parts[0] == "uniform" and len(parts) == 4:
            return WavelengthGrid.uniform(float(parts[1]), float(parts[2]), int(parts[3]))
        if parts[0] == "centers":
            return WavelengthGrid(np.array([float(v) for v in parts[1:]]))
    except (ValueError, IndexError):
        pass
    raise ParseError(f"bad grid definition {text!r}", path=path)


def write_sweep(result: SweepResult, path):
    meta = {
        "family": result.family,
        "axis": result.axis_name,
        "master_seed": result.master_seed,
        "rng": result.rng,
        "n_trials": result.n_trials,
        "n_reference": result.n_reference if result.n_reference is not None else "",
        "levels": " ".join(repr(a) for a in result.levels),
        "grid": _grid_meta(result.grid),
    }
    rows = [
        (c.axis1, c.n_signal, *c.rates, *c.pvalues.as_tuple(), c.median_statistic,
         c.mean_detected, c.seed)
        for c in result.cells
    ]
    atomic_write_text(path, _render("sweep", meta, sweep_columns(result.levels), rows))


def load_sweep(path) -> SweepResult:
    meta, header, rows = _read_table(path)
    if "schema_version" not in meta:
        raise SchemaVersionError("sweep table lacks schema_version", path=path)
    try:
        levels = tuple(float(a) for a in meta["levels"].split())
        n_trials = int(meta["n_trials"])
        master_seed = int(meta["master_seed"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad or missing sweep metadata: {exc}", path=path) from None
    expected = sweep_columns(levels)
    if header != expected:
        raise ParseError(f"columns {header} do not match {expected}", path=path)
    cells = []
    k = len(levels)
    for lineno, f in rows:
        if len(f) != len(expected):
            raise ParseError("wrong column count", path=path, line=lineno)
        v = [_parse_float(x, path, lineno) for x in f]
        cells.append(SweepCell(
            axis1=v[0],
            n_signal=int(v[1]),
            seed=int(f[-1]),
            rates=tuple(v[2:2 + k]),
            pvalues=PValueSummary(*v[2 + k:7 + k]),
            median_statistic=v[7 + k],
            mean_detected=v[8 + k],
        ))
    axis1 = tuple(dict.fromkeys(c.axis1 for c in cells))
    nts = tuple(dict.fromkeys(c.n_signal for c in cells))
    if len(axis1) * len(nts) != len(cells):
        raise ParseError("sweep rows do not form a full grid", path=path)
    n_ref = meta.get("n_reference", "")
    return SweepResult(
        family=meta.get("family", ""),
        axis_name=meta.get("axis", "axis1"),
        axis1_values=axis1,
        n_signal_values=nts,
        levels=levels,
        n_trials=n_trials,
        master_seed=master_seed,
        grid=_parse_grid_meta(meta.get("grid", ""), path),
        cells=tuple(cells),
        rng=meta.get("rng", ""),
        n_reference=int(n_ref) if n_ref else None,
    )


# --------------------------------------------------------------------------
# report series


def rejection_bar_series(result: SweepResult):
    """One bar per cell: rejected and accepted fractions at every level."""
    cols = ["axis1", "n_t"]
    for a in result.levels:
        cols += [f"reject@{a:g}", f"accept@{a:g}"]
    cols += list(BAR_TAIL_COLUMNS)
    rows = []
    for c in result.cells:
        row = [c.axis1, c.n_signal]
        for r in c.rates:
            row += [r, 1.0 - r]
        row.append(c.mean_detected)
        rows.append(tuple(row))
    return tuple(cols), rows


def pvalue_box_series(result: SweepResult):
    """Box centre (mean), edges (quartiles) and whiskers (extremes) per cell."""
    rows = [(c.axis1, c.n_signal, *c.pvalues.as_tuple()) for c in result.cells]
    return BOX_COLUMNS, rows


def write_series(columns, rows, path, meta=None, kind="series"):
    atomic_write_text(path, _render(kind, meta or {}, columns, rows))


def load_series(path):
    meta, header, rows = _read_table(path)
    return header, [tuple(_parse_float(x, path, ln) for x in f) for ln, f in rows]


# --------------------------------------------------------------------------
# archive


def write_archive(result: SweepResult, path, scenario_config=None):
    """Single JSON document holding the sweep definition, results and config."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "ghostks sweep archive",
        "family": result.family,
        "axis": result.axis_name,
        "master_seed": result.master_seed,
        "rng": result.rng,
        "n_trials": result.n_trials,
        "n_reference": result.n_reference,
        "levels": list(result.levels),
        "grid": result.grid.bin_centers.tolist(),
        "cells": [
            {
                "axis1": c.axis1,
                "n_t": c.n_signal,
                "cell_seed": c.seed,
                "rejection_rates": dict(zip((f"{a:g}" for a in result.levels), c.rates)),
                "p_values": dict(zip(("mean", "q25", "q75", "min", "max"), c.pvalues.as_tuple())),
                "median_statistic": c.median_statistic,
                "mean_detected": c.mean_detected,
            }
            for c in result.cells
        ],
    }
    if scenario_config is not None:
        doc["scenario_config"] = scenario_config
    atomic_write_text(path, json.dumps(doc, indent=1) + "\n")
