"""CSV serialization for rasters, per-frame metrics and sonification events.

Floats are written with ``repr`` so every finite value reads back exactly.
Unknown raster cells have an empty range and ``known=0``.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from ..errors import ParseError
from ..raster import N_BINS, CircularRaster, CylindricalRaster

CIRCLE_HEADER = ["angle_deg", "range_m", "known"]
CYLINDER_HEADER = ["angle_deg", "elevation_m", "range_m", "known"]
METRICS_HEADER = ["frame_index", "rmse_m", "coverage_fraction", "elapsed_ms"]
EVENTS_HEADER = ["onset_s", "sector", "kind", "azimuth_deg", "distance_m", "semitones"]


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_circle_csv(path, raster):
    fh, out = _writer(path)
    with fh:
        out.writerow(CIRCLE_HEADER)
        for k, r in enumerate(raster.ranges.tolist()):
            known = not math.isnan(r)
            out.writerow([k, _fmt(r) if known else "", int(known)])


def write_cylinder_csv(path, raster):
    fh, out = _writer(path)
    with fh:
        out.writerow(CYLINDER_HEADER)
        elevations = [repr(round(float(e), 9)) for e in raster.row_centers]
        for k in range(N_BINS):
            for row, elev in enumerate(elevations):
                r = float(raster.ranges[row, k])
                known = not math.isnan(r)
                out.writerow([k, elev, _fmt(r) if known else "", int(known)])


def _rows(path, header):
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise ParseError("not UTF-8 text", path=path, offset=exc.start) from None
    if not rows or rows[0] != header:
        raise ParseError(f"expected header {','.join(header)}", path=path, line=1)
    return path, rows[1:]


def _parse_cell(path, lineno, value, known):
    if known not in ("0", "1"):
        raise ParseError(f"known flag must be 0 or 1, got {known!r}", path=path, line=lineno)
    if known == "0":
        if value != "":
            raise ParseError("unknown cell must have an empty range", path=path, line=lineno)
        return np.nan
    try:
        r = float(value)
    except ValueError:
        raise ParseError(f"bad range {value!r}", path=path, line=lineno) from None
    if not (math.isfinite(r) and r >= 0):
        raise ParseError(f"range must be finite and non-negative, got {value!r}", path=path, line=lineno)
    return r


def read_circle_csv(path):
    path, rows = _rows(path, CIRCLE_HEADER)
    if len(rows) != N_BINS:
        raise ParseError(f"expected {N_BINS} rows, got {len(rows)}", path=path, line=len(rows) + 1)
    ranges = np.full(N_BINS, np.nan)
    for i, row in enumerate(rows):
        lineno = i + 2
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", path=path, line=lineno)
        if row[0] != str(i):
            raise ParseError(f"expected angle {i}, got {row[0]!r}", path=path, line=lineno)
        ranges[i] = _parse_cell(path, lineno, row[1], row[2])
    return CircularRaster(ranges)


def read_cylinder_csv(path):
    path, rows = _rows(path, CYLINDER_HEADER)
    if not rows or len(rows) % N_BINS:
        raise ParseError(f"row count {len(rows)} is not a multiple of {N_BINS}", path=path, line=len(rows) + 1)
    n_rows = len(rows) // N_BINS
    ranges = np.full((n_rows, N_BINS), np.nan)
    elevations = [None] * n_rows
    for i, row in enumerate(rows):
        lineno = i + 2
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", path=path, line=lineno)
        k, er = divmod(i, n_rows)
        if row[0] != str(k):
            raise ParseError(f"expected angle {k}, got {row[0]!r}", path=path, line=lineno)
        if elevations[er] is None:
            elevations[er] = row[1]
        elif row[1] != elevations[er]:
            raise ParseError(f"elevation {row[1]!r} breaks the row layout", path=path, line=lineno)
        ranges[er, k] = _parse_cell(path, lineno, row[2], row[3])
    try:
        centers = np.array([float(e) for e in elevations])
    except ValueError:
        raise ParseError("non-numeric elevation", path=path, line=2) from None
    if not np.all(np.isfinite(centers)) or np.any(np.diff(centers) <= 0):
        raise ParseError("elevations must increase within each angle", path=path, line=2)
    return CylindricalRaster(ranges, centers)


def write_metrics_csv(path, metrics, with_timing=True):
    """Rows of ``frame_index,rmse_m,coverage_fraction,elapsed_ms`` (circle figures)."""
    fh, out = _writer(path)
    with fh:
        out.writerow(METRICS_HEADER)
        for m in metrics:
            elapsed = f"{m.elapsed_total_ms:.3f}" if with_timing else ""
            out.writerow([m.frame_index, _fmt(m.rmse_m), _fmt(m.coverage), elapsed])


def write_metrics_detail_csv(path, metrics, with_timing=True):
    cols = ["frame_index", "rmse_m", "rmse_cyl_m", "coverage", "coverage_cyl",
            "depth_rmse_m", "depth_rmse_cyl_m", "depth_coverage", "depth_coverage_cyl",
            "fuse_ms", "circle_ms", "cylinder_ms"]
    fh, out = _writer(path)
    with fh:
        out.writerow(cols)
        for m in metrics:
            row = [getattr(m, c) for c in cols]
            if with_timing:
                row[-3:] = [f"{v:.3f}" for v in row[-3:]]
            else:
                row[-3:] = ["", "", ""]
            out.writerow([_fmt(v) for v in row])


def read_metrics_csv(path):
    path, rows = _rows(path, METRICS_HEADER)
    out = []
    for i, row in enumerate(rows):
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", path=path, line=i + 2)
        try:
            out.append({
                "frame_index": int(row[0]),
                "rmse_m": float(row[1]) if row[1] else None,
                "coverage_fraction": float(row[2]) if row[2] else None,
                "elapsed_ms": float(row[3]) if row[3] else None,
            })
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=i + 2) from None
    return out


def write_events_csv(path, events):
    fh, out = _writer(path)
    with fh:
        out.writerow(EVENTS_HEADER)
        for e in events:
            out.writerow([
                _fmt(e.onset_s), e.sector, e.kind, _fmt(e.azimuth_deg),
                _fmt(e.distance_m), e.semitones,
            ])


def read_events_csv(path):
    path, rows = _rows(path, EVENTS_HEADER)
    out = []
    for i, row in enumerate(rows):
        if len(row) != 6:
            raise ParseError(f"expected 6 fields, got {len(row)}", path=path, line=i + 2)
        try:
            out.append({
                "onset_s": float(row[0]),
                "sector": int(row[1]),
                "kind": row[2],
                "azimuth_deg": float(row[3]),
                "distance_m": float(row[4]) if row[4] else None,
                "semitones": int(row[5]),
            })
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=i + 2) from None
    return out
