"""Accuracy, coverage and timing metrics, plus the EDF-vs-circle bearing comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import heading_angle_deg
from .mapping.edf import edf_query_many
from .raster import N_BINS


def _ranges(r):
    return np.asarray(getattr(r, "ranges", r), dtype=np.float64)


def rmse(estimate, truth):
    """RMSE over cells known in both rasters; None when they share no cell."""
    a, b = _ranges(estimate), _ranges(truth)
    if a.shape != b.shape:
        raise ValueError(f"raster shapes differ: {a.shape} vs {b.shape}")
    both = ~np.isnan(a) & ~np.isnan(b)
    if not both.any():
        return None
    return float(np.sqrt(np.mean((a[both] - b[both]) ** 2)))


def coverage(estimate, reference):
    """Fraction of the reference's known cells that the estimate also knows."""
    a, b = _ranges(estimate), _ranges(reference)
    if a.shape != b.shape:
        raise ValueError(f"raster shapes differ: {a.shape} vs {b.shape}")
    ref = ~np.isnan(b)
    n = int(ref.sum())
    if n == 0:
        raise ValueError("reference raster has no known cells")
    return float((ref & ~np.isnan(a)).sum() / n)


@dataclass
class FrameMetrics:
    frame_index: int
    rmse_m: float | None = None
    rmse_cyl_m: float | None = None
    coverage: float | None = None
    coverage_cyl: float | None = None
    depth_rmse_m: float | None = None
    depth_rmse_cyl_m: float | None = None
    depth_coverage: float | None = None
    depth_coverage_cyl: float | None = None
    fuse_ms: float = 0.0
    circle_ms: float = 0.0
    cylinder_ms: float = 0.0

    @property
    def elapsed_total_ms(self):
        return self.fuse_ms + self.circle_ms + self.cylinder_ms


def timing_summary(metrics):
    """Per-stage median and max in milliseconds."""
    out = {}
    for stage in ("fuse_ms", "circle_ms", "cylinder_ms", "elapsed_total_ms"):
        v = np.array([getattr(m, stage) for m in metrics], dtype=np.float64)
        out[stage] = {"median": float(np.median(v)) if len(v) else None,
                      "max": float(v.max()) if len(v) else None}
    return out


def _wrap180(deg):
    return (np.asarray(deg) + 180.0) % 360.0 - 180.0


@dataclass
class BearingComparison:
    """Per-bin comparison arrays; index ``i`` refers to ``bins[i]``."""

    bins: np.ndarray
    circle_bearing_deg: np.ndarray   # world bearing of each bin-center ray
    circle_dir: np.ndarray           # (M, 2) unit ray directions
    circle_range: np.ndarray
    query_points: np.ndarray         # (M, 3)
    edf_distance: np.ndarray
    edf_gradient: np.ndarray         # (M, 3) unit gradients
    edf_bearing_deg: np.ndarray      # world bearing of the gradient's XY part
    angle_diff_deg: np.ndarray       # in [0, 180]

    def __len__(self):
        return len(self.bins)

    def rows(self):
        for i in range(len(self.bins)):
            yield {
                "bin": int(self.bins[i]),
                "circle_bearing_deg": float(self.circle_bearing_deg[i]),
                "circle_dir_x": float(self.circle_dir[i, 0]),
                "circle_dir_y": float(self.circle_dir[i, 1]),
                "circle_range_m": float(self.circle_range[i]),
                "edf_distance_m": float(self.edf_distance[i]),
                "edf_grad_x": float(self.edf_gradient[i, 0]),
                "edf_grad_y": float(self.edf_gradient[i, 1]),
                "edf_grad_z": float(self.edf_gradient[i, 2]),
                "edf_bearing_deg": float(self.edf_bearing_deg[i]),
                "angle_diff_deg": float(self.angle_diff_deg[i]),
            }


def edf_bearing_compare(circle, surface, pose, radius=1.0):
    """Query the EDF at each known bin's point on a circle around the sensor.

    The query points sit at sensor height, ``radius`` metres out along each
    known bin's center bearing.
    """
    known = np.flatnonzero(~np.isnan(circle.ranges))
    base = heading_angle_deg(circle.heading)
    bearing = (base + known + 0.5) % 360.0
    rad = np.radians(bearing)
    dirs = np.stack([np.cos(rad), np.sin(rad)], axis=1)
    center = np.asarray(pose.t, dtype=np.float64)
    q = np.column_stack([center[:2] + radius * dirs, np.full(len(known), center[2])])
    if len(known):
        dist, grad = edf_query_many(surface, q)
    else:
        edf_query_many(surface, np.zeros((1, 3)))  # raises on an empty surface
        dist, grad = np.zeros(0), np.zeros((0, 3))
    edf_bearing = np.degrees(np.arctan2(grad[:, 1], grad[:, 0])) % 360.0
    diff = np.abs(_wrap180(edf_bearing - bearing))
    return BearingComparison(known, bearing, dirs, circle.ranges[known], q, dist, grad, edf_bearing, diff)


def bearing_total_variation(bearings_deg, cyclic=False):
    """Sum of absolute wrapped differences between consecutive bearings."""
    b = np.asarray(bearings_deg, dtype=np.float64)
    if len(b) < 2:
        return 0.0
    d = np.diff(b)
    if cyclic:
        d = np.append(d, b[0] - b[-1])
    return float(np.abs(_wrap180(d)).sum())


def adjacent_total_variation(comparison):
    """Total variation of circle and EDF bearings over pairs of adjacent known bins.

    Returns (circle_tv, edf_tv). Only bins ``k`` and ``k+1`` (mod 360) that are
    both known contribute.
    """
    bins = comparison.bins
    pos = {int(b): i for i, b in enumerate(bins)}
    circle_tv = edf_tv = 0.0
    for i, b in enumerate(bins):
        j = pos.get((int(b) + 1) % N_BINS)
        if j is None or (len(bins) == 1):
            continue
        circle_tv += abs(float(_wrap180(comparison.circle_bearing_deg[j] - comparison.circle_bearing_deg[i])))
        edf_tv += abs(float(_wrap180(comparison.edf_bearing_deg[j] - comparison.edf_bearing_deg[i])))
    return circle_tv, edf_tv
