"""Sensor-centric circular (2D) and cylindrical (3D) minimum-range rasters.

Bin ``k`` of a raster covers azimuths [k, k+1) degrees measured
counter-clockwise from the sensor heading, so the rasters rotate with the
sensor. Unknown cells hold NaN.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import azimuths_deg, heading_angle_deg, sensor_heading_2d

N_BINS = 360


@dataclass(frozen=True)
class RasterParams:
    r_max: float = 10.0
    ground_band: float = 0.1
    height_cap: float = 2.0
    elevation_rows: int = 19
    sensor_height: float = 1.2
    optical_axis: str = "+z"
    # "sensor": cylinder elevations relative to the sensor; "floor": relative to the floor
    cylinder_reference: str = "sensor"

    def __post_init__(self):
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")
        if not 0 <= self.ground_band < self.height_cap:
            raise ValueError("need 0 <= ground_band < height_cap")
        if self.elevation_rows < 1:
            raise ValueError("elevation_rows must be >= 1")
        if self.cylinder_reference not in ("sensor", "floor"):
            raise ValueError(f"unknown cylinder_reference {self.cylinder_reference!r}")

    @property
    def row_height(self):
        return (self.height_cap - self.ground_band) / self.elevation_rows

    def row_centers(self):
        return self.ground_band + (np.arange(self.elevation_rows) + 0.5) * self.row_height


@dataclass
class CircularRaster:
    ranges: np.ndarray = field(default_factory=lambda: np.full(N_BINS, np.nan))
    center: np.ndarray | None = None
    heading: np.ndarray | None = None

    def __post_init__(self):
        self.ranges = np.asarray(self.ranges, dtype=np.float64)
        if self.ranges.shape != (N_BINS,):
            raise ValueError(f"circular raster needs {N_BINS} bins, got {self.ranges.shape}")

    @property
    def known(self):
        return ~np.isnan(self.ranges)

    @property
    def shape(self):
        return self.ranges.shape

    def bin_world_angles(self):
        """World bearing (deg, CCW from +X) of each bin's lower edge."""
        return (heading_angle_deg(self.heading) + np.arange(N_BINS)) % 360.0

    def __eq__(self, other):
        if not isinstance(other, CircularRaster):
            return NotImplemented
        return bool(np.array_equal(self.ranges, other.ranges, equal_nan=True))


@dataclass
class CylindricalRaster:
    """``ranges[row, column]``: row 0 is the lowest elevation band."""

    ranges: np.ndarray
    row_centers: np.ndarray
    center: np.ndarray | None = None
    heading: np.ndarray | None = None

    def __post_init__(self):
        self.ranges = np.asarray(self.ranges, dtype=np.float64)
        self.row_centers = np.asarray(self.row_centers, dtype=np.float64)
        if self.ranges.ndim != 2 or self.ranges.shape[1] != N_BINS:
            raise ValueError(f"cylindrical raster needs (rows, {N_BINS}) cells, got {self.ranges.shape}")
        if self.row_centers.shape != (self.ranges.shape[0],):
            raise ValueError("one row center per elevation row required")

    @classmethod
    def empty(cls, params=RasterParams(), center=None, heading=None):
        return cls(np.full((params.elevation_rows, N_BINS), np.nan), params.row_centers(), center, heading)

    @property
    def known(self):
        return ~np.isnan(self.ranges)

    @property
    def shape(self):
        return self.ranges.shape

    def __eq__(self, other):
        if not isinstance(other, CylindricalRaster):
            return NotImplemented
        return bool(
            np.array_equal(self.ranges, other.ranges, equal_nan=True)
            and np.allclose(self.row_centers, other.row_centers, rtol=0, atol=1e-9)
        )


def _points(surface):
    return np.asarray(getattr(surface, "points", surface), dtype=np.float64).reshape(-1, 3)


def floor_height(sensor_z, params):
    return sensor_z - params.sensor_height


def segment_ground(surface, sensor_z, params=RasterParams()):
    """Keep points whose height above the floor lies in (ground_band, height_cap]."""
    pts = _points(surface)
    h = pts[:, 2] - floor_height(sensor_z, params)
    keep = (h > params.ground_band) & (h <= params.height_cap)
    if hasattr(surface, "points"):
        return type(surface)(pts[keep], surface.voxel_size)
    return pts[keep]


def _polar(pts, pose, params):
    heading = sensor_heading_2d(pose, params.optical_axis)
    center = np.asarray(pose.t, dtype=np.float64)
    v = pts[:, :2] - center[:2]
    r = np.hypot(v[:, 0], v[:, 1])
    ok = (r <= params.r_max) & (r >= 1e-6)
    bins = np.floor(azimuths_deg(heading, v[ok])).astype(np.int64)
    np.clip(bins, 0, N_BINS - 1, out=bins)
    return heading, center, ok, r[ok], bins


def _footprint_bins(pts, pose, params, size):
    """Expand each point to every bin whose center bearing crosses its square footprint.

    Returns (point index, bin) pairs. A footprint that contains the sensor
    covers all bins.
    """
    heading = sensor_heading_2d(pose, params.optical_axis)
    center = np.asarray(pose.t, dtype=np.float64)
    v = pts[:, :2] - center[:2]
    r = np.hypot(v[:, 0], v[:, 1])
    ok = np.flatnonzero((r <= params.r_max) & (r >= 1e-6))
    v, r = v[ok], r[ok]
    az = azimuths_deg(heading, v)
    h = size / 2
    lo = np.zeros(len(v))
    hi = np.zeros(len(v))
    for sx, sy in ((-h, -h), (-h, h), (h, -h), (h, h)):
        off = (azimuths_deg(heading, v + [sx, sy]) - az + 180.0) % 360.0 - 180.0
        lo = np.minimum(lo, off)
        hi = np.maximum(hi, off)
    inside = (np.abs(v[:, 0]) <= h) & (np.abs(v[:, 1]) <= h)
    first = np.ceil(az + lo - 0.5).astype(np.int64)
    last = np.floor(az + hi - 0.5).astype(np.int64)
    first[inside] = 0
    last[inside] = N_BINS - 1
    count = np.maximum(last - first + 1, 0)
    idx = np.repeat(np.arange(len(v)), count)
    step = np.arange(count.sum()) - np.repeat(np.cumsum(count) - count, count)
    bins = (np.repeat(first, count) + step) % N_BINS
    return heading, center, ok[idx], r[idx], bins


def rasterize_circle(surface, pose, params=RasterParams(), footprint=None):
    """Minimum planar range per 1-degree bin; the input should be ground-segmented.

    By default each point lands in the bin containing its bearing. With
    ``footprint`` set (a voxel edge length), each point instead fills every
    bin whose center bearing passes through its square XY footprint, which
    keeps nearby voxelized surfaces from aliasing into alternating bins.
    """
    pts = _points(surface)
    if footprint:
        heading, center, _, r, bins = _footprint_bins(pts, pose, params, footprint)
    else:
        heading, center, _, r, bins = _polar(pts, pose, params)
    ranges = np.full(N_BINS, np.nan)
    np.fmin.at(ranges, bins, r)
    return CircularRaster(ranges, center.copy(), heading)


def cylinder_elevations(pts, pose, params):
    ref = pose.t[2] if params.cylinder_reference == "sensor" else floor_height(pose.t[2], params)
    return pts[:, 2] - ref


def rasterize_cylinder(surface, pose, params=RasterParams(), footprint=None):
    """Minimum planar range per (elevation row, 1-degree column).

    ``footprint`` works as in :func:`rasterize_circle`, and additionally
    spreads each point over the rows whose center height lies within its
    vertical extent.
    """
    pts = _points(surface)
    e = cylinder_elevations(pts, pose, params)
    out = CylindricalRaster.empty(params, None, None)
    if footprint:
        h = footprint / 2
        keep = (e + h >= params.ground_band) & (e - h <= params.height_cap)
        pts, e = pts[keep], e[keep]
        heading, center, ok, r, cols = _footprint_bins(pts, pose, params, footprint)
        e = e[ok]
        centers = params.row_centers()
        first = np.searchsorted(centers, e - h - 1e-9, side="left")
        last = np.searchsorted(centers, e + h + 1e-9, side="right") - 1
        count = np.maximum(last - first + 1, 0)
        step = np.arange(count.sum()) - np.repeat(np.cumsum(count) - count, count)
        rows = np.repeat(first, count) + step
        cols = np.repeat(cols, count)
        r = np.repeat(r, count)
    else:
        keep = (e >= params.ground_band) & (e <= params.height_cap)
        pts, e = pts[keep], e[keep]
        heading, center, ok, r, cols = _polar(pts, pose, params)
        rows = np.floor((e[ok] - params.ground_band) / params.row_height).astype(np.int64)
        np.clip(rows, 0, params.elevation_rows - 1, out=rows)
    out.center, out.heading = center.copy(), heading
    flat = out.ranges.reshape(-1)
    np.fmin.at(flat, rows * N_BINS + cols, r)
    return out


def depth_only_circle(frame, pose, params=RasterParams()):
    """Circle from one world-frame depth frame, without any fusion."""
    return rasterize_circle(segment_ground(frame.points, pose.t[2], params), pose, params)


def depth_only_cylinder(frame, pose, params=RasterParams()):
    return rasterize_cylinder(frame.points, pose, params)
