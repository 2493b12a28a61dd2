"""Sparse hashed voxel grid with projective signed-distance fusion and free-space carving."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from ..errors import FrameError, GeometryError
from ..geometry import WORLD
from . import _kernels as K


@dataclass(frozen=True)
class FrameStats:
    points: int
    skipped: int
    touched: int
    carved: int
    erased: int
    elapsed_ms: float


@dataclass(frozen=True)
class SurfaceSet:
    """World-frame centers of zero-crossing voxels, ordered by voxel key."""

    points: np.ndarray
    voxel_size: float

    def __len__(self):
        return len(self.points)


class MapSnapshot:
    """Immutable copy of the live cells, sorted by packed voxel key."""

    def __init__(self, voxel_size, truncation_band, w_surface_min, keys, sdf, weight, hits):
        self.voxel_size = voxel_size
        self.truncation_band = truncation_band
        self.w_surface_min = w_surface_min
        for a in (keys, sdf, weight, hits):
            a.setflags(write=False)
        self.keys, self.sdf, self.weight, self.hits = keys, sdf, weight, hits

    def __len__(self):
        return len(self.keys)

    @property
    def indices(self):
        return K.unpack_many(self.keys)

    @property
    def centers(self):
        return (self.indices + 0.5) * self.voxel_size


class SparseVoxelMap:
    """Hash-indexed voxel grid fusing posed world-frame point clouds.

    Each ray from the sensor to a measured point is walked voxel by voxel.
    Voxels whose centers project within ``truncation_band`` of the
    measurement along the ray receive a weighted-average update of the
    projective signed distance; voxels closer to the sensor than that lose
    ``carve_rate`` weight and are erased once their weight reaches zero.
    """

    def __init__(self, voxel_size=0.05, truncation_band=None, w_max=100.0, carve_rate=1.0,
                 max_range=10.0, w_surface_min=2.0, capacity=1 << 16):
        if voxel_size <= 0:
            raise ValueError("voxel_size must be positive")
        self.voxel_size = float(voxel_size)
        self.truncation_band = float(3 * voxel_size if truncation_band is None else truncation_band)
        self.w_max = float(w_max)
        self.carve_rate = float(carve_rate)
        self.max_range = float(max_range)
        self.w_surface_min = float(w_surface_min)
        cap = 1 << max(8, int(np.ceil(np.log2(capacity))))
        self._keys = np.full(cap, K.EMPTY, dtype=np.int64)
        self._sdf = np.zeros(cap)
        self._weight = np.zeros(cap)
        self._hits = np.zeros(cap, dtype=np.int64)
        self._meta = np.zeros(2, dtype=np.int64)

    def __len__(self):
        return int(self._meta[0])

    @property
    def capacity(self):
        return len(self._keys)

    def voxel_index(self, p):
        return tuple(int(i) for i in np.floor(np.asarray(p, dtype=np.float64) / self.voxel_size))

    def voxel_center(self, index):
        return (np.asarray(index, dtype=np.float64) + 0.5) * self.voxel_size

    def cell(self, index):
        """``(sdf, weight, hits)`` of a voxel index, or None if absent."""
        slot = K.find(self._keys, K.pack(*(int(i) for i in index)))
        if slot < 0:
            return None
        return float(self._sdf[slot]), float(self._weight[slot]), int(self._hits[slot])

    def cell_at(self, point):
        return self.cell(self.voxel_index(point))

    def _grow(self, min_cap):
        cap = self.capacity
        while self._meta[0] * 4 > cap or cap < max(min_cap, 256):
            cap *= 2
        self._keys, self._sdf, self._weight, self._hits, self._meta = K.rehash(
            self._keys, self._sdf, self._weight, self._hits, cap
        )

    def integrate_frame(self, pose, cloud):
        if cloud.frame != WORLD:
            raise FrameError("integrate_frame expects a world-frame cloud")
        if not (np.all(np.isfinite(pose.t)) and np.all(np.isfinite(pose.q))):
            raise GeometryError("non-finite pose")
        start_time = time.perf_counter()
        pts = np.ascontiguousarray(cloud.points, dtype=np.float64)
        origin = np.ascontiguousarray(pose.t, dtype=np.float64)
        stats = np.zeros(4, dtype=np.int64)
        i = 0
        while True:
            i = K.integrate_rays(
                self._keys, self._sdf, self._weight, self._hits, self._meta, origin, pts, i,
                self.voxel_size, self.truncation_band, self.w_max, self.carve_rate, self.max_range, stats,
            )
            if i >= len(pts):
                break
            self._grow(self.capacity * 2 if self._meta[0] * 4 > self.capacity else self.capacity)
        elapsed = (time.perf_counter() - start_time) * 1e3
        return FrameStats(len(pts), int(stats[3]), int(stats[0]), int(stats[1]), int(stats[2]), elapsed)

    def snapshot(self):
        k, s, w, h = K.compact(self._keys, self._sdf, self._weight, self._hits)
        return MapSnapshot(self.voxel_size, self.truncation_band, self.w_surface_min, k, s, w, h)

    def dump_csv(self, path):
        """Debug dump, one ``ix,iy,iz,sdf,weight`` row per live voxel in key order."""
        snap = self.snapshot()
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["ix", "iy", "iz", "sdf", "weight"])
            for (ix, iy, iz), s, w in zip(snap.indices.tolist(), snap.sdf.tolist(), snap.weight.tolist()):
                out.writerow([ix, iy, iz, repr(s), repr(w)])


_NEIGHBOR_STEPS = (1 << 42, 1 << 21, 1)  # +1 in x, y, z of a packed key


def _crossing_side(keys, sdf, voxel_size):
    """Voxels on the nearer side of a sign change with a face neighbour.

    Ties go to the positive (sensor-facing) voxel. Only voxels within one
    voxel size of the crossing count, so truncated free/occupied pairs far
    from any surface are ignored.
    """
    out = np.zeros(len(keys), dtype=bool)
    mag = np.abs(sdf)
    cand = mag < voxel_size
    for step in _NEIGHBOR_STEPS:
        for nk in (keys + step, keys - step):
            j = np.searchsorted(keys, nk)
            j[j == len(keys)] = 0
            found = keys[j] == nk
            su = sdf[j]
            cross = found & ((sdf > 0) != (su > 0)) & (sdf != 0) & (su != 0)
            near = (mag < np.abs(su)) | ((mag == np.abs(su)) & (sdf > 0))
            out |= cross & near & cand
    return out


def extract_surface(source, w_surface_min=None, zero_crossing=True):
    """Centers of surface voxels with enough weight.

    A voxel is surface when ``|sdf| < voxel_size / 2``. With
    ``zero_crossing`` (the default) a voxel is also surface when it is the
    nearer side of a sign change with a face neighbour: a surface lying on
    a voxel face, or seen obliquely, leaves both neighbouring centers at or
    beyond half a voxel of projective distance and would otherwise vanish.
    """
    snap = source.snapshot() if isinstance(source, SparseVoxelMap) else source
    wmin = snap.w_surface_min if w_surface_min is None else w_surface_min
    ok = snap.weight >= wmin
    keys, sdf = snap.keys[ok], snap.sdf[ok]
    sel = np.abs(sdf) < snap.voxel_size / 2
    if zero_crossing and len(keys):
        sel |= _crossing_side(keys, sdf, snap.voxel_size)
    idx = K.unpack_many(keys[sel])
    return SurfaceSet((idx + 0.5) * snap.voxel_size, snap.voxel_size)
