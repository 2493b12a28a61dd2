"""Numba kernels: open-addressing voxel hash table and ray-walk fusion.

Table layout (all arrays share one capacity, a power of two):
    keys[i]    packed voxel index, EMPTY or TOMB
    sdf[i]     fused signed distance (m)
    weight[i]  fusion weight
    hits[i]    number of surface observations
    meta       [live cell count, live + tombstone count]
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

EMPTY = -1
TOMB = -2
OFFSET = 1 << 20
MASK21 = (1 << 21) - 1
MAX_INDEX = OFFSET - 1
MAX_LOAD = 0.6


@njit(cache=True)
def pack(ix, iy, iz):
    return ((ix + OFFSET) << 42) | ((iy + OFFSET) << 21) | (iz + OFFSET)


@njit(cache=True)
def unpack(key):
    return ((key >> 42) & MASK21) - OFFSET, ((key >> 21) & MASK21) - OFFSET, (key & MASK21) - OFFSET


@njit(cache=True)
def _hash(key, mask):
    h = np.uint64(key) * np.uint64(0x9E3779B97F4A7C15)
    h ^= h >> np.uint64(29)
    return np.int64(h & np.uint64(mask))


@njit(cache=True)
def find(keys, key):
    mask = keys.shape[0] - 1
    i = _hash(key, mask)
    while True:
        k = keys[i]
        if k == key:
            return i
        if k == EMPTY:
            return -1
        i = (i + 1) & mask


@njit(cache=True)
def insert(keys, meta, key):
    """Slot for a key known to be absent; reuses the first tombstone on the probe path."""
    mask = keys.shape[0] - 1
    i = _hash(key, mask)
    while True:
        k = keys[i]
        if k == EMPTY:
            keys[i] = key
            meta[0] += 1
            meta[1] += 1
            return i
        if k == TOMB:
            keys[i] = key
            meta[0] += 1
            return i
        i = (i + 1) & mask


@njit(cache=True)
def rehash(keys, sdf, weight, hits, new_cap):
    nk = np.full(new_cap, EMPTY, dtype=np.int64)
    ns = np.zeros(new_cap)
    nw = np.zeros(new_cap)
    nh = np.zeros(new_cap, dtype=np.int64)
    meta = np.zeros(2, dtype=np.int64)
    for i in range(keys.shape[0]):
        if keys[i] >= 0:
            j = insert(nk, meta, keys[i])
            ns[j] = sdf[i]
            nw[j] = weight[i]
            nh[j] = hits[i]
    return nk, ns, nw, nh, meta


@njit(cache=True)
def integrate_rays(keys, sdf, weight, hits, meta, origin, points, start,
                   voxel_size, band, w_max, carve_rate, max_range, stats):
    """Fuse rays ``origin -> points[start:]`` one at a time.

    Returns the index of the first unprocessed ray; it is < len(points)
    only when the table needs to grow before continuing.
    stats: [touched, carved, erased, skipped]
    """
    n = points.shape[0]
    cap = keys.shape[0]
    per_ray = int(2.0 * band / voxel_size * 1.8) + 8
    ox, oy, oz = origin[0], origin[1], origin[2]
    for r in range(start, n):
        if meta[1] + per_ray > MAX_LOAD * cap:
            return r
        dx = points[r, 0] - ox
        dy = points[r, 1] - oy
        dz = points[r, 2] - oz
        t_m = math.sqrt(dx * dx + dy * dy + dz * dz)
        if t_m > max_range or t_m < 1e-9:
            stats[3] += 1
            continue
        dx /= t_m
        dy /= t_m
        dz /= t_m
        t_end = t_m + band
        ex = ox + dx * t_end
        ey = oy + dy * t_end
        ez = oz + dz * t_end
        ix = int(math.floor(ox / voxel_size))
        iy = int(math.floor(oy / voxel_size))
        iz = int(math.floor(oz / voxel_size))
        jx = int(math.floor(ex / voxel_size))
        jy = int(math.floor(ey / voxel_size))
        jz = int(math.floor(ez / voxel_size))
        if (max(abs(ix), abs(iy), abs(iz)) > MAX_INDEX or max(abs(jx), abs(jy), abs(jz)) > MAX_INDEX):
            stats[3] += 1
            continue
        sx = 1 if dx > 0 else -1
        sy = 1 if dy > 0 else -1
        sz = 1 if dz > 0 else -1
        inf = 1e300
        if dx != 0.0:
            bx = (ix + (1 if sx > 0 else 0)) * voxel_size
            tmx = (bx - ox) / dx
            tdx = voxel_size / abs(dx)
        else:
            tmx = inf
            tdx = inf
        if dy != 0.0:
            by = (iy + (1 if sy > 0 else 0)) * voxel_size
            tmy = (by - oy) / dy
            tdy = voxel_size / abs(dy)
        else:
            tmy = inf
            tdy = inf
        if dz != 0.0:
            bz = (iz + (1 if sz > 0 else 0)) * voxel_size
            tmz = (bz - oz) / dz
            tdz = voxel_size / abs(dz)
        else:
            tmz = inf
            tdz = inf
        max_steps = abs(jx - ix) + abs(jy - iy) + abs(jz - iz) + 1
        for _ in range(max_steps):
            cx = (ix + 0.5) * voxel_size - ox
            cy = (iy + 0.5) * voxel_size - oy
            cz = (iz + 0.5) * voxel_size - oz
            t_c = cx * dx + cy * dy + cz * dz
            key = pack(ix, iy, iz)
            if t_c < t_m - band:
                slot = find(keys, key)
                if slot >= 0:
                    weight[slot] -= carve_rate
                    stats[1] += 1
                    if weight[slot] <= 0.0:
                        keys[slot] = TOMB
                        sdf[slot] = 0.0
                        weight[slot] = 0.0
                        hits[slot] = 0
                        meta[0] -= 1
                        stats[2] += 1
            else:
                d = t_m - t_c
                if d > band:
                    d = band
                elif d < -band:
                    d = -band
                slot = find(keys, key)
                if slot < 0:
                    slot = insert(keys, meta, key)
                    sdf[slot] = d
                    weight[slot] = 1.0
                    hits[slot] = 1
                else:
                    w = weight[slot]
                    sdf[slot] = (w * sdf[slot] + d) / (w + 1.0)
                    weight[slot] = min(w + 1.0, w_max)
                    hits[slot] += 1
                stats[0] += 1
            if ix == jx and iy == jy and iz == jz:
                break
            if tmx < tmy:
                if tmx < tmz:
                    ix += sx
                    tmx += tdx
                else:
                    iz += sz
                    tmz += tdz
            else:
                if tmy < tmz:
                    iy += sy
                    tmy += tdy
                else:
                    iz += sz
                    tmz += tdz
    return n


@njit(cache=True)
def compact(keys, sdf, weight, hits):
    """Live cells sorted by packed key."""
    n = 0
    for i in range(keys.shape[0]):
        if keys[i] >= 0:
            n += 1
    k = np.empty(n, dtype=np.int64)
    s = np.empty(n)
    w = np.empty(n)
    h = np.empty(n, dtype=np.int64)
    j = 0
    for i in range(keys.shape[0]):
        if keys[i] >= 0:
            k[j] = keys[i]
            s[j] = sdf[i]
            w[j] = weight[i]
            h[j] = hits[i]
            j += 1
    order = np.argsort(k, kind="mergesort")
    return k[order], s[order], w[order], h[order]


@njit(cache=True)
def unpack_many(keys):
    out = np.empty((keys.shape[0], 3), dtype=np.int64)
    for i in range(keys.shape[0]):
        a, b, c = unpack(keys[i])
        out[i, 0] = a
        out[i, 1] = b
        out[i, 2] = c
    return out
