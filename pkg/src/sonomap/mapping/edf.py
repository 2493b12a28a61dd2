"""Brute-force Euclidean distance field queries over a surface point set."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..errors import GeometryError

FALLBACK_GRADIENT = np.array([0.0, 0.0, 1.0])


def edf_query(surface, q):
    """Distance from ``q`` to the closest surface point and the unit gradient.

    The gradient points from the closest point towards ``q``. Ties go to the
    lowest point index. A query exactly on a surface point has no defined
    direction and returns ``FALLBACK_GRADIENT`` (+Z).
    """
    pts = getattr(surface, "points", surface)
    if len(pts) == 0:
        raise GeometryError("EDF query on an empty surface")
    q = np.asarray(q, dtype=np.float64)
    diff = q - pts
    d2 = np.einsum("ij,ij->i", diff, diff)
    i = int(np.argmin(d2))  # first minimum = lowest index
    dist = float(np.sqrt(d2[i]))
    if dist == 0.0:
        return 0.0, FALLBACK_GRADIENT.copy()
    return dist, diff[i] / dist


def edf_query_many(surface, queries):
    """KD-tree accelerated distances and gradients for an (M, 3) query array.

    Distances match :func:`edf_query` exactly; among equidistant points the
    chosen neighbour may differ.
    """
    pts = getattr(surface, "points", surface)
    if len(pts) == 0:
        raise GeometryError("EDF query on an empty surface")
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
    dist, idx = cKDTree(pts).query(queries)
    diff = queries - pts[idx]
    grad = np.tile(FALLBACK_GRADIENT, (len(queries), 1))
    nz = dist > 0
    grad[nz] = diff[nz] / dist[nz, None]
    return dist, grad
