from .edf import edf_query, edf_query_many
from .voxel_map import FrameStats, MapSnapshot, SparseVoxelMap, SurfaceSet, extract_surface

__all__ = [
    "FrameStats",
    "MapSnapshot",
    "SparseVoxelMap",
    "SurfaceSet",
    "edf_query",
    "edf_query_many",
    "extract_surface",
]
