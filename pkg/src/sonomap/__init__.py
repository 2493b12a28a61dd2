"""Incremental voxel mapping, sensor-centric range rasters and binaural sonification."""

__version__ = "0.1.0"
