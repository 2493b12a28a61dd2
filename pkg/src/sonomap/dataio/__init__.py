from .brir_manifest import parse_brir_manifest
from .csvio import (
    read_circle_csv,
    read_cylinder_csv,
    read_events_csv,
    read_metrics_csv,
    write_circle_csv,
    write_cylinder_csv,
    write_events_csv,
    write_metrics_csv,
    write_metrics_detail_csv,
)
from .ply import NonFiniteVerticesWarning, parse_ply, write_ply
from .trajectory import TrajectoryRecord, parse_trajectory, write_trajectory
from .wav import AudioBuffer, read_wav, write_pcm16, write_wav

__all__ = [
    "AudioBuffer",
    "NonFiniteVerticesWarning",
    "TrajectoryRecord",
    "parse_brir_manifest",
    "parse_ply",
    "parse_trajectory",
    "read_circle_csv",
    "read_cylinder_csv",
    "read_events_csv",
    "read_metrics_csv",
    "read_wav",
    "write_circle_csv",
    "write_cylinder_csv",
    "write_events_csv",
    "write_metrics_csv",
    "write_metrics_detail_csv",
    "write_pcm16",
    "write_ply",
    "write_trajectory",
    "write_wav",
]
