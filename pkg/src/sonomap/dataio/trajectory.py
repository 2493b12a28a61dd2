"""TUM-layout trajectory files: ``timestamp tx ty tz qx qy qz qw`` per line."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from ..errors import FieldCountError, MonotonicityError, ParseError
from ..geometry import Pose


@dataclass(frozen=True)
class TrajectoryRecord:
    timestamp: float
    pose: Pose
    line: int


def parse_trajectory(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8 text ({exc.reason})", path=path, offset=exc.start) from None
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 8:
            raise FieldCountError(f"expected 8 fields, got {len(fields)}", path=path, line=lineno)
        try:
            values = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite value", path=path, line=lineno)
        ts, tx, ty, tz, qx, qy, qz, qw = values
        if records and ts <= records[-1].timestamp:
            raise MonotonicityError(
                f"timestamp {ts} not after previous {records[-1].timestamp}", path=path, line=lineno
            )
        norm = math.sqrt(qx * qx + qy * qy + qz * qz + qw * qw)
        if not 0.9 <= norm <= 1.1:
            raise ParseError(f"quaternion norm {norm:.4f} outside [0.9, 1.1]", path=path, line=lineno)
        records.append(TrajectoryRecord(ts, Pose(t=(tx, ty, tz), q=(qw, qx, qy, qz)), lineno))
    return records


def write_trajectory(path, stamped_poses):
    """Write ``(timestamp, Pose)`` pairs in the same layout ``parse_trajectory`` reads."""
    lines = ["# timestamp tx ty tz qx qy qz qw"]
    for ts, pose in stamped_poses:
        w, x, y, z = pose.q
        vals = [ts, *pose.t, x, y, z, w]
        lines.append(" ".join(repr(float(v)) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
