"""Synthetic rooms with box and cylinder obstacles, plus exact ray-cast oracles.

All primitives are axis-aligned (boxes) or vertical (cylinders), so every
intersection is closed-form. Obstacles may follow piecewise-linear motion
scripts indexed by frame number and may appear or vanish at given frames.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SceneError
from .geometry import SENSOR, PointCloud, Pose, heading_angle_deg, sensor_heading_2d
from .raster import N_BINS, CircularRaster, CylindricalRaster, RasterParams, floor_height

_EPS = 1e-12


def _slab(o, d, lo, hi):
    """Entry/exit ray parameters for an axis-aligned box; rays are rows of ``o``/``d``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (lo - o) * inv
        t2 = (hi - o) * inv
    # a ray parallel to a slab is unconstrained inside it and misses outside it
    par = d == 0
    inside = (o >= lo) & (o <= hi)
    t1 = np.where(par, np.where(inside, -np.inf, np.inf), t1)
    t2 = np.where(par, np.where(inside, np.inf, -np.inf), t2)
    t_in = np.max(np.minimum(t1, t2), axis=1)
    t_out = np.min(np.maximum(t1, t2), axis=1)
    return t_in, t_out


@dataclass
class Keyframe:
    frame: int
    position: np.ndarray


@dataclass
class Obstacle:
    """Base for moving obstacles; ``position`` is the reference point at rest."""

    position: np.ndarray
    motion: list = field(default_factory=list)
    present_from: int | None = None
    present_until: int | None = None

    def position_at(self, frame):
        if not self.motion:
            return np.asarray(self.position, dtype=np.float64)
        frames = np.array([k.frame for k in self.motion], dtype=np.float64)
        pos = np.array([k.position for k in self.motion], dtype=np.float64)
        return np.array([np.interp(frame, frames, pos[:, i]) for i in range(pos.shape[1])])

    def present(self, frame):
        if self.present_from is not None and frame < self.present_from:
            return False
        if self.present_until is not None and frame >= self.present_until:
            return False
        return True

    def scripted_positions(self):
        return [np.asarray(self.position, dtype=np.float64)] + [np.asarray(k.position, dtype=np.float64) for k in self.motion]


@dataclass
class Box(Obstacle):
    """Axis-aligned box; ``position`` is its center."""

    size: np.ndarray = field(default_factory=lambda: np.ones(3))

    def bounds(self, frame=0, position=None):
        c = self.position_at(frame) if position is None else np.asarray(position)
        h = np.asarray(self.size, dtype=np.float64) / 2
        return c - h, c + h

    def hit(self, o, d, frame):
        lo, hi = self.bounds(frame)
        t_in, t_out = _slab(o, d, lo, hi)
        return np.where((t_out >= t_in) & (t_in > _EPS), t_in, np.inf)

    def z_range(self, frame):
        lo, hi = self.bounds(frame)
        return lo[2], hi[2]


@dataclass
class Cylinder(Obstacle):
    """Vertical cylinder; ``position`` is the center of its bottom cap."""

    radius: float = 0.5
    height: float = 1.0

    def bounds(self, frame=0, position=None):
        b = self.position_at(frame) if position is None else np.asarray(position)
        r = self.radius
        return b - [r, r, 0.0], b + [r, r, self.height]

    def z_range(self, frame):
        b = self.position_at(frame)
        return b[2], b[2] + self.height

    def hit(self, o, d, frame):
        b = self.position_at(frame)
        z0, z1 = b[2], b[2] + self.height
        px, py = o[:, 0] - b[0], o[:, 1] - b[1]
        a = d[:, 0] ** 2 + d[:, 1] ** 2
        bb = 2 * (px * d[:, 0] + py * d[:, 1])
        c = px**2 + py**2 - self.radius**2
        disc = bb * bb - 4 * a * c
        best = np.full(len(o), np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            sq = np.sqrt(np.maximum(disc, 0))
            for t in ((-bb - sq) / (2 * a), (-bb + sq) / (2 * a)):
                z = o[:, 2] + t * d[:, 2]
                ok = (a > 0) & (disc >= 0) & (t > _EPS) & (z >= z0) & (z <= z1)
                best = np.where(ok & (t < best), t, best)
            for zc in (z0, z1):
                t = (zc - o[:, 2]) / d[:, 2]
                x = px + t * d[:, 0]
                y = py + t * d[:, 1]
                ok = (d[:, 2] != 0) & (t > _EPS) & (x * x + y * y <= self.radius**2)
                best = np.where(ok & (t < best), t, best)
        return best


@dataclass
class SceneSpec:
    room_min: np.ndarray
    room_size: np.ndarray
    obstacles: list = field(default_factory=list)

    def __post_init__(self):
        self.room_min = np.asarray(self.room_min, dtype=np.float64)
        self.room_size = np.asarray(self.room_size, dtype=np.float64)
        if self.room_min.shape != (3,) or self.room_size.shape != (3,) or np.any(self.room_size <= 0):
            raise SceneError("room needs a 3-vector min corner and positive size")
        self.validate()

    @property
    def room_max(self):
        return self.room_min + self.room_size

    def validate(self):
        lo, hi = self.room_min, self.room_max
        for i, ob in enumerate(self.obstacles):
            for pos in ob.scripted_positions():
                blo, bhi = ob.bounds(position=pos)
                if np.any(blo < lo - 1e-9) or np.any(bhi > hi + 1e-9):
                    raise SceneError(f"obstacle {i} leaves the room at scripted position {pos.tolist()}")

    def contains(self, p):
        p = np.asarray(p, dtype=np.float64)
        return bool(np.all(p > self.room_min) and np.all(p < self.room_max))

    def active(self, frame):
        return [ob for ob in self.obstacles if ob.present(frame)]

    def ray_cast(self, o, d, frame=0):
        """Nearest hit distance for each ray (rows of ``o``, unit rows of ``d``) from inside the room."""
        o = np.atleast_2d(np.asarray(o, dtype=np.float64))
        d = np.atleast_2d(np.asarray(d, dtype=np.float64))
        o = np.broadcast_to(o, d.shape)
        _, t_room = _slab(o, d, self.room_min, self.room_max)
        t = np.where(t_room > _EPS, t_room, np.inf)
        for ob in self.active(frame):
            t = np.minimum(t, ob.hit(o, d, frame))
        return t

    # --- JSON -----------------------------------------------------------
    @classmethod
    def from_dict(cls, doc):
        try:
            room = doc["room"]
            size = [room["width"], room["depth"], room["height"]]
            origin = room.get("origin", [-size[0] / 2, -size[1] / 2, 0.0])
            obstacles = [_obstacle_from_dict(o) for o in doc.get("obstacles", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise SceneError(f"malformed scene description: {exc!r}") from None
        return cls(origin, size, obstacles)

    @classmethod
    def load(cls, path):
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SceneError(f"{path}: line {exc.lineno}: invalid JSON ({exc.msg})") from None
        return cls.from_dict(doc)

    def to_dict(self):
        w, d, h = self.room_size.tolist()
        return {
            "room": {"width": w, "depth": d, "height": h, "origin": self.room_min.tolist()},
            "obstacles": [_obstacle_to_dict(o) for o in self.obstacles],
        }


def _obstacle_from_dict(o):
    motion = [Keyframe(int(k["frame"]), np.asarray(k["position"], dtype=np.float64)) for k in o.get("motion", [])]
    common = dict(
        position=np.asarray(o["position"], dtype=np.float64),
        motion=motion,
        present_from=o.get("present_from"),
        present_until=o.get("present_until"),
    )
    if o["type"] == "box":
        return Box(size=np.asarray(o["size"], dtype=np.float64), **common)
    if o["type"] == "cylinder":
        return Cylinder(radius=float(o["radius"]), height=float(o["height"]), **common)
    raise ValueError(f"unknown obstacle type {o['type']!r}")


def _obstacle_to_dict(o):
    d = {"position": np.asarray(o.position).tolist()}
    if isinstance(o, Box):
        d.update(type="box", size=np.asarray(o.size).tolist())
    else:
        d.update(type="cylinder", radius=o.radius, height=o.height)
    if o.motion:
        d["motion"] = [{"frame": k.frame, "position": np.asarray(k.position).tolist()} for k in o.motion]
    if o.present_from is not None:
        d["present_from"] = o.present_from
    if o.present_until is not None:
        d["present_until"] = o.present_until
    return d


@dataclass(frozen=True)
class CameraModel:
    """Pinhole depth camera sampling one ray per pixel on a regular image grid."""

    hfov_deg: float = 90.0
    vfov_deg: float = 90.0
    cols: int = 160
    rows: int = 120
    max_depth: float = 10.0
    optical_axis: str = "+z"

    def __post_init__(self):
        for f in (self.hfov_deg, self.vfov_deg):
            if not 0 < f < 180:
                raise ValueError("fields of view must lie in (0, 180) degrees")
        if self.cols < 1 or self.rows < 1:
            raise ValueError("camera needs at least one pixel")

    def ray_directions(self):
        """Unit pixel rays in the sensor frame, row-major (top row first)."""
        tx = np.tan(np.radians(self.hfov_deg) / 2)
        ty = np.tan(np.radians(self.vfov_deg) / 2)
        x = ((np.arange(self.cols) + 0.5) / self.cols * 2 - 1) * tx
        y = ((np.arange(self.rows) + 0.5) / self.rows * 2 - 1) * ty
        yy, xx = np.meshgrid(y, x, indexing="ij")
        if self.optical_axis == "+z":
            d = np.stack([xx, yy, np.ones_like(xx)], axis=-1)
        else:  # body frame: x forward, y left, z up
            d = np.stack([np.ones_like(xx), -xx, -yy], axis=-1)
        d = d.reshape(-1, 3)
        return d / np.linalg.norm(d, axis=1, keepdims=True)


def render_depth_frame(scene, pose, camera=CameraModel(), frame_index=0, noise_sigma=0.0, rng=None):
    """Sensor-frame point cloud seen by ``camera`` at ``pose``.

    Misses and hits beyond ``max_depth`` are omitted. With ``noise_sigma`` > 0
    each range gets independent Gaussian noise drawn from ``rng``.
    """
    d_local = camera.ray_directions()
    d_world = d_local @ pose.rotation.T
    t = scene.ray_cast(pose.t[None, :], d_world, frame_index)
    keep = np.isfinite(t) & (t <= camera.max_depth)
    t = t[keep]
    if noise_sigma > 0:
        rng = np.random.default_rng() if rng is None else rng
        t = t + rng.normal(0.0, noise_sigma, size=t.shape)
    return PointCloud(d_local[keep] * t[:, None], frame=SENSOR)


def pan_poses(position, n, start_yaw_deg=0.0, pitch_deg=0.0, sweep_deg=360.0):
    """``n`` camera poses turning counter-clockwise in place."""
    return [Pose.camera(position, start_yaw_deg + sweep_deg * i / n, pitch_deg) for i in range(n)]


def _check_pose(scene, pose):
    if not scene.contains(pose.t):
        raise SceneError(f"pose {pose.t.tolist()} is outside the room")


def _bin_directions(pose, params, offset=0.5):
    heading = sensor_heading_2d(pose, params.optical_axis)
    ang = np.radians(heading_angle_deg(heading) + np.arange(N_BINS) + offset)
    return heading, np.stack([np.cos(ang), np.sin(ang), np.zeros(N_BINS)], axis=1)


def _horizontal_hits(scene, primitives, origin_xy, z, dirs, frame):
    o = np.tile([origin_xy[0], origin_xy[1], z], (len(dirs), 1))
    t = np.full(len(dirs), np.inf)
    for prim in primitives:
        t = np.minimum(t, prim.hit(o, dirs, frame))
    return t


def room_planar_range(scene, origin_xy, angles_rad):
    """Exact distance from ``origin_xy`` to the room walls along each planar direction."""
    d = np.stack([np.cos(angles_rad), np.sin(angles_rad), np.zeros_like(angles_rad)], axis=1)
    o = np.tile([origin_xy[0], origin_xy[1], scene.room_min[2] + scene.room_size[2] / 2], (len(d), 1))
    _, t_out = _slab(o, d, scene.room_min, scene.room_max)
    return t_out


def analytic_circle(scene, pose, params=RasterParams(), frame_index=0):
    """Ground-truth circle: exact nearest hit along each bin-center bearing.

    Walls and obstacles count when their vertical extent overlaps the
    (ground_band, height_cap] band above the floor.
    """
    _check_pose(scene, pose)
    heading, dirs = _bin_directions(pose, params)
    floor = floor_height(pose.t[2], params)
    band_lo, band_hi = floor + params.ground_band, floor + params.height_cap
    t = np.full(N_BINS, np.inf)
    room_lo, room_hi = scene.room_min[2], scene.room_max[2]
    if room_hi > band_lo and room_lo <= band_hi:
        t = room_planar_range(scene, pose.t, np.arctan2(dirs[:, 1], dirs[:, 0]))
    for ob in scene.active(frame_index):
        z0, z1 = ob.z_range(frame_index)
        if z1 > band_lo and z0 <= band_hi:
            z = (max(z0, band_lo) + min(z1, band_hi)) / 2
            t = np.minimum(t, _horizontal_hits(scene, [ob], pose.t, z, dirs, frame_index))
    ranges = np.where(t <= params.r_max, t, np.nan)
    return CircularRaster(ranges, np.asarray(pose.t).copy(), heading)


def analytic_cylinder(scene, pose, params=RasterParams(), frame_index=0):
    """Ground-truth cylinder: a horizontal ray per (column center, row-center height)."""
    _check_pose(scene, pose)
    heading, dirs = _bin_directions(pose, params)
    if params.cylinder_reference == "sensor":
        ref = pose.t[2]
    else:
        ref = floor_height(pose.t[2], params)
    out = CylindricalRaster.empty(params, np.asarray(pose.t).copy(), heading)
    room_lo, room_hi = scene.room_min[2], scene.room_max[2]
    active = scene.active(frame_index)
    for row, e in enumerate(params.row_centers()):
        z = ref + e
        if not room_lo <= z <= room_hi:
            continue
        t = room_planar_range(scene, pose.t, np.arctan2(dirs[:, 1], dirs[:, 0]))
        for ob in active:
            z0, z1 = ob.z_range(frame_index)
            if z0 <= z <= z1:
                t = np.minimum(t, _horizontal_hits(scene, [ob], pose.t, z, dirs, frame_index))
        out.ranges[row] = np.where(t <= params.r_max, t, np.nan)
    return out
