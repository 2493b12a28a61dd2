"""Rigid poses, point clouds and sensor-centric polar conversions.

Azimuths are measured in the horizontal (world XY) plane, counter-clockwise
positive when viewed from +Z, with 0 deg along the sensor's current heading.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import FrameError, GeometryError, HeadingDegenerate

SENSOR = "sensor"
WORLD = "world"

# Unit optical axis in the sensor frame for each supported convention.
OPTICAL_AXES = {
    "+z": np.array([0.0, 0.0, 1.0]),  # depth camera: x right, y down, z forward
    "+x": np.array([1.0, 0.0, 0.0]),  # body frame: x forward, y left, z up
}

# Maps camera (x right, y down, z forward) onto body (x forward, y left, z up).
_BODY_FROM_CAMERA = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])

MIN_HORIZONTAL = 1e-5


def _as_vec3(v, name):
    a = np.asarray(v, dtype=np.float64).reshape(-1)
    if a.shape != (3,):
        raise GeometryError(f"{name} must be a 3-vector, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Pose:
    """World-from-sensor rigid transform.

    ``t`` is the sensor position in metres and ``q`` the rotation as a unit
    quaternion in (w, x, y, z) order. The quaternion is normalized on
    construction.
    """

    t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self):
        t = _as_vec3(self.t, "t")
        q = np.asarray(self.q, dtype=np.float64).reshape(-1)
        if q.shape != (4,):
            raise GeometryError(f"quaternion must have 4 components, got {q.shape}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(q))):
            raise GeometryError("pose contains non-finite values")
        n = np.linalg.norm(q)
        if n < 1e-12:
            raise GeometryError("zero-length quaternion")
        q = q / n
        t.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "q", q)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_matrix(cls, rotation, t=(0.0, 0.0, 0.0)):
        x, y, z, w = Rotation.from_matrix(np.asarray(rotation, dtype=np.float64)).as_quat()
        return cls(t=t, q=(w, x, y, z))

    @classmethod
    def from_euler(cls, yaw_deg=0.0, pitch_deg=0.0, roll_deg=0.0, t=(0.0, 0.0, 0.0)):
        """Body-frame pose from intrinsic Z-Y-X (yaw, pitch, roll) angles in degrees.

        Positive pitch tilts the body +X axis downward (right-hand rule about +Y).
        """
        rot = Rotation.from_euler("ZYX", [yaw_deg, pitch_deg, roll_deg], degrees=True)
        return cls.from_matrix(rot.as_matrix(), t)

    @classmethod
    def camera(cls, position, yaw_deg=0.0, pitch_deg=0.0):
        """Depth-camera pose (optical axis +Z) looking along ``yaw_deg``.

        With zero yaw and pitch the optical axis points along world +X and
        image-down along world -Z. Positive pitch tilts the view upward.
        """
        body = Rotation.from_euler("ZY", [yaw_deg, -pitch_deg], degrees=True).as_matrix()
        return cls.from_matrix(body @ _BODY_FROM_CAMERA, position)

    @property
    def rotation(self):
        w, x, y, z = self.q
        return Rotation.from_quat([x, y, z, w]).as_matrix()

    def as_matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.t
        return m

    def inverse(self):
        w, x, y, z = self.q
        r_inv = self.rotation.T
        return Pose(t=-(r_inv @ self.t), q=(w, -x, -y, -z))

    def __matmul__(self, other):
        if isinstance(other, Pose):
            w1, x1, y1, z1 = self.q
            w2, x2, y2, z2 = other.q
            q = (
                w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
            )
            return Pose(t=self.rotation @ other.t + self.t, q=q)
        pts = np.asarray(other, dtype=np.float64)
        return pts @ self.rotation.T + self.t

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return bool(np.array_equal(self.t, other.t) and np.array_equal(self.q, other.q))

    def __hash__(self):
        return hash((self.t.tobytes(), self.q.tobytes()))


@dataclass(frozen=True)
class PointCloud:
    """An (N, 3) array of finite points tagged with its coordinate frame."""

    points: np.ndarray
    frame: str = SENSOR

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise GeometryError(f"points must have shape (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("point cloud contains non-finite coordinates")
        if self.frame not in (SENSOR, WORLD):
            raise GeometryError(f"unknown frame tag {self.frame!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


def transform_to_world(pose, cloud):
    if cloud.frame != SENSOR:
        raise FrameError("cloud is already in the world frame")
    return PointCloud(pose @ cloud.points, frame=WORLD)


def sensor_heading_2d(pose, axis="+z", min_horizontal=MIN_HORIZONTAL):
    """Optical axis of ``pose`` projected on the world XY plane, normalized."""
    try:
        local = OPTICAL_AXES[axis]
    except KeyError:
        raise GeometryError(f"unknown optical axis convention {axis!r}") from None
    d = pose.rotation @ local
    h = d[:2]
    n = float(np.hypot(h[0], h[1]))
    if n <= min_horizontal:
        raise HeadingDegenerate(f"optical axis is near vertical (horizontal component {n:.3g})")
    return h / n


def _wrap360(deg):
    out = np.mod(deg, 360.0)
    # mod of a tiny negative rounds up to exactly 360.0
    return np.where(out >= 360.0, 0.0, out)


def signed_azimuth_deg(heading, to_point):
    """Counter-clockwise angle from ``heading`` to ``to_point`` in [0, 360)."""
    h = np.asarray(heading, dtype=np.float64)
    v = np.asarray(to_point, dtype=np.float64)
    if np.hypot(v[0], v[1]) <= 1e-9:
        raise GeometryError("azimuth undefined for a zero-length vector")
    cross = h[0] * v[1] - h[1] * v[0]
    dot = h[0] * v[0] + h[1] * v[1]
    return float(_wrap360(np.degrees(np.arctan2(cross, dot))))


def azimuths_deg(heading, vectors):
    """Vectorized ``signed_azimuth_deg`` over an (N, 2) array; no length check."""
    h = np.asarray(heading, dtype=np.float64)
    v = np.asarray(vectors, dtype=np.float64)
    cross = h[0] * v[:, 1] - h[1] * v[:, 0]
    dot = h[0] * v[:, 0] + h[1] * v[:, 1]
    return _wrap360(np.degrees(np.arctan2(cross, dot)))


def rotate2d(v, deg):
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    v = np.asarray(v, dtype=np.float64)
    return np.stack([c * v[..., 0] - s * v[..., 1], s * v[..., 0] + c * v[..., 1]], axis=-1)


def heading_angle_deg(heading):
    """World bearing of a planar heading, CCW from +X, in [0, 360)."""
    return float(_wrap360(np.degrees(np.arctan2(heading[1], heading[0]))))
