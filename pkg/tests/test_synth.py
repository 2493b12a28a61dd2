from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sonomap.errors import SceneError
from sonomap.geometry import Pose
from sonomap.raster import RasterParams
from sonomap.synth import (
    Box,
    CameraModel,
    Cylinder,
    Keyframe,
    SceneSpec,
    analytic_circle,
    analytic_cylinder,
    pan_poses,
    render_depth_frame,
)

ROOM = dict(room_min=[-2, -2, 0], room_size=[4, 4, 2.5])


def wall_distance(o, theta, lo=(-2, -2), hi=(2, 2)):
    """Independent formula: nearest positive wall crossing along a planar direction."""
    c, s = math.cos(theta), math.sin(theta)
    ts = []
    if c > 1e-15:
        ts.append((hi[0] - o[0]) / c)
    if c < -1e-15:
        ts.append((lo[0] - o[0]) / c)
    if s > 1e-15:
        ts.append((hi[1] - o[1]) / s)
    if s < -1e-15:
        ts.append((lo[1] - o[1]) / s)
    return min(ts)


def test_centered_room_examples():
    scene = SceneSpec(**ROOM)
    c = analytic_circle(scene, Pose.camera((0, 0, 1.2)))
    # rays go through bin centers (k + 0.5 deg)
    assert c.ranges[0] == pytest.approx(2 / math.cos(math.radians(0.5)), abs=1e-12)
    assert c.ranges[90] == pytest.approx(2 / math.cos(math.radians(0.5)), abs=1e-12)
    assert c.ranges[45] == pytest.approx(2 / math.cos(math.radians(44.5)), abs=1e-12)
    assert abs(c.ranges[0] - 2.0) < 1e-4
    assert abs(c.ranges[45] - 2 * math.sqrt(2)) < 0.025  # within half a voxel of the corner


def test_empty_room_monte_carlo():
    scene = SceneSpec(**ROOM)
    rng = np.random.default_rng(0)
    o = np.array([0.37, -0.81, 1.1])
    theta = rng.uniform(0, 2 * np.pi, 100_000)
    d = np.column_stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)])
    t = scene.ray_cast(o, d)
    expect = np.array([wall_distance(o, a) for a in theta])
    assert np.max(np.abs(t - expect)) < 1e-6
    pose = Pose.camera(o, yaw_deg=33.0)
    c = analytic_circle(scene, pose)
    bins = np.radians(33.0 + np.arange(360) + 0.5)
    assert np.allclose(c.ranges, [wall_distance(o, a) for a in bins], atol=1e-9)


def test_cylinder_ahead():
    scene = SceneSpec(**ROOM, obstacles=[Cylinder(position=np.array([1.0, 0, 0]), radius=0.5, height=1.5)])
    c = analytic_circle(scene, Pose.camera((0, 0, 1.2)))
    # chord geometry for the 0.5 deg ray
    a = math.radians(0.5)
    expect = math.cos(a) - math.sqrt(0.25 - math.sin(a) ** 2)
    assert c.ranges[0] == pytest.approx(expect, abs=1e-12)
    assert abs(c.ranges[0] - 0.5) < 1e-3


def test_box_vanishes_at_frame():
    box = Box(position=np.array([1.0, 0, 0.5]), size=np.array([0.2, 1.0, 1.0]), present_until=50)
    scene = SceneSpec(**ROOM, obstacles=[box])
    pose = Pose.camera((0, 0, 1.2))
    before = analytic_circle(scene, pose, frame_index=49)
    after = analytic_circle(scene, pose, frame_index=50)
    assert before.ranges[0] == pytest.approx(0.9 / math.cos(math.radians(0.5)))
    assert after.ranges[0] == pytest.approx(2 / math.cos(math.radians(0.5)))


def test_motion_interpolates():
    box = Box(position=np.array([1.0, 0, 0.5]), size=np.ones(3) * 0.2,
              motion=[Keyframe(0, np.array([1.0, 0, 0.5])), Keyframe(10, np.array([1.0, 1.0, 0.5]))])
    assert np.allclose(box.position_at(5), [1.0, 0.5, 0.5])
    assert np.allclose(box.position_at(20), [1.0, 1.0, 0.5])


def test_obstacle_outside_room_rejected():
    with pytest.raises(SceneError):
        SceneSpec(**ROOM, obstacles=[Box(position=np.array([1.95, 0, 0.5]), size=np.ones(3) * 0.2)])
    with pytest.raises(SceneError):
        SceneSpec(**ROOM, obstacles=[Box(position=np.array([0.0, 0, 0.5]), size=np.ones(3) * 0.2,
                                         motion=[Keyframe(3, np.array([5.0, 0, 0.5]))])])


def test_pose_outside_room_rejected():
    with pytest.raises(SceneError):
        analytic_circle(SceneSpec(**ROOM), Pose.camera((3, 0, 1)))
    with pytest.raises(SceneError):
        analytic_cylinder(SceneSpec(**ROOM), Pose.camera((0, 0, -1)))


def test_cylinder_raster_empty_room():
    scene = SceneSpec(**ROOM)
    pose = Pose.camera((0.2, 0.1, 0.4))
    cyl = analytic_cylinder(scene, pose, RasterParams(sensor_height=0.4))
    circle = analytic_circle(scene, pose, RasterParams(sensor_height=0.4))
    assert np.allclose(cyl.ranges, circle.ranges[None, :])


def test_cylinder_raster_rows():
    params = RasterParams()
    # sensor at 0.5 m; row centers sit at 0.65 .. 2.45 m
    lamp = Box(position=np.array([1.0, 0, 2.4]), size=np.array([0.2, 0.4, 0.2]))
    low = Box(position=np.array([1.0, 0, 0.5]), size=np.array([0.2, 0.4, 0.7]))  # top at 0.85
    scene = SceneSpec(**ROOM, obstacles=[lamp, low])
    cyl = analytic_cylinder(scene, Pose.camera((0, 0, 0.5)), params)
    col = cyl.ranges[:, 0]
    z = 0.5 + params.row_centers()
    hit = col < 1.5
    assert np.array_equal(hit, ((z >= 2.3) & (z <= 2.5)) | (z <= 0.85))
    assert hit[-1] and hit[0] and not hit[10]


def test_row_center_rule_at_top_edge():
    params = RasterParams()
    top = 0.5 + params.row_centers()[3]
    box = Box(position=np.array([1.0, 0, top / 2]), size=np.array([0.2, 0.4, top]))
    cyl = analytic_cylinder(SceneSpec(**ROOM, obstacles=[box]), Pose.camera((0, 0, 0.5)), params)
    assert cyl.ranges[3, 0] < 1.0 and cyl.ranges[4, 0] > 1.9


def test_depth_frame_wall():
    scene = SceneSpec([-1, -3, 0], [3, 6, 3])
    pose = Pose.camera((0, 0, 1.5))  # 2 m from the +x wall
    cam = CameraModel(60, 40, 32, 16)
    cloud = render_depth_frame(scene, pose, cam)
    assert len(cloud) == 32 * 16
    assert np.allclose(cloud.points[:, 2], 2.0, atol=1e-12)
    d = cam.ray_directions()
    assert np.allclose(np.linalg.norm(cloud.points, axis=1), 2.0 / d[:, 2], atol=1e-12)


def test_depth_frame_row_major():
    cam = CameraModel(60, 40, 4, 3)
    d = cam.ray_directions()
    assert d[0, 0] < 0 and d[0, 1] < 0  # top-left pixel: left and up in camera coordinates
    assert d[3, 0] > 0 and d[3, 1] < 0
    assert d[-1, 0] > 0 and d[-1, 1] > 0


def test_depth_frame_noise_statistics():
    scene = SceneSpec([-1, -3, 0], [3, 6, 3])
    pose = Pose.camera((0, 0, 1.5))
    cam = CameraModel(60, 40, 1, 1)
    rng = np.random.default_rng(5)
    r = [np.linalg.norm(render_depth_frame(scene, pose, cam, noise_sigma=0.01, rng=rng).points[0]) for _ in range(1000)]
    assert abs(np.mean(r) - 2.0) < 0.002
    assert 0.008 < np.std(r) < 0.012


def test_depth_frame_occlusion_and_max_depth():
    box = Box(position=np.array([1.0, 0, 1.5]), size=np.array([0.2, 0.4, 0.4]))
    scene = SceneSpec([-1, -3, 0], [3, 6, 3], [box])
    pose = Pose.camera((0, 0, 1.5))
    cloud = render_depth_frame(scene, pose, CameraModel(10, 10, 3, 3))
    assert np.allclose(cloud.points[:, 2], 0.9)
    assert len(render_depth_frame(scene, pose, CameraModel(10, 10, 3, 3, max_depth=0.5))) == 0


def test_camera_fov_validation():
    with pytest.raises(ValueError):
        CameraModel(hfov_deg=180)
    with pytest.raises(ValueError):
        CameraModel(vfov_deg=0)


def test_scene_json_roundtrip(tmp_path):
    scene = SceneSpec(**ROOM, obstacles=[
        Box(position=np.array([1.0, 0, 0.5]), size=np.array([0.2, 1.0, 1.0]), present_until=50),
        Cylinder(position=np.array([-1.0, 0.5, 0]), radius=0.3, height=1.2, present_from=3,
                 motion=[Keyframe(0, np.array([-1.0, 0.5, 0])), Keyframe(9, np.array([-1.0, -0.5, 0]))]),
    ])
    p = tmp_path / "s.json"
    p.write_text(json.dumps(scene.to_dict()))
    back = SceneSpec.load(p)
    assert back.to_dict() == scene.to_dict()
    poses = pan_poses((0, 0, 1), 8)
    for f in (0, 4, 60):
        for pose in poses[:3]:
            assert analytic_circle(back, pose, frame_index=f) == analytic_circle(scene, pose, frame_index=f)


def test_scene_json_errors(tmp_path):
    p = tmp_path / "s.json"
    p.write_text('{"room": {"width": 4}}')
    with pytest.raises(SceneError):
        SceneSpec.load(p)
    p.write_text('{"room": ')
    with pytest.raises(SceneError):
        SceneSpec.load(p)


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0, 360))
def test_pan_render_is_consistent_with_ray_cast(x, y, yaw):
    scene = SceneSpec(**ROOM, obstacles=[Cylinder(position=np.array([1.7, 1.7, 0]), radius=0.2, height=2)])
    pose = Pose.camera((x, y, 1.0), yaw_deg=yaw)
    cam = CameraModel(90, 60, 8, 6)
    cloud = render_depth_frame(scene, pose, cam)
    w = pose @ cloud.points
    # every rendered point lies on a wall or on the cylinder surface
    on_wall = np.min(np.abs(np.concatenate([w[:, :2] + 2, w[:, :2] - 2, w[:, 2:] - [0], w[:, 2:] - 2.5], axis=1)), axis=1) < 1e-9
    on_cyl = np.abs(np.hypot(w[:, 0] - 1.7, w[:, 1] - 1.7) - 0.2) < 1e-9
    on_cap = (np.abs(w[:, 2] - 2) < 1e-9) & (np.hypot(w[:, 0] - 1.7, w[:, 1] - 1.7) <= 0.2 + 1e-9)
    assert np.all(on_wall | on_cyl | on_cap)


def test_pan_poses_turn_ccw():
    poses = pan_poses((0, 0, 1), 4)
    from sonomap.geometry import sensor_heading_2d
    hs = [sensor_heading_2d(p) for p in poses]
    assert np.allclose(hs, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-12)
