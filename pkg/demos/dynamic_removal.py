"""A box is removed while the camera keeps looking; free-space carving erases it.

The sensor stares at a box for 60 frames, the box disappears, and the
circle bins it covered return to the wall distance behind it.

    python demos/dynamic_removal.py
"""

from __future__ import annotations

import numpy as np

from sonomap.geometry import Pose
from sonomap.pipeline import RunConfig, SceneSource, iter_run
from sonomap.raster import RasterParams
from sonomap.synth import Box, CameraModel, SceneSpec

vanish = 60
params = RasterParams(sensor_height=0.4)
box = Box(position=np.array([1.0, 0, 0.45]), size=np.array([0.2, 0.6, 0.9]), present_until=vanish)
scene = SceneSpec([-2, -2, 0], [4, 4, 2.5], [box])
pose = Pose.camera((0, 0, 0.4))
source = SceneSource(scene, [pose] * (vanish + 8), CameraModel(90, 90, 160, 120))

print("frame  range@bin0  box_present")
for res in iter_run(source, RunConfig(voxel_size=0.10, params=params)):
    f = res.frame.index
    if f in (0, 1, vanish - 1) or f >= vanish:
        print(f"{f:5d}  {res.circle.ranges[0]:10.3f}  {f < vanish}")
