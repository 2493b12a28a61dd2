"""Why a distance field is a poor stand-in for "what lies in this direction".

In a room corner, ask each circle bearing for the nearest surface via the
EDF gradient. The circle's bearings step by exactly 1 deg per bin; the EDF
gradients snap to whichever wall is closest and wobble with the voxel
crust, so their bearings slip around instead of following the sweep.

    python demos/edf_slip.py
"""

from __future__ import annotations

import numpy as np

from sonomap.metrics import adjacent_total_variation, edf_bearing_compare
from sonomap.pipeline import RunConfig, SceneSource, iter_run
from sonomap.raster import RasterParams, segment_ground
from sonomap.synth import CameraModel, SceneSpec, pan_poses

scene = SceneSpec([-2, -2, 0], [4, 4, 2.5])
params = RasterParams(sensor_height=0.4)
position = np.array([-1.18, -1.18, 0.4])  # 0.8 m from both walls of the corner
source = SceneSource(scene, pan_poses(position, 72), CameraModel(90, 90, 160, 120))

for res in iter_run(source, RunConfig(voxel_size=0.05, params=params)):
    pass
surface = segment_ground(res.surface, position[2], params)
cmp = edf_bearing_compare(res.circle, surface, res.frame.pose, radius=1.0)

print(" bin  circle_bearing  edf_bearing  diff")
for i in range(0, len(cmp), 30):
    print(f"{cmp.bins[i]:4d}  {cmp.circle_bearing_deg[i]:14.1f}  {cmp.edf_bearing_deg[i]:11.1f}  {cmp.angle_diff_deg[i]:4.0f}")
circle_tv, edf_tv = adjacent_total_variation(cmp)
print(f"\ntotal variation over adjacent bins: circle {circle_tv:.0f} deg, EDF {edf_tv:.0f} deg "
      f"({edf_tv / circle_tv:.1f}x)")
