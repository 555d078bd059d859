"""Render depth of a tilted plane from several cameras, fuse, write a PLY.

    python demos/depth_fusion.py [out.ply]
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from photoscene import (
    CameraIntrinsics, CameraModel, CameraPose, DepthMap, camera_center, matrix_to_quat,
    parse_ply, quat_to_matrix, unproject_depth_map, write_ply,
)
from photoscene.depth import fuse_depth_clouds
from photoscene.synthetic import look_at_rotation

intr = CameraIntrinsics(CameraModel.PINHOLE, 80, 60, 70.0, 70.0, 40.0, 30.0)
normal = np.array([0.2, -0.1, 1.0]) / np.linalg.norm([0.2, -0.1, 1.0])
offset = -0.5


def plane_depth(pose):
    # z-depth of the plane hit along each pixel ray
    R, C = quat_to_matrix(pose.q), camera_center(pose)
    v, u = np.mgrid[:intr.height, :intr.width] + 0.5
    rays = np.stack([(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, np.ones_like(u)], -1) @ R
    return (offset - normal @ C) / (rays @ normal)


clouds = []
for k, C in enumerate(([0, 0, 4.0], [1.5, 0.5, 4.0], [-1.0, 1.0, 3.5])):
    R = look_at_rotation(C, [0, 0, -0.5], [0, -1, 0])
    pose = CameraPose(matrix_to_quat(R), tuple(-R @ np.asarray(C)))
    dmap = DepthMap(intr.width, intr.height, plane_depth(pose), f"view{k}")
    clouds.append((k, unproject_depth_map(dmap, intr, pose, stride=2)))

fused = fuse_depth_clouds(clouds)
print(f"{len(fused)} points, max distance to plane {np.abs(fused.positions @ normal - offset).max():.1e}")

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp()) / "plane.ply"
write_ply(fused, out, "ascii")
print("wrote", out, "with", len(parse_ply(out)[0]), "points")
