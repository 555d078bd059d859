import math
import struct

import numpy as np
import pytest

from photoscene.depth import (
    DepthMap, fuse_depth_clouds, read_colmap_depth, read_pfm, read_ppm, unproject_depth_map,
    write_colmap_depth, write_pfm, write_ppm,
)
from photoscene.errors import ParseError, TruncatedDataError
from photoscene.geometry import camera_center, project_points, quat_to_matrix
from photoscene.ply import PointCloud
from photoscene.scene import CameraIntrinsics, CameraModel, CameraPose
from photoscene.synthetic import look_at_rotation
from photoscene.geometry import matrix_to_quat

UNIT = CameraIntrinsics(CameraModel.PINHOLE, 1, 1, 1.0, 1.0, 0.5, 0.5)


def render_plane(intr, pose, normal, offset):
    """Depth map of the plane n.X = offset by ray intersection, built without the unprojector."""
    R = quat_to_matrix(pose.q)
    C = camera_center(pose)
    n = np.asarray(normal, float)
    depths = np.empty((intr.height, intr.width))
    for r in range(intr.height):
        for c in range(intr.width):
            ray = np.array([(c + 0.5 - intr.cx) / intr.fx, (r + 0.5 - intr.cy) / intr.fy, 1.0])
            world_ray = R.T @ ray
            # C + s * world_ray on the plane; s is the z depth since ray.z = 1
            depths[r, c] = (offset - n @ C) / (n @ world_ray)
    return DepthMap(intr.width, intr.height, depths)


def slanted_setup():
    intr = CameraIntrinsics(CameraModel.PINHOLE, 64, 48, 60.0, 62.0, 31.7, 24.2)
    C = np.array([0.3, -0.2, -5.0])
    R = look_at_rotation(C, [0.1, 0.0, 0.0], [0.0, -1.0, 0.1])
    pose = CameraPose(matrix_to_quat(R), tuple(-R @ C))
    normal = np.array([0.2, -0.3, 1.0]) / np.linalg.norm([0.2, -0.3, 1.0])
    return intr, pose, normal, 0.4


def test_colmap_depth_fixture():
    dmap = read_colmap_depth(b"2&1&1&" + struct.pack("<2f", 1.5, 2.5))
    assert (dmap.width, dmap.height) == (2, 1)
    assert dmap.depths.tolist() == [[1.5, 2.5]]
    with pytest.raises(ParseError, match="channel"):
        read_colmap_depth(b"2&1&3&" + struct.pack("<6f", *range(6)))
    with pytest.raises(TruncatedDataError):
        read_colmap_depth(b"2&1&1&" + struct.pack("<f", 1.5))
    with pytest.raises(ParseError, match="header"):
        read_colmap_depth(b"2x1&1&")


def test_pfm_fixture():
    assert read_pfm(b"Pf\n1 1\n-1.0\n" + struct.pack("<f", 3.0)).depths.tolist() == [[3.0]]
    assert read_pfm(b"Pf\n1 1\n-2.0\n" + struct.pack("<f", 3.0)).depths.tolist() == [[6.0]]
    assert read_pfm(b"Pf\n1 1\n1.0\n" + struct.pack(">f", 3.0)).depths.tolist() == [[3.0]]
    # two rows stored bottom-up
    dmap = read_pfm(b"Pf\n1 2\n-1\n" + struct.pack("<2f", 1.0, 2.0))
    assert dmap.depths.tolist() == [[2.0], [1.0]]
    with pytest.raises(ParseError, match="unsupported"):
        read_pfm(b"PF\n1 1\n-1.0\n" + struct.pack("<3f", 1, 2, 3))
    with pytest.raises(ParseError):
        read_pfm(b"Pf\nx 1\n-1.0\n")


@pytest.mark.parametrize("scale", [-1.0, 1.0, -0.5])
def test_depth_writers_round_trip(tmp_path, rng, scale):
    depths = rng.uniform(0.5, 4, (5, 7)).astype(np.float32).astype(np.float64)
    dmap = DepthMap(7, 5, depths)
    write_pfm(dmap, tmp_path / "d.pfm", scale)
    assert np.array_equal(read_pfm(tmp_path / "d.pfm").depths, depths)
    write_colmap_depth(dmap, tmp_path / "d.bin")
    assert np.array_equal(read_colmap_depth(tmp_path / "d.bin").depths, depths)


def test_ppm_round_trip(tmp_path, rng):
    img = rng.integers(0, 256, (3, 4, 3)).astype(np.uint8)
    write_ppm(img, tmp_path / "i.ppm")
    assert np.array_equal(read_ppm(tmp_path / "i.ppm"), img)


def test_unproject_principal_ray():
    cloud = unproject_depth_map(DepthMap(1, 1, [[2.0]]), UNIT, CameraPose())
    assert cloud.positions.tolist() == [[0.0, 0.0, 2.0]]
    assert cloud.colors.tolist() == [[128, 128, 128]]


def test_constant_depth_is_fronto_parallel():
    intr = CameraIntrinsics(CameraModel.PINHOLE, 6, 4, 3.0, 3.0, 3.0, 2.0)
    cloud = unproject_depth_map(DepthMap(6, 4, np.full((4, 6), 2.5)), intr, CameraPose())
    assert len(cloud) == 24 and np.all(cloud.positions[:, 2] == 2.5)


def test_slanted_plane_oracle():
    intr, pose, normal, offset = slanted_setup()
    dmap = render_plane(intr, pose, normal, offset)
    cloud = unproject_depth_map(dmap, intr, pose)
    assert len(cloud) == 64 * 48
    assert np.abs(cloud.positions @ normal - offset).max() < 1e-6
    uv, front = project_points(intr, pose, cloud.positions)
    rows, cols = np.divmod(np.arange(len(cloud)), 64)
    assert front.all()
    assert np.abs(uv - np.stack([cols + 0.5, rows + 0.5], axis=1)).max() < 1e-9


def test_holes_range_and_stride():
    d = np.arange(1.0, 21.0).reshape(4, 5)
    d[0, 0] = 0.0
    d[1, 1] = np.nan
    d[2, 2] = -1.0
    d[3, 3] = np.inf
    dmap = DepthMap(5, 4, d)
    intr = CameraIntrinsics(CameraModel.PINHOLE, 5, 4, 2.0, 2.0, 2.5, 2.0)
    assert len(unproject_depth_map(dmap, intr, CameraPose())) == 16
    assert len(unproject_depth_map(dmap, intr, CameraPose(), depth_range=(5.0, 10.0))) == 5  # 5, 6, 8, 9, 10
    full = unproject_depth_map(DepthMap(5, 4, np.ones((4, 5))), intr, CameraPose())
    sub = unproject_depth_map(DepthMap(5, 4, np.ones((4, 5))), intr, CameraPose(), stride=2)
    assert len(sub) == math.ceil(4 / 2) * math.ceil(5 / 2)
    # stride samples are a subset of the full grid
    full_set = {tuple(p) for p in full.positions.tolist()}
    assert all(tuple(p) in full_set for p in sub.positions.tolist())


def test_stride_four_count(rng):
    intr = CameraIntrinsics(CameraModel.PINHOLE, 101, 37, 50.0, 50.0, 50.5, 18.5)
    dmap = DepthMap(101, 37, rng.uniform(1, 2, (37, 101)))
    assert len(unproject_depth_map(dmap, intr, CameraPose(), stride=4)) == 26 * 10


def test_rescaled_intrinsics():
    intr, pose, normal, offset = slanted_setup()
    half = CameraIntrinsics(CameraModel.PINHOLE, 32, 24, 30.0, 31.0, 15.85, 12.1)
    dmap = render_plane(half, pose, normal, offset)
    cloud = unproject_depth_map(dmap, intr, pose)
    assert np.abs(cloud.positions @ normal - offset).max() < 1e-6
    with pytest.raises(ValueError, match="aspect"):
        unproject_depth_map(DepthMap(32, 20, np.ones((20, 32))), intr, pose)


def test_per_pixel_color(rng):
    img = rng.integers(0, 256, (2, 3, 3)).astype(np.uint8)
    intr = CameraIntrinsics(CameraModel.PINHOLE, 3, 2, 1.0, 1.0, 1.5, 1.0)
    d = np.ones((2, 3))
    d[0, 1] = 0
    cloud = unproject_depth_map(DepthMap(3, 2, d), intr, CameraPose(), color=img)
    assert cloud.colors.tolist() == [img[0, 0].tolist(), img[0, 2].tolist()] + img[1].tolist()
    cloud = unproject_depth_map(DepthMap(3, 2, d), intr, CameraPose(), color=(1, 2, 3))
    assert cloud.colors.tolist() == [[1, 2, 3]] * 5
    with pytest.raises(ValueError):
        unproject_depth_map(DepthMap(3, 2, d), intr, CameraPose(), color=img[:1])


def test_fuse():
    a = PointCloud([[1, 0, 0]], [[1, 1, 1]])
    b = PointCloud([[2, 0, 0]], [[2, 2, 2]])
    assert fuse_depth_clouds([(5, b), (2, a)]).positions.tolist() == [[1, 0, 0], [2, 0, 0]]
    assert len(fuse_depth_clouds([])) == 0
    assert fuse_depth_clouds([(1, a), (1, a)]).positions.tolist() == [[1, 0, 0], [1, 0, 0]]
