import struct

import numpy as np
import pytest

from photoscene.errors import ParseError, TruncatedDataError
from photoscene.ply import PointCloud, parse_ply, write_ply

import encoders

ENCODINGS = ("ascii", "binary_little_endian", "binary_big_endian")


def test_ascii_fixture():
    data = (b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
            b"property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
            b"end_header\n0 0 0 255 0 0\n")
    cloud, _ = parse_ply(data)
    assert cloud.positions.tolist() == [[0.0, 0.0, 0.0]]
    assert cloud.colors.tolist() == [[255, 0, 0]]


def test_header_only_is_empty():
    cloud, _ = parse_ply(b"ply\nformat binary_little_endian 1.0\nelement vertex 0\n"
                         b"property float x\nproperty float y\nproperty float z\nend_header\n")
    assert len(cloud) == 0


def test_tri_encoding_equality(rng):
    positions = rng.normal(size=(50, 3)) * 10
    colors = rng.integers(0, 256, (50, 3))
    clouds = {enc: parse_ply(encoders.encode_ply(positions, colors, enc))[0] for enc in ENCODINGS}
    le, be, asc = clouds["binary_little_endian"], clouds["binary_big_endian"], clouds["ascii"]
    assert np.array_equal(le.positions, be.positions) and np.array_equal(le.positions, positions)
    assert np.abs(asc.positions - le.positions).max() < 1e-6
    for c in clouds.values():
        assert np.array_equal(c.colors, colors)


def test_aliases_normals_faces_and_skipped_properties():
    head = (b"ply\nformat binary_big_endian 1.0\ncomment x\nelement vertex 2\n"
            b"property float32 x\nproperty float32 y\nproperty float32 z\n"
            b"property int16 quality\nproperty double nx\nproperty double ny\nproperty double nz\n"
            b"property uint8 diffuse_red\nproperty uint8 diffuse_green\nproperty uint8 diffuse_blue\n"
            b"element face 1\nproperty list uchar int vertex_index\nend_header\n")
    body = b"".join(struct.pack(">3fh3d3B", *p) for p in [
        (1, 2, 3, 7, 0, 0, 1, 10, 20, 30), (4, 5, 6, -7, 1, 0, 0, 40, 50, 60)])
    body += struct.pack(">B3i", 3, 0, 1, 0)
    cloud, diag = parse_ply(head + body)
    assert cloud.positions.tolist() == [[1, 2, 3], [4, 5, 6]]
    assert cloud.normals.tolist() == [[0, 0, 1], [1, 0, 0]]
    assert cloud.colors.tolist() == [[10, 20, 30], [40, 50, 60]]
    assert [list(f) for f in cloud.faces] == [[0, 1, 0]]
    assert any("quality" in msg for _, msg in diag.warnings)


def test_errors():
    with pytest.raises(ParseError, match="magic"):
        parse_ply(b"plx\nformat ascii 1.0\nend_header\n")
    with pytest.raises(ParseError, match="type"):
        parse_ply(b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float128 x\nend_header\n")
    head = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n"
    with pytest.raises(TruncatedDataError):
        parse_ply(head + struct.pack("<3f", 1, 2, 3))
    with pytest.raises(ParseError, match="mismatch"):
        parse_ply(head + struct.pack("<7f", *range(7)))
    with pytest.raises(ParseError):
        parse_ply(b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n")


@pytest.mark.parametrize("encoding", ENCODINGS)
def test_write_parse_round_trip(tmp_path, rng, encoding):
    cloud = PointCloud(rng.normal(size=(30, 3)).astype(np.float32), rng.integers(0, 256, (30, 3)),
                       rng.normal(size=(30, 3)).astype(np.float32), [[0, 1, 2], [2, 3, 4, 5]])
    write_ply(cloud, tmp_path / "c.ply", encoding)
    back, _ = parse_ply(tmp_path / "c.ply")
    assert np.array_equal(back.positions, cloud.positions)
    assert np.array_equal(back.normals, cloud.normals)
    assert np.array_equal(back.colors, cloud.colors)
    assert [list(f) for f in back.faces] == cloud.faces


def test_write_red_point_header(tmp_path):
    write_ply(PointCloud([[0, 0, 0]], [[255, 0, 0]]), tmp_path / "r.ply")
    data = (tmp_path / "r.ply").read_bytes()
    head, _, body = data.partition(b"end_header\n")
    assert head.split(b"\n")[2:-1] == [b"element vertex 1", b"property float x", b"property float y",
                                      b"property float z", b"property uchar red", b"property uchar green",
                                      b"property uchar blue"]
    assert body == struct.pack("<3f3B", 0, 0, 0, 255, 0, 0)


def test_write_empty(tmp_path):
    write_ply(PointCloud.empty(), tmp_path / "e.ply", "ascii")
    assert len(parse_ply(tmp_path / "e.ply")[0]) == 0
