"""Depth-map readers and depth-map to point-cloud unprojection."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, TruncatedDataError
from .geometry import camera_to_world, unproject_pixels
from .parsers._io import read_bytes, source_name
from .ply import PointCloud
from .scene import CameraIntrinsics, CameraPose

DEFAULT_COLOR = (128, 128, 128)
ASPECT_TOL = 1e-6


@dataclass
class DepthMap:
    width: int
    height: int
    depths: np.ndarray  # (height, width), rows top to bottom
    name: str = ""

    def __post_init__(self):
        self.depths = np.asarray(self.depths, dtype=np.float64)
        if self.depths.shape != (self.height, self.width):
            raise ValueError(
                f"depth grid has shape {self.depths.shape}, expected {(self.height, self.width)}")

    def valid_mask(self, depth_range=None):
        d = self.depths
        mask = np.isfinite(d) & (d > 0)
        if depth_range is not None:
            lo, hi = depth_range
            if lo is not None:
                mask &= d >= lo
            if hi is not None:
                mask &= d <= hi
        return mask


_COLMAP_HEADER = re.compile(rb"^(\d+)&(\d+)&(\d+)&")


def read_colmap_depth(source) -> DepthMap:
    """Colmap dense ``.bin`` array: ``w&h&c&`` then little-endian float32, row-major."""
    location = source_name(source)
    data = read_bytes(source)
    m = _COLMAP_HEADER.match(data[:64])
    if m is None:
        raise ParseError("malformed header: expected '<width>&<height>&<channels>&'", location)
    width, height, channels = (int(g) for g in m.groups())
    if channels != 1:
        raise ParseError(f"depth maps need 1 channel, header declares {channels}", location)
    payload = data[m.end():]
    expected = width * height * 4
    if len(payload) < expected:
        raise TruncatedDataError(
            f"truncated payload: {len(payload)} bytes for {width}x{height} floats", location)
    if len(payload) > expected:
        raise ParseError(f"payload has {len(payload) - expected} trailing bytes", location)
    depths = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    return DepthMap(width, height, depths.astype(np.float64), location)


def write_colmap_depth(dmap: DepthMap, path):
    with open(path, "wb") as fh:
        fh.write(f"{dmap.width}&{dmap.height}&1&".encode("ascii"))
        fh.write(np.ascontiguousarray(dmap.depths, dtype="<f4").tobytes())


def _header_tokens(data, n, location):
    """First ``n`` whitespace-separated header tokens and the payload offset."""
    tokens, pos = [], 0
    for _ in range(n):
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("truncated header", location)
        tokens.append(data[start:pos].decode("ascii", errors="replace"))
    return tokens, pos + 1  # exactly one whitespace byte ends the header


def read_pfm(source) -> DepthMap:
    """Grayscale PFM; rows are stored bottom to top and flipped on load."""
    location = source_name(source)
    data = read_bytes(source)
    (magic, w, h, scale), offset = _header_tokens(data, 4, location)
    if magic == "PF":
        raise ParseError("unsupported PFM: color ('PF') maps are not depth maps", location)
    if magic != "Pf":
        raise ParseError(f"missing PFM magic, got {magic!r}", location)
    try:
        width, height = int(w), int(h)
        scale = float(scale)
    except ValueError:
        raise ParseError(f"malformed PFM dimensions {w!r} {h!r} / scale {scale!r}", location) from None
    if width < 0 or height < 0 or scale == 0:
        raise ParseError("malformed PFM dimensions or zero scale", location)
    endian = "<" if scale < 0 else ">"
    expected = width * height * 4
    payload = data[offset:offset + expected]
    if len(payload) < expected:
        raise TruncatedDataError("truncated PFM payload", location)
    depths = np.frombuffer(payload, dtype=endian + "f4").reshape(height, width)[::-1].astype(np.float64)
    if abs(scale) != 1.0:
        depths = depths * abs(scale)
    return DepthMap(width, height, depths, location)


def write_pfm(dmap: DepthMap, path, scale=-1.0):
    endian = "<" if scale < 0 else ">"
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{dmap.width} {dmap.height}\n{scale}\n".encode("ascii"))
        stored = dmap.depths[::-1] / abs(scale)
        fh.write(np.ascontiguousarray(stored, dtype=endian + "f4").tobytes())


def _pnm_header(data, location):
    (magic, w, h, maxval), offset = _header_tokens(data, 4, location)
    if magic not in ("P5", "P6"):
        raise ParseError(f"only binary PGM/PPM (P5/P6) supported, got {magic!r}", location)
    try:
        return magic, int(w), int(h), int(maxval), offset
    except ValueError:
        raise ParseError("malformed PNM header", location) from None


def read_pnm_size(source):
    """(width, height) from a binary PGM/PPM header."""
    location = source_name(source)
    with open(source, "rb") as fh:
        head = fh.read(256)
    _, w, h, _, _ = _pnm_header(head, location)
    return w, h


def read_ppm(source) -> np.ndarray:
    """Binary P6 image as a (height, width, 3) uint8 array."""
    location = source_name(source)
    data = read_bytes(source)
    magic, w, h, maxval, offset = _pnm_header(data, location)
    if magic != "P6":
        raise ParseError("color source must be a binary P6 PPM", location)
    if maxval > 255:
        raise ParseError("16-bit PPM not supported", location)
    payload = data[offset:offset + w * h * 3]
    if len(payload) < w * h * 3:
        raise TruncatedDataError("truncated PPM payload", location)
    img = np.frombuffer(payload, np.uint8).reshape(h, w, 3)
    if maxval != 255:
        img = np.rint(img.astype(np.float64) * (255.0 / maxval)).astype(np.uint8)
    return img


def write_ppm(image, path):
    image = np.asarray(image, dtype=np.uint8)
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(image).tobytes())


def scaled_pinhole(intr: CameraIntrinsics, width, height):
    """(fx, fy, cx, cy) of ``intr`` rescaled to a ``width`` x ``height`` grid."""
    if not intr.dimensions_known or (intr.width == width and intr.height == height):
        return intr.fx, intr.fy, intr.cx, intr.cy
    if abs(width / height - intr.width / intr.height) > ASPECT_TOL * (intr.width / intr.height):
        raise ValueError(
            f"depth map {width}x{height} and image {intr.width}x{intr.height} differ in aspect ratio")
    sx, sy = width / intr.width, height / intr.height
    return intr.fx * sx, intr.fy * sy, intr.cx * sx, intr.cy * sy


def unproject_depth_map(dmap: DepthMap, intr: CameraIntrinsics, pose: CameraPose, stride=1,
                        depth_range=None, color=None) -> PointCloud:
    """World points for every valid sample on the stride grid, in row-major order.

    ``color`` is an RGB triple or a (height, width, 3) image matching the map;
    defaults to mid gray. Distortion is ignored.
    """
    stride = int(stride)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    fx, fy, cx, cy = scaled_pinhole(intr, dmap.width, dmap.height)
    rows = np.arange(0, dmap.height, stride)
    cols = np.arange(0, dmap.width, stride)
    grid_d = dmap.depths[np.ix_(rows, cols)]
    mask = dmap.valid_mask(depth_range)[np.ix_(rows, cols)]
    rr, cc = np.nonzero(mask)
    r, c = rows[rr], cols[cc]
    cam = unproject_pixels(fx, fy, cx, cy, c + 0.5, r + 0.5, grid_d[rr, cc])
    world = camera_to_world(pose, cam.reshape(-1, 3))

    if color is None:
        color = DEFAULT_COLOR
    color = np.asarray(color, dtype=np.uint8)
    if color.ndim == 3:
        if color.shape[:2] != (dmap.height, dmap.width):
            raise ValueError(f"color image {color.shape[1]}x{color.shape[0]} does not match the "
                             f"depth map {dmap.width}x{dmap.height}")
        colors = color[r, c]
    else:
        colors = np.tile(color.reshape(1, 3), (len(world), 1))
    return PointCloud(world, colors)


def fuse_depth_clouds(clouds) -> PointCloud:
    """Concatenate per-view clouds, given as (view id, cloud) pairs, by ascending view id."""
    pairs = sorted(clouds, key=lambda pair: pair[0])
    if not pairs:
        return PointCloud.empty()
    positions = np.concatenate([c.positions for _, c in pairs])
    colors = None
    if all(c.colors is not None for _, c in pairs):
        colors = np.concatenate([c.colors for _, c in pairs])
    return PointCloud(positions, colors)
