"""Bundler ``bundle.out`` reader (also the sparse output of MVE, ``synth_0.out``).

Bundler cameras look down -z with +y up, and measurements are relative to
the image centre with +y pointing up.
"""

from __future__ import annotations

import os
from collections import namedtuple

import numpy as np

from ..errors import InvalidRotationError, ParseError
from ..geometry import FLIP_YZ, pose_from_rotation
from ..scene import (
    CameraIntrinsics, CameraModel, CameraView, Observation, Point3D, Provenance,
    Reconstruction,
)
from ._io import ParseDiagnostics, Tokens, read_text, source_name

MAGIC = "# Bundle file"

BundlerCamera = namedtuple("BundlerCamera", ["f", "k1", "k2", "R", "t"])
BundlerPoint = namedtuple("BundlerPoint", ["xyz", "rgb", "views"])


def read_bundler(text, location="bundle.out"):
    """Raw cameras and points; ``views`` entries are (camera index, key, x, y)."""
    if not text.startswith(MAGIC):
        raise ParseError(f"malformed header: expected {MAGIC!r}", location)
    _, _, body = text.partition("\n")
    tok = Tokens(body, location)
    n_cameras = tok.int("camera count")
    n_points = tok.int("point count")
    if n_cameras < 0 or n_points < 0:
        raise ParseError("negative counts in header", location)
    cameras = []
    for idx in range(n_cameras):
        try:
            f, k1, k2 = tok.floats(3, "f k1 k2")
            R = np.array(tok.floats(9, "rotation"), dtype=float).reshape(3, 3)
            t = np.array(tok.floats(3, "translation"), dtype=float)
        except ParseError as exc:
            raise ParseError(f"truncated camera block {idx}: {exc}", location) from None
        cameras.append(BundlerCamera(f, k1, k2, R, t))
    points = []
    for _ in range(n_points):
        xyz = tok.floats(3, "point position")
        rgb = [tok.int("color") for _ in range(3)]
        n = tok.int("view-list length")
        views = []
        for _ in range(n):
            cam = tok.int("camera index")
            key = tok.int("key index")
            x, y = tok.floats(2, "measurement")
            views.append((cam, key, x, y))
        points.append(BundlerPoint(xyz, rgb, views))
    return cameras, points


def canonical_pose(cam: BundlerCamera, location=""):
    try:
        return pose_from_rotation(FLIP_YZ @ cam.R, FLIP_YZ @ cam.t)
    except InvalidRotationError as exc:
        raise ParseError(str(exc), location) from None


def assemble_points(points, intrinsics_by_camera, camera_ids, diag, location):
    """Convert raw bundler points; drops measurements on cameras without intrinsics."""
    out, observations = [], []
    dropped = 0
    for idx, p in enumerate(points):
        track = []
        for cam, key, x, y in p.views:
            if not 0 <= cam < len(camera_ids):
                raise ParseError(f"point {idx} references unknown camera {cam}", location)
            cam_id = camera_ids[cam]
            intr = intrinsics_by_camera.get(cam_id)
            if intr is None:
                dropped += 1
                continue
            track.append((cam_id, key))
            observations.append(Observation(cam_id, idx, (intr.cx + x, intr.cy - y)))
        try:
            out.append(Point3D(p.xyz, p.rgb, None, track))
        except ValueError as exc:
            raise ParseError(str(exc), f"{location}:point {idx}") from None
    if dropped:
        diag.warn(location, f"dropped {dropped} measurement(s) on unregistered cameras")
    return out, observations


def _list_file_names(source, n):
    if not isinstance(source, (str, os.PathLike)):
        return None
    path = os.path.join(os.path.dirname(os.fspath(source)), "list.txt")
    if not os.path.isfile(path):
        return None
    with open(path) as fh:
        names = [line.split()[0] for line in fh if line.strip()]
    return names if len(names) >= n else None


def parse_bundler_out(source, image_dims=None, image_names=None):
    """Parse a Bundler file.

    ``image_dims`` is an optional per-camera list of (width, height) or a
    mapping from image name to (width, height); when absent the principal point is (0, 0) and dimensions are unknown.
    ``image_names`` defaults to a sibling ``list.txt`` when one exists.
    """
    location = source_name(source)
    cameras, points = read_bundler(read_text(source), location)
    diag = ParseDiagnostics()
    names = image_names or _list_file_names(source, len(cameras))
    camera_ids = [idx + 1 for idx in range(len(cameras))]
    views, pool = {}, {}
    unknown = 0
    for idx, cam in enumerate(cameras):
        cam_id = camera_ids[idx]
        name = names[idx] if names else f"camera_{idx:04d}"
        if not cam.f > 0:
            diag.warn(f"{location}:camera {idx}", f"focal length {cam.f}; unregistered, skipped")
            continue
        if image_dims is None:
            width, height = 0, 0
        elif hasattr(image_dims, "get"):
            width, height = image_dims.get(name, (0, 0))
        else:
            width, height = image_dims[idx]
        if not (width and height):
            unknown += 1
        pool[cam_id] = CameraIntrinsics(CameraModel.RADIAL, width, height, cam.f, cam.f,
                                        width / 2.0, height / 2.0, (cam.k1, cam.k2))
        views[cam_id] = CameraView(cam_id, name, cam_id, canonical_pose(cam, f"{location}:camera {idx}"))
    if unknown:
        diag.warn(location, f"unknown dimensions for {unknown} camera(s)")
    diag.counts["unknown_dimensions"] = unknown
    out_points, observations = assemble_points(points, pool, camera_ids, diag, location)
    rec = Reconstruction(views, pool, out_points, observations, Provenance("bundler", location))
    diag.count_from(rec)
    return rec, diag
