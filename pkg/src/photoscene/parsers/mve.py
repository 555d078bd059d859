"""MVE workspace reader: ``views/*/meta.ini`` plus the optional ``synth_0.out``."""

from __future__ import annotations

import configparser
import os

import numpy as np

from ..errors import InvalidRotationError, ParseError
from ..geometry import pose_from_rotation
from ..scene import (
    CameraIntrinsics, CameraModel, CameraView, Provenance, Reconstruction,
)
from ._io import ParseDiagnostics, read_text
from .bundler import assemble_points, read_bundler

BUNDLE_NAME = "synth_0.out"


def _floats(section, key, n, loc):
    raw = section.get(key)
    if raw is None:
        raise ParseError(f"missing key {key!r}", loc)
    try:
        vals = [float(v) for v in raw.split()]
    except ValueError:
        raise ParseError(f"non-numeric {key!r}: {raw!r}", loc) from None
    if len(vals) != n:
        raise ParseError(f"{key!r} needs {n} values, got {len(vals)}", loc)
    return vals


def _dims_from_ini(ini):
    for name in ("view", "camera"):
        if ini.has_section(name):
            sec = ini[name]
            if "width" in sec and "height" in sec:
                return int(sec["width"]), int(sec["height"])
    return None


def _dims_from_images(view_dir):
    from ..depth import read_pnm_size  # local import: depth imports the parsers package

    for entry in sorted(os.listdir(view_dir)):
        if entry.lower().endswith((".ppm", ".pgm")):
            try:
                return read_pnm_size(os.path.join(view_dir, entry))
            except ParseError:
                continue
    return None


def mve_intrinsics(flen, paspect, ppoint, width, height, distortion=(0.0, 0.0)):
    """Pixel intrinsics from MVE's normalized focal length and principal point."""
    if width / height * paspect < 1.0:
        fx, fy = flen * height / paspect, flen * height
    else:
        fx, fy = flen * width, flen * width * paspect
    cx, cy = ppoint[0] * width, ppoint[1] * height
    k1, k2 = distortion
    if not (k1 or k2):
        return CameraIntrinsics(CameraModel.PINHOLE, width, height, fx, fy, cx, cy)
    if fx == fy:
        return CameraIntrinsics(CameraModel.RADIAL, width, height, fx, fy, cx, cy, (k1, k2))
    return CameraIntrinsics(CameraModel.OPENCV, width, height, fx, fy, cx, cy, (k1, k2, 0.0, 0.0))


def parse_mve_workspace(root):
    """Parse an MVE scene directory."""
    root = os.fspath(root)
    views_dir = os.path.join(root, "views")
    if not os.path.isdir(views_dir):
        raise ParseError("missing views directory", root)
    diag = ParseDiagnostics()

    bundle_cams, bundle_points = [], []
    bundle_path = os.path.join(root, BUNDLE_NAME)
    if os.path.isfile(bundle_path):
        bundle_cams, bundle_points = read_bundler(read_text(bundle_path), bundle_path)

    views, pool = {}, {}
    subdirs = sorted(d for d in os.listdir(views_dir) if os.path.isdir(os.path.join(views_dir, d)))
    if not subdirs:
        diag.warn(views_dir, "workspace has no views")
    for sub in subdirs:
        view_dir = os.path.join(views_dir, sub)
        ini_path = os.path.join(view_dir, "meta.ini")
        loc = ini_path
        if not os.path.isfile(ini_path):
            diag.warn(view_dir, "no meta.ini; skipped")
            continue
        ini = configparser.ConfigParser(interpolation=None)
        try:
            ini.read_string(read_text(ini_path), source=ini_path)
        except configparser.Error as exc:
            raise ParseError(f"malformed INI ({exc.__class__.__name__})", loc) from None
        if not ini.has_section("view"):
            raise ParseError("missing [view] section", loc)
        try:
            view_id = int(ini["view"].get("id", "-1"))
        except ValueError:
            raise ParseError("non-integer view id", loc) from None
        if view_id < 0:
            raise ParseError("missing view id", loc)
        name = ini["view"].get("name", "").strip() or sub
        if not ini.has_section("camera"):
            diag.warn(loc, f"view {view_id} has no camera; unregistered, skipped")
            continue
        cam = ini["camera"]
        (flen,) = _floats(cam, "focal_length", 1, loc)
        if not flen > 0:
            diag.warn(loc, f"view {view_id} has focal length {flen}; unregistered, skipped")
            continue
        (paspect,) = _floats(cam, "pixel_aspect", 1, loc) if "pixel_aspect" in cam else (1.0,)
        ppoint = _floats(cam, "principal_point", 2, loc) if "principal_point" in cam else (0.5, 0.5)
        dist = _floats(cam, "radial_distortion", 2, loc) if "radial_distortion" in cam else (0.0, 0.0)
        R = np.array(_floats(cam, "rotation", 9, loc)).reshape(3, 3)
        t = _floats(cam, "translation", 3, loc)

        dims = _dims_from_ini(ini) or _dims_from_images(view_dir)
        if dims:
            intr = mve_intrinsics(flen, paspect, ppoint, dims[0], dims[1], dist)
        else:
            # pixel focal from the bundle when available; principal point at the centre
            f = flen
            if view_id < len(bundle_cams) and bundle_cams[view_id].f > 0:
                f = bundle_cams[view_id].f
                diag.warn(loc, f"view {view_id}: unknown dimensions, focal taken from {BUNDLE_NAME}")
            else:
                diag.warn(loc, f"view {view_id}: unknown dimensions, intrinsics left normalized")
            model = CameraModel.RADIAL if any(dist) else CameraModel.SIMPLE_PINHOLE
            intr = CameraIntrinsics(model, 0, 0, f, f, 0.0, 0.0, dist if any(dist) else ())
        try:
            pose = pose_from_rotation(R, t)
        except InvalidRotationError as exc:
            raise ParseError(str(exc), loc) from None
        if view_id in views:
            raise ParseError(f"duplicate view id {view_id}", loc)
        pool[view_id] = intr
        views[view_id] = CameraView(view_id, name, view_id, pose)

    points, observations = [], []
    if bundle_points:
        camera_ids = list(range(len(bundle_cams)))
        points, observations = assemble_points(bundle_points, pool, camera_ids, diag, bundle_path)
    rec = Reconstruction(dict(sorted(views.items())), dict(sorted(pool.items())), points,
                         observations, Provenance("mve", root))
    diag.count_from(rec)
    return rec, diag
