"""Colmap sparse model reader (``cameras``, ``images``, ``points3D``; .bin or .txt)."""

from __future__ import annotations

import os
from collections import namedtuple

from ..errors import ParseError, UnsupportedCameraModelError
from ..scene import (
    CameraIntrinsics, CameraModel, CameraPose, CameraView, Observation, Point3D,
    Provenance, Reconstruction,
)
from ._io import BinaryReader, ParseDiagnostics, open_binary, read_text

ImageRecord = namedtuple("ImageRecord", ["id", "qvec", "tvec", "camera_id", "name", "points2d"])
PointRecord = namedtuple("PointRecord", ["id", "xyz", "rgb", "error", "track"])

MODEL_FILES = ("cameras", "images", "points3D")


def _model_from_id(model_id, location):
    try:
        return CameraModel.from_id(model_id)
    except ValueError:
        raise UnsupportedCameraModelError(model_id, location) from None


def _model_from_name(name, location):
    try:
        return CameraModel[name]
    except KeyError:
        raise UnsupportedCameraModelError(name, location) from None


def _check_consumed(reader):
    if not reader.at_end():
        raise ParseError("count/record mismatch: trailing bytes after the last record",
                         reader.location)


def read_cameras_binary(stream, location="cameras.bin"):
    r = BinaryReader(stream, location)
    cameras = {}
    (count,) = r.read("<Q")
    for _ in range(count):
        camera_id, model_id, width, height = r.read("<iiQQ")
        model = _model_from_id(model_id, location)
        params = r.read("<" + "d" * model.num_params)
        if camera_id in cameras:
            raise ParseError(f"duplicate camera id {camera_id}", location)
        cameras[camera_id] = CameraIntrinsics.from_params(model, width, height, params)
    _check_consumed(r)
    return cameras


def read_images_binary(stream, location="images.bin"):
    r = BinaryReader(stream, location)
    images = []
    (count,) = r.read("<Q")
    for _ in range(count):
        image_id, qw, qx, qy, qz, tx, ty, tz, camera_id = r.read("<idddddddi")
        name = r.read_cstring()
        (n2d,) = r.read("<Q")
        flat = r.read("<" + "ddq" * n2d) if n2d else ()
        points2d = [(flat[i], flat[i + 1], flat[i + 2]) for i in range(0, 3 * n2d, 3)]
        images.append(ImageRecord(image_id, (qw, qx, qy, qz), (tx, ty, tz), camera_id, name, points2d))
    _check_consumed(r)
    return images


def read_points3d_binary(stream, location="points3D.bin"):
    r = BinaryReader(stream, location)
    points = []
    (count,) = r.read("<Q")
    for _ in range(count):
        pid, x, y, z, cr, cg, cb, err = r.read("<qdddBBBd")
        (length,) = r.read("<Q")
        flat = r.read("<" + "ii" * length) if length else ()
        track = [(flat[i], flat[i + 1]) for i in range(0, 2 * length, 2)]
        points.append(PointRecord(pid, (x, y, z), (cr, cg, cb), err, track))
    _check_consumed(r)
    return points


def _data_lines(text):
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith("#"):
            continue
        yield lineno, stripped


def read_cameras_text(text, location="cameras.txt"):
    cameras = {}
    for lineno, line in _data_lines(text):
        if not line:
            continue
        loc = f"{location}:{lineno}"
        elems = line.split()
        if len(elems) < 4:
            raise ParseError("camera line needs id, model, width, height", loc)
        model = _model_from_name(elems[1], loc)
        try:
            camera_id, width, height = int(elems[0]), int(elems[2]), int(elems[3])
            params = [float(v) for v in elems[4:]]
        except ValueError as exc:
            raise ParseError(f"non-numeric camera field ({exc})", loc) from None
        if len(params) != model.num_params:
            raise ParseError(f"{model.name} needs {model.num_params} params, got {len(params)}", loc)
        if camera_id in cameras:
            raise ParseError(f"duplicate camera id {camera_id}", loc)
        cameras[camera_id] = CameraIntrinsics.from_params(model, width, height, params)
    return cameras


def read_images_text(text, location="images.txt"):
    images = []
    lines = list(_data_lines(text))
    # drop trailing blank lines only; an empty POINTS2D line is significant
    while lines and not lines[-1][1]:
        lines.pop()
    i = 0
    while i < len(lines):
        lineno, line = lines[i]
        if not line:
            i += 1
            continue
        loc = f"{location}:{lineno}"
        elems = line.split()
        if len(elems) < 10:
            raise ParseError("image line needs 10 fields", loc)
        try:
            image_id = int(elems[0])
            qvec = tuple(float(v) for v in elems[1:5])
            tvec = tuple(float(v) for v in elems[5:8])
            camera_id = int(elems[8])
        except ValueError as exc:
            raise ParseError(f"non-numeric image field ({exc})", loc) from None
        name = " ".join(elems[9:])
        points_line = lines[i + 1][1] if i + 1 < len(lines) else ""
        vals = points_line.split()
        if len(vals) % 3:
            raise ParseError("POINTS2D line must hold (X, Y, POINT3D_ID) triples",
                             f"{location}:{lineno + 1}")
        try:
            points2d = [(float(vals[k]), float(vals[k + 1]), int(vals[k + 2]))
                        for k in range(0, len(vals), 3)]
        except ValueError as exc:
            raise ParseError(f"non-numeric POINTS2D field ({exc})", f"{location}:{lineno + 1}") from None
        images.append(ImageRecord(image_id, qvec, tvec, camera_id, name, points2d))
        i += 2
    return images


def read_points3d_text(text, location="points3D.txt"):
    points = []
    for lineno, line in _data_lines(text):
        if not line:
            continue
        loc = f"{location}:{lineno}"
        elems = line.split()
        if len(elems) < 8 or (len(elems) - 8) % 2:
            raise ParseError("point line needs id, xyz, rgb, error and track pairs", loc)
        try:
            pid = int(elems[0])
            xyz = tuple(float(v) for v in elems[1:4])
            rgb = tuple(int(v) for v in elems[4:7])
            err = float(elems[7])
            track = [(int(elems[k]), int(elems[k + 1])) for k in range(8, len(elems), 2)]
        except ValueError as exc:
            raise ParseError(f"non-numeric point field ({exc})", loc) from None
        points.append(PointRecord(pid, xyz, rgb, err, track))
    return points


def _resolve_files(source):
    """Map of model file name -> bytes source, preferring the binary encoding."""
    if isinstance(source, dict):
        files = source
        exists = files.__contains__
        get = files.__getitem__
    else:
        root = os.fspath(source)
        exists = lambda name: os.path.isfile(os.path.join(root, name))  # noqa: E731
        get = lambda name: os.path.join(root, name)  # noqa: E731
    for ext in ("bin", "txt"):
        names = [f"{stem}.{ext}" for stem in MODEL_FILES]
        if all(exists(n) for n in names):
            return ext, {stem: get(n) for stem, n in zip(MODEL_FILES, names)}
    raise ParseError("directory lacks a complete cameras/images/points3D set (.bin or .txt)",
                     None if isinstance(source, dict) else os.fspath(source))


def read_colmap_records(source):
    ext, files = _resolve_files(source)
    if ext == "bin":
        with open_binary(files["cameras"]) as fh:
            cameras = read_cameras_binary(fh)
        with open_binary(files["images"]) as fh:
            images = read_images_binary(fh)
        with open_binary(files["points3D"]) as fh:
            points = read_points3d_binary(fh)
    else:
        cameras = read_cameras_text(read_text(files["cameras"]))
        images = read_images_text(read_text(files["images"]))
        points = read_points3d_text(read_text(files["points3D"]))
    return ext, cameras, images, points


def parse_colmap_model(source):
    """Parse a Colmap sparse model directory (or a ``{filename: bytes}`` mapping)."""
    ext, cameras, images, points = read_colmap_records(source)
    diag = ParseDiagnostics()

    views = {}
    for img in images:
        if img.id in views:
            raise ParseError(f"duplicate image id {img.id}", f"images.{ext}")
        if img.camera_id not in cameras:
            raise ParseError(f"image {img.id} references unknown camera {img.camera_id}",
                             f"images.{ext}")
        views[img.id] = CameraView(img.id, img.name, img.camera_id, CameraPose(img.qvec, img.tvec))

    point_index = {}
    out_points = []
    for p in points:
        if p.id in point_index:
            raise ParseError(f"duplicate point3D id {p.id}", f"points3D.{ext}")
        point_index[p.id] = len(out_points)
        out_points.append(Point3D(p.xyz, p.rgb, p.error, p.track))

    observations = []
    untracked = 0
    for img in images:
        for k, (x, y, pid) in enumerate(img.points2d):
            if pid == -1:
                untracked += 1
                continue
            idx = point_index.get(pid)
            if idx is None:
                diag.warn(f"images.{ext}", f"image {img.id} point2D {k} references unknown point3D {pid}")
                continue
            observations.append(Observation(img.id, idx, (x, y)))

    root = "<memory>" if isinstance(source, dict) else os.fspath(source)
    rec = Reconstruction(
        cameras=views,
        intrinsics_pool=cameras,
        points=out_points,
        observations=observations,
        source=Provenance("colmap", root, tuple(p.id for p in points)),
    )
    diag.count_from(rec)
    diag.counts["untracked_points2d"] = untracked
    return rec, diag


def model_files_from_bytes(cameras: bytes, images: bytes, points3d: bytes, ext="bin"):
    """Convenience for in-memory fixtures."""
    return {f"cameras.{ext}": cameras, f"images.{ext}": images, f"points3D.{ext}": points3d}


__all__ = [
    "parse_colmap_model", "read_cameras_binary", "read_images_binary", "read_points3d_binary",
    "read_cameras_text", "read_images_text", "read_points3d_text", "model_files_from_bytes",
]
