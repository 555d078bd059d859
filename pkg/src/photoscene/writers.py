"""Serializers for the canonical scene, Colmap text, NVM and camera trajectories.

Every writer returns a list of notes naming the fields the target format
could not hold (empty for lossless output).
"""

from __future__ import annotations

import csv
import json
import math
import os
from collections import defaultdict

from .animation import align_quaternion_signs
from .errors import ParseError, RepresentabilityError
from .geometry import camera_center, quat_conjugate, quat_multiply
from .scene import (
    CameraIntrinsics, CameraModel, CameraPose, CameraView, Observation, Point3D,
    Provenance, Reconstruction,
)

SCENE_VERSION = "1.0"
CONVENTION = "cv-w2c"
# quaternion of diag(1, -1, -1): 180 degrees about x
FLIP_YZ_QUAT = (0.0, 1.0, 0.0, 0.0)
TRAJECTORY_COLUMNS = ["frame", "px", "py", "pz", "qw", "qx", "qy", "qz",
                      "fovx_deg", "shift_x", "shift_y"]


def _g(x):
    return format(float(x), ".17g")


# -- canonical scene JSON ---------------------------------------------------

def _intrinsics_doc(intr: CameraIntrinsics):
    return {"width": intr.width, "height": intr.height, "model": intr.model.name,
            "params": [float(p) for p in intr.params()]}


def scene_to_document(rec: Reconstruction) -> dict:
    cameras = []
    for view in rec.cameras.values():
        entry = {"id": view.id, "image": view.image_name, "intrinsics_id": view.intrinsics_id}
        intr = rec.intrinsics_pool.get(view.intrinsics_id)
        if intr is not None:
            entry.update(_intrinsics_doc(intr))
        entry["q"] = list(view.pose.q)
        entry["t"] = list(view.pose.t)
        cameras.append(entry)
    points = []
    for p in rec.points:
        entry = {"p": list(p.position), "c": list(p.color)}
        if p.error is not None:
            entry["e"] = p.error
        if p.track is not None:
            entry["track"] = [list(el) for el in p.track]
        points.append(entry)
    doc = {
        "format_version": SCENE_VERSION,
        "convention": CONVENTION,
        "source": {"format": rec.source.format, "root": rec.source.root,
                   "point_ids": None if rec.source.point_ids is None else list(rec.source.point_ids)},
        "intrinsics": [dict(id=k, **_intrinsics_doc(v)) for k, v in rec.intrinsics_pool.items()],
        "cameras": cameras,
        "points": points,
    }
    if rec.observations is not None:
        doc["observations"] = [{"camera": o.camera_id, "point": o.point_index, "uv": list(o.uv)}
                               for o in rec.observations]
    return doc


def write_scene_json(rec: Reconstruction, path):
    text = json.dumps(scene_to_document(rec), indent=1, allow_nan=False)
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    return []


def _intrinsics_from_doc(entry, loc):
    try:
        model = CameraModel[entry["model"]]
    except KeyError:
        raise ParseError(f"unknown camera model {entry.get('model')!r}", loc) from None
    try:
        return CameraIntrinsics.from_params(model, entry["width"], entry["height"], entry["params"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed intrinsics ({exc})", loc) from None


def document_to_scene(doc, location="<scene>") -> Reconstruction:
    if not isinstance(doc, dict):
        raise ParseError("scene document must be a JSON object", location)
    version = doc.get("format_version")
    if version != SCENE_VERSION:
        raise ParseError(f"unsupported format_version {version!r}", location)
    if doc.get("convention") != CONVENTION:
        raise ParseError(f"convention tag {doc.get('convention')!r} is not {CONVENTION!r}", location)
    try:
        pool = {}
        if "intrinsics" in doc:
            for k, entry in enumerate(doc["intrinsics"]):
                pool[int(entry["id"])] = _intrinsics_from_doc(entry, f"{location}:intrinsics[{k}]")
        cameras = {}
        for k, entry in enumerate(doc["cameras"]):
            loc = f"{location}:cameras[{k}]"
            cam_id = int(entry["id"])
            intr_id = int(entry.get("intrinsics_id", cam_id))
            if "intrinsics" not in doc and "model" in entry:
                pool.setdefault(intr_id, _intrinsics_from_doc(entry, loc))
            if cam_id in cameras:
                raise ParseError(f"duplicate camera id {cam_id}", loc)
            cameras[cam_id] = CameraView(cam_id, entry["image"], intr_id,
                                         CameraPose(entry["q"], entry["t"]))
        points = []
        for entry in doc["points"]:
            track = entry.get("track")
            points.append(Point3D(entry["p"], entry["c"], entry.get("e"),
                                  None if track is None else [tuple(el) for el in track]))
        observations = None
        if "observations" in doc:
            observations = [Observation(int(o["camera"]), int(o["point"]), o["uv"])
                            for o in doc["observations"]]
        src = doc.get("source") or {}
        ids = src.get("point_ids")
        source = Provenance(src.get("format", "scene-json"), src.get("root", location),
                            None if ids is None else tuple(int(i) for i in ids))
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed scene document ({exc.__class__.__name__}: {exc})", location) from None
    return Reconstruction(cameras, pool, points, observations, source)


def parse_scene_json(source) -> Reconstruction:
    from .parsers._io import read_text, source_name

    location = source_name(source)
    try:
        doc = json.loads(read_text(source))
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON ({exc})", location) from None
    return document_to_scene(doc, location)


# -- Colmap text ------------------------------------------------------------

def _point_ids(rec):
    ids = rec.source.point_ids
    if ids is not None and len(ids) == len(rec.points) and len(set(ids)) == len(ids) and -1 not in ids:
        return list(ids)
    return list(range(1, len(rec.points) + 1))


def write_colmap_text(rec: Reconstruction, directory):
    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)
    notes = []
    for view in rec.cameras.values():
        if "\n" in view.image_name or view.image_name != view.image_name.strip():
            raise RepresentabilityError(f"image name {view.image_name!r} cannot be stored in images.txt")
    ids = _point_ids(rec)

    per_image = defaultdict(list)
    tracks = defaultdict(list)
    for obs in rec.observations or ():
        lst = per_image[obs.camera_id]
        tracks[obs.point_index].append((obs.camera_id, len(lst)))
        lst.append(obs)

    lines = ["# Camera list with one line of data per camera:",
             "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]",
             f"# Number of cameras: {len(rec.intrinsics_pool)}"]
    for cam_id, intr in rec.intrinsics_pool.items():
        lines.append(" ".join([str(cam_id), intr.model.name, str(intr.width), str(intr.height)]
                              + [_g(p) for p in intr.params()]))
    _write_lines(os.path.join(directory, "cameras.txt"), lines)

    lines = ["# Image list with two lines of data per image:",
             "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME",
             "#   POINTS2D[] as (X, Y, POINT3D_ID)",
             f"# Number of images: {len(rec.cameras)}"]
    for view in rec.cameras.values():
        lines.append(" ".join([str(view.id)] + [_g(v) for v in view.pose.q]
                              + [_g(v) for v in view.pose.t]
                              + [str(view.intrinsics_id), view.image_name]))
        lines.append(" ".join(f"{_g(o.uv[0])} {_g(o.uv[1])} {ids[o.point_index]}"
                              for o in per_image.get(view.id, ())))
    _write_lines(os.path.join(directory, "images.txt"), lines)

    lines = ["# 3D point list with one line of data per point:",
             "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)",
             f"# Number of points: {len(rec.points)}"]
    missing_error = 0
    for idx, p in enumerate(rec.points):
        if p.error is None:
            missing_error += 1
        if rec.observations is not None:
            track = tracks.get(idx, [])
        else:
            track = list(p.track or ())
        lines.append(" ".join([str(ids[idx])] + [_g(v) for v in p.position]
                              + [str(c) for c in p.color] + [_g(p.error or 0.0)]
                              + [f"{c} {f}" for c, f in track]))
    _write_lines(os.path.join(directory, "points3D.txt"), lines)
    if missing_error:
        notes.append(f"{missing_error} point(s) without a stored error written as 0")
    return notes


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# -- NVM --------------------------------------------------------------------

FOCAL_TOL = 1e-9


def write_nvm(rec: Reconstruction, path):
    """Write NVM_V3; principal points and per-view ids are not representable."""
    notes = []
    rows = []
    index_of = {}
    dropped_dist = moved_pp = 0
    for k, view in enumerate(rec.cameras.values()):
        intr = rec.intrinsics_of(view)
        if abs(intr.fx - intr.fy) > FOCAL_TOL * max(1.0, abs(intr.fx)):
            raise RepresentabilityError(
                f"camera {view.id} has anisotropic focal lengths fx={intr.fx!r} fy={intr.fy!r}; "
                "NVM stores a single focal length")
        if any(ch.isspace() for ch in view.image_name):
            raise RepresentabilityError(f"image name {view.image_name!r} contains whitespace")
        f = intr.fx
        k1 = intr.distortion[0] if intr.distortion else 0.0
        if any(intr.distortion[1:]):
            dropped_dist += 1
        if intr.cx != intr.width / 2.0 or intr.cy != intr.height / 2.0:
            moved_pp += 1
        r = -k1 / (f * f)
        C = camera_center(view.pose)
        index_of[view.id] = k
        rows.append(" ".join([view.image_name, _g(f)] + [_g(v) for v in view.pose.q]
                             + [_g(v) for v in C] + [_g(r), "0"]))
    if dropped_dist:
        notes.append(f"{dropped_dist} camera(s): distortion beyond one radial term dropped")
    if moved_pp:
        notes.append(f"{moved_pp} camera(s): principal point not stored (measurements re-centred)")
    if list(rec.cameras) != list(range(1, len(rec.cameras) + 1)):
        notes.append("camera ids are renumbered 1..n")
    notes.append("image dimensions are not stored")

    measurements = defaultdict(list)
    for obs in rec.observations or ():
        view = rec.cameras[obs.camera_id]
        intr = rec.intrinsics_of(view)
        measurements[obs.point_index].append(
            (index_of[obs.camera_id], obs.uv[0] - intr.cx, obs.uv[1] - intr.cy))
    point_rows = []
    for idx, p in enumerate(rec.points):
        ms = measurements.get(idx, [])
        feats = defaultdict(int)
        parts = [_g(v) for v in p.position] + [str(c) for c in p.color] + [str(len(ms))]
        for cam_idx, mx, my in ms:
            parts += [str(cam_idx), str(feats[cam_idx]), _g(mx), _g(my)]
            feats[cam_idx] += 1
        point_rows.append(" ".join(parts))
    if any(p.error is not None for p in rec.points):
        notes.append("point errors are not stored")

    text = "\n".join(["NVM_V3", "", str(len(rows))] + rows
                     + ["", str(len(point_rows))] + point_rows + ["", "0", ""])
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return notes


# -- trajectories -----------------------------------------------------------

def trajectory_rows(samples):
    """Numeric rows (see TRAJECTORY_COLUMNS) for (frame, CameraState) samples."""
    quats = align_quaternion_signs(
        quat_multiply(quat_conjugate(state.q), FLIP_YZ_QUAT) for _, state in samples)
    rows = []
    for (frame, state), qg in zip(samples, quats):
        C = camera_center(state.pose)
        rows.append([frame, *(float(v) for v in C), *qg,
                     math.degrees(state.fov_x), state.shift_x, state.shift_y])
    return rows


def write_trajectory(samples, path, format="json", fps=24.0, keyframe_frames=()):
    if not samples:
        raise ValueError("sampled trajectory is empty")
    rows = trajectory_rows(samples)
    path = os.fspath(path)
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRAJECTORY_COLUMNS)
            for row in rows:
                writer.writerow([repr(v) if isinstance(v, float) else str(v) for v in row])
    elif format == "json":
        doc = {
            "fps": fps,
            "keyframes": list(keyframe_frames),
            "columns": TRAJECTORY_COLUMNS,
            "samples": [
                {"frame": r[0], "position": r[1:4], "quaternion": r[4:8],
                 "fovx_deg": r[8], "shift_x": r[9], "shift_y": r[10]}
                for r in rows
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, allow_nan=False)
            fh.write("\n")
    else:
        raise ValueError(f"unknown trajectory format {format!r}")
    return []
