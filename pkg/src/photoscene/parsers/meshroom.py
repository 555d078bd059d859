"""Meshroom / AliceVision ``cameras.sfm`` reader.

Every number in these documents is serialized as a JSON string. Poses are
camera-to-world rotations (CV axes) plus camera centres.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidRotationError, ParseError
from ..geometry import pose_from_center
from ..scene import (
    CameraIntrinsics, CameraModel, CameraView, Observation, Point3D, Provenance,
    Reconstruction,
)
from ._io import ParseDiagnostics, source_name
from .openmvg import ROTATION_TOL, _require, load_json


def _num(value, loc, what="number"):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ParseError(f"unparseable numeric string {value!r} for {what}", loc) from None


def _int(value, loc, what="integer"):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ParseError(f"unparseable integer string {value!r} for {what}", loc) from None


def _intrinsics_from(entry, loc, diag):
    width = _int(_require(entry, "width", loc), loc, "width")
    height = _int(_require(entry, "height", loc), loc, "height")
    if "pxFocalLength" in entry:
        f = _num(entry["pxFocalLength"], loc, "pxFocalLength")
    else:
        mm = _num(_require(entry, "focalLength", loc), loc, "focalLength")
        sensor = _num(_require(entry, "sensorWidth", loc), loc, "sensorWidth")
        f = mm / sensor * width
    dx, dy = (_num(v, loc, "principalPoint") for v in entry.get("principalPoint", ("0", "0")))
    cx, cy = width / 2.0 + dx, height / 2.0 + dy
    kind = entry.get("type", "pinhole")
    params = [_num(v, loc, "distortionParams") for v in entry.get("distortionParams", [])]
    if kind == "pinhole":
        return CameraIntrinsics(CameraModel.PINHOLE, width, height, f, f, cx, cy)
    if kind == "radial1" and params:
        return CameraIntrinsics(CameraModel.SIMPLE_RADIAL, width, height, f, f, cx, cy, params[:1])
    if kind == "radial3":
        params = (params + [0.0, 0.0, 0.0])[:3]
        if params[2]:
            diag.warn(loc, f"radial3: dropped third radial coefficient {params[2]}")
        return CameraIntrinsics(CameraModel.RADIAL, width, height, f, f, cx, cy, params[:2])
    diag.warn(loc, f"intrinsic type {kind!r} not representable; distortion dropped")
    return CameraIntrinsics(CameraModel.PINHOLE, width, height, f, f, cx, cy)


def parse_meshroom_sfm(source):
    """Parse an AliceVision SfM JSON document (``cameras.sfm`` / ``sfm.json``)."""
    location = source_name(source)
    doc = load_json(source, location)
    if not isinstance(doc, dict) or "views" not in doc or "poses" not in doc:
        raise ParseError("document lacks root keys 'views' and 'poses'", location)
    diag = ParseDiagnostics()

    pool = {}
    for k, entry in enumerate(doc.get("intrinsics", [])):
        loc = f"{location}:intrinsics[{k}]"
        intr_id = _int(_require(entry, "intrinsicId", loc), loc, "intrinsicId")
        pool[intr_id] = _intrinsics_from(entry, loc, diag)

    poses = {}
    for k, entry in enumerate(doc["poses"]):
        loc = f"{location}:poses[{k}]"
        pose_id = _int(_require(entry, "poseId", loc), loc, "poseId")
        body = entry.get("pose", entry)
        transform = _require(body, "transform", loc)
        R_cw = np.array([_num(v, loc, "rotation") for v in _require(transform, "rotation", loc)])
        C = np.array([_num(v, loc, "center") for v in _require(transform, "center", loc)])
        if R_cw.size != 9 or C.size != 3:
            raise ParseError("pose needs 9 rotation and 3 center values", loc)
        try:
            poses[pose_id] = pose_from_center(R_cw.reshape(3, 3).T, C, ROTATION_TOL)
        except InvalidRotationError as exc:
            raise ParseError(str(exc), loc) from None

    views = {}
    for k, entry in enumerate(doc["views"]):
        loc = f"{location}:views[{k}]"
        view_id = _int(_require(entry, "viewId", loc), loc, "viewId")
        pose_id = _int(entry.get("poseId", view_id), loc, "poseId")
        intr_id = _int(_require(entry, "intrinsicId", loc), loc, "intrinsicId")
        path = _require(entry, "path", loc)
        if pose_id not in poses:
            diag.warn(loc, f"view {view_id} ({path}) has no pose; unregistered, skipped")
            continue
        if intr_id not in pool:
            diag.warn(loc, f"view {view_id} ({path}) references missing intrinsic {intr_id}; skipped")
            continue
        views[view_id] = CameraView(view_id, path, intr_id, poses[pose_id])

    points, observations, point_ids = [], [], []
    dropped = 0
    for k, entry in enumerate(doc.get("structure", [])):
        loc = f"{location}:structure[{k}]"
        X = [_num(v, loc, "X") for v in _require(entry, "X", loc)]
        color = [_int(v, loc, "color") for v in entry.get("color", ("255", "255", "255"))]
        idx = len(points)
        track = []
        for obs in entry.get("observations", []):
            cam = _int(_require(obs, "observationId", loc), loc, "observationId")
            if cam not in views:
                dropped += 1
                continue
            u, v = (_num(c, loc, "observation x") for c in _require(obs, "x", loc))
            track.append((cam, _int(obs.get("featureId", "-1"), loc, "featureId")))
            observations.append(Observation(cam, idx, (u, v)))
        try:
            points.append(Point3D(X, color, None, track))
        except ValueError as exc:
            raise ParseError(str(exc), loc) from None
        point_ids.append(_int(entry.get("landmarkId", k), loc, "landmarkId"))
    if dropped:
        diag.warn(location, f"dropped {dropped} observation(s) on unregistered views")

    rec = Reconstruction(views, pool, points, observations,
                         Provenance("meshroom", location, tuple(point_ids)))
    diag.count_from(rec)
    return rec, diag
