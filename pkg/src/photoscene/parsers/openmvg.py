"""OpenMVG ``sfm_data.json`` reader (also used for Regard3D output).

The document is cereal-serialized: polymorphic intrinsics carry their type
name only on first occurrence, later entries refer back by polymorphic id.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import InvalidRotationError, ParseError
from ..geometry import pose_from_center
from ..scene import (
    CameraIntrinsics, CameraModel, CameraView, Observation, Point3D, Provenance,
    Reconstruction,
)
from ._io import ParseDiagnostics, read_text, source_name

ROTATION_TOL = 1e-4
# polymorphic ids with this bit set introduce a new type name
_NEW_TYPE_BIT = 0x80000000


def load_json(source, location):
    try:
        return json.loads(read_text(source))
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON ({exc})", location) from None


def _require(obj, key, location):
    try:
        return obj[key]
    except (KeyError, TypeError):
        raise ParseError(f"missing required key {key!r}", location) from None


def _ptr_data(value, location):
    wrapper = value.get("ptr_wrapper", value) if isinstance(value, dict) else None
    if not isinstance(wrapper, dict):
        raise ParseError("malformed pointer wrapper", location)
    return wrapper.get("data", wrapper)


def _intrinsics_from(name, data, loc, diag):
    width = int(_require(data, "width", loc))
    height = int(_require(data, "height", loc))
    f = float(_require(data, "focal_length", loc))
    cx, cy = (float(v) for v in _require(data, "principal_point", loc))
    if name == "pinhole":
        return CameraIntrinsics(CameraModel.SIMPLE_PINHOLE, width, height, f, f, cx, cy)
    if name == "pinhole_radial_k1":
        (k1,) = _require(data, "disto_k1", loc)
        return CameraIntrinsics(CameraModel.SIMPLE_RADIAL, width, height, f, f, cx, cy, (k1,))
    if name == "pinhole_radial_k3":
        k1, k2, k3 = _require(data, "disto_k3", loc)
        if k3:
            diag.warn(loc, f"{name}: dropped third radial coefficient {k3}")
        return CameraIntrinsics(CameraModel.RADIAL, width, height, f, f, cx, cy, (k1, k2))
    if name == "pinhole_brown_t2":
        k1, k2, k3, t1, t2 = _require(data, "disto_t2", loc)
        if k3:
            diag.warn(loc, f"{name}: dropped third radial coefficient {k3}")
        return CameraIntrinsics(CameraModel.OPENCV, width, height, f, f, cx, cy, (k1, k2, t1, t2))
    diag.warn(loc, f"intrinsic type {name!r} not representable; distortion dropped")
    return CameraIntrinsics(CameraModel.SIMPLE_PINHOLE, width, height, f, f, cx, cy)


def parse_openmvg_sfm_data(source):
    """Parse an OpenMVG sfm_data JSON document."""
    location = source_name(source)
    doc = load_json(source, location)
    if not isinstance(doc, dict) or "sfm_data_version" not in doc:
        raise ParseError("missing required key 'sfm_data_version'", location)
    diag = ParseDiagnostics()
    root = doc.get("root_path", "")

    type_names = {}
    pool = {}
    for k, entry in enumerate(doc.get("intrinsics", [])):
        loc = f"{location}:intrinsics[{k}]"
        key = int(_require(entry, "key", loc))
        value = _require(entry, "value", loc)
        pid = value.get("polymorphic_id")
        name = value.get("polymorphic_name")
        if name is not None and pid is not None:
            type_names[pid & ~_NEW_TYPE_BIT] = name
        elif name is None:
            name = type_names.get((pid or 0) & ~_NEW_TYPE_BIT)
            if name is None:
                raise ParseError("intrinsic without a resolvable polymorphic_name", loc)
        try:
            pool[key] = _intrinsics_from(name, _ptr_data(value, loc), loc, diag)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed intrinsic ({exc})", loc) from None

    extrinsics = {}
    for k, entry in enumerate(doc.get("extrinsics", [])):
        loc = f"{location}:extrinsics[{k}]"
        key = int(_require(entry, "key", loc))
        value = _require(entry, "value", loc)
        R = np.array(_require(value, "rotation", loc), dtype=float)
        C = np.array(_require(value, "center", loc), dtype=float)
        try:
            extrinsics[key] = pose_from_center(R, C, ROTATION_TOL)
        except InvalidRotationError as exc:
            raise ParseError(str(exc), loc) from None

    views = {}
    view_list = _require(doc, "views", location)
    for k, entry in enumerate(view_list):
        loc = f"{location}:views[{k}]"
        data = _ptr_data(_require(entry, "value", loc), loc)
        view_id = int(data.get("id_view", _require(entry, "key", loc)))
        intr_id = int(_require(data, "id_intrinsic", loc))
        pose_id = int(_require(data, "id_pose", loc))
        filename = _require(data, "filename", loc)
        local = data.get("local_path", "")
        name = f"{local.rstrip('/')}/{filename}" if local else filename
        pose = extrinsics.get(pose_id)
        if pose is None:
            diag.warn(loc, f"view {view_id} ({filename}) has no extrinsic; unregistered, skipped")
            continue
        if intr_id not in pool:
            diag.warn(loc, f"view {view_id} ({filename}) references missing intrinsic {intr_id}; skipped")
            continue
        views[view_id] = CameraView(view_id, name, intr_id, pose)

    points, observations, point_ids = [], [], []
    dropped = 0
    for k, entry in enumerate(doc.get("structure", [])):
        loc = f"{location}:structure[{k}]"
        value = _require(entry, "value", loc)
        X = [float(v) for v in _require(value, "X", loc)]
        color = value.get("color", value.get("rgb", (255, 255, 255)))
        idx = len(points)
        track = []
        for obs in value.get("observations", []):
            cam = int(_require(obs, "key", loc))
            ov = _require(obs, "value", loc)
            if cam not in views:
                dropped += 1
                continue
            u, v = (float(c) for c in _require(ov, "x", loc))
            track.append((cam, int(ov.get("id_feat", -1))))
            observations.append(Observation(cam, idx, (u, v)))
        points.append(Point3D(X, color, None, track))
        point_ids.append(int(_require(entry, "key", loc)))
    if dropped:
        diag.warn(location, f"dropped {dropped} observation(s) on unregistered views")

    rec = Reconstruction(views, pool, points, observations,
                         Provenance("openmvg", root or location, tuple(point_ids)))
    diag.count_from(rec)
    return rec, diag
