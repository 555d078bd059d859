"""Test-only encoders, written from the file layouts independently of the package writers.

They exist so every reader can be driven by fixtures whose content is known
by construction.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

D = np.diag([1.0, -1.0, -1.0])


def _rot(q):
    # independent Hamilton formula
    w, x, y, z = np.asarray(q, float) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def _center(pose):
    return -_rot(pose.q).T @ np.asarray(pose.t)


def _r(x):
    return repr(float(x))


# -- Colmap binary -----------------------------------------------------------

COLMAP_MODEL_IDS = {"SIMPLE_PINHOLE": 0, "PINHOLE": 1, "SIMPLE_RADIAL": 2, "RADIAL": 3, "OPENCV": 4}


def colmap_cameras_bin(cameras):
    """``cameras``: iterable of (id, model_id, width, height, params)."""
    cameras = list(cameras)
    out = struct.pack("<Q", len(cameras))
    for cam_id, model_id, w, h, params in cameras:
        out += struct.pack("<iiQQ", cam_id, model_id, w, h) + struct.pack(f"<{len(params)}d", *params)
    return out


def colmap_images_bin(images):
    """``images``: iterable of (id, q, t, camera_id, name, [(x, y, point3d_id)])."""
    images = list(images)
    out = struct.pack("<Q", len(images))
    for img_id, q, t, cam_id, name, pts in images:
        out += struct.pack("<i4d3di", img_id, *q, *t, cam_id) + name.encode() + b"\0"
        out += struct.pack("<Q", len(pts))
        for x, y, pid in pts:
            out += struct.pack("<ddq", x, y, pid)
    return out


def colmap_points_bin(points):
    """``points``: iterable of (id, xyz, rgb, error, [(image_id, point2d_idx)])."""
    points = list(points)
    out = struct.pack("<Q", len(points))
    for pid, xyz, rgb, err, track in points:
        out += struct.pack("<q3d3BdQ", pid, *xyz, *rgb, err, len(track))
        for img, idx in track:
            out += struct.pack("<ii", img, idx)
    return out


def encode_colmap_binary(rec, directory):
    os.makedirs(directory, exist_ok=True)
    cams = [(k, COLMAP_MODEL_IDS[i.model.name], i.width, i.height, i.params())
            for k, i in rec.intrinsics_pool.items()]
    per_image = {v: [] for v in rec.cameras}
    tracks = [[] for _ in rec.points]
    for o in rec.observations or ():
        tracks[o.point_index].append((o.camera_id, len(per_image[o.camera_id])))
        per_image[o.camera_id].append((o.uv[0], o.uv[1], o.point_index + 1))
    images = [(v.id, v.pose.q, v.pose.t, v.intrinsics_id, v.image_name, per_image[v.id])
              for v in rec.cameras.values()]
    points = [(k + 1, p.position, p.color, p.error or 0.0, tracks[k]) for k, p in enumerate(rec.points)]
    for name, data in (("cameras.bin", colmap_cameras_bin(cams)), ("images.bin", colmap_images_bin(images)),
                       ("points3D.bin", colmap_points_bin(points))):
        with open(os.path.join(directory, name), "wb") as fh:
            fh.write(data)


# -- Bundler -----------------------------------------------------------------

def encode_bundler(rec, path):
    """Cameras must be RADIAL-compatible (single focal); returns per-camera dims."""
    views = list(rec.cameras.values())
    index = {v.id: k for k, v in enumerate(views)}
    lines = ["# Bundle file v0.3", f"{len(views)} {len(rec.points)}"]
    dims = []
    for v in views:
        intr = rec.intrinsics_pool[v.intrinsics_id]
        k = list(intr.distortion) + [0.0, 0.0]
        lines.append(" ".join(_r(x) for x in (intr.fx, k[0], k[1])))
        Rb = D @ _rot(v.pose.q)
        tb = D @ np.asarray(v.pose.t)
        lines += [" ".join(_r(x) for x in row) for row in Rb]
        lines.append(" ".join(_r(x) for x in tb))
        dims.append((intr.width, intr.height))
    meas = [[] for _ in rec.points]
    for o in rec.observations or ():
        intr = rec.intrinsics_pool[rec.cameras[o.camera_id].intrinsics_id]
        meas[o.point_index].append((index[o.camera_id], len(meas[o.point_index]),
                                    o.uv[0] - intr.width / 2.0, intr.height / 2.0 - o.uv[1]))
    for p, ms in zip(rec.points, meas):
        lines.append(" ".join(_r(x) for x in p.position))
        lines.append(" ".join(str(c) for c in p.color))
        lines.append(" ".join([str(len(ms))] + [f"{c} {k} {_r(x)} {_r(y)}" for c, k, x, y in ms]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return dims


# -- Meshroom / AliceVision --------------------------------------------------

def encode_meshroom(rec, path):
    s = lambda x: repr(float(x))  # noqa: E731
    intrinsics = []
    for k, intr in rec.intrinsics_pool.items():
        entry = {"intrinsicId": str(k), "width": str(intr.width), "height": str(intr.height),
                 "pxFocalLength": s(intr.fx),
                 "principalPoint": [s(intr.cx - intr.width / 2.0), s(intr.cy - intr.height / 2.0)]}
        if intr.distortion:
            entry["type"] = "radial3"
            entry["distortionParams"] = [s(d) for d in (list(intr.distortion) + [0.0, 0.0])[:2]] + ["0"]
        else:
            entry["type"] = "pinhole"
        intrinsics.append(entry)
    views, poses = [], []
    for v in rec.cameras.values():
        views.append({"viewId": str(v.id), "poseId": str(v.id), "intrinsicId": str(v.intrinsics_id),
                      "path": v.image_name})
        R_cw = _rot(v.pose.q).T
        poses.append({"poseId": str(v.id), "pose": {"transform": {
            "rotation": [s(x) for x in R_cw.ravel()], "center": [s(x) for x in _center(v.pose)]},
            "locked": "0"}})
    obs = [[] for _ in rec.points]
    for o in rec.observations or ():
        obs[o.point_index].append({"observationId": str(o.camera_id), "featureId": str(len(obs[o.point_index])),
                                   "x": [s(o.uv[0]), s(o.uv[1])]})
    structure = [{"landmarkId": str(k), "X": [s(x) for x in p.position], "color": [str(c) for c in p.color],
                  "observations": obs[k]} for k, p in enumerate(rec.points)]
    doc = {"version": ["1", "0", "0"], "views": views, "intrinsics": intrinsics, "poses": poses,
           "structure": structure}
    with open(path, "w") as fh:
        json.dump(doc, fh)


# -- OpenMVG -----------------------------------------------------------------

def encode_openmvg(rec, path):
    """Cameras must be single-focal."""
    intrinsics = []
    for n, (k, intr) in enumerate(rec.intrinsics_pool.items()):
        data = {"width": intr.width, "height": intr.height, "focal_length": intr.fx,
                "principal_point": [intr.cx, intr.cy]}
        d = list(intr.distortion)
        name = {0: "pinhole", 1: "pinhole_radial_k1", 2: "pinhole_radial_k3", 4: "pinhole_brown_t2"}[len(d)]
        if len(d) == 1:
            data["disto_k1"] = d
        elif len(d) == 2:
            data["disto_k3"] = d + [0.0]
        elif len(d) == 4:
            data["disto_t2"] = d[:2] + [0.0] + d[2:]
        value = {"polymorphic_id": 2147483649, "polymorphic_name": name,
                 "ptr_wrapper": {"id": 2147483649 + n, "data": data}}
        intrinsics.append({"key": k, "value": value})
    views, extrinsics = [], []
    for n, v in enumerate(rec.cameras.values()):
        views.append({"key": v.id, "value": {"polymorphic_id": 1073741824, "ptr_wrapper": {
            "id": 2147483649 + 1000 + n, "data": {
                "local_path": "", "filename": v.image_name, "width": 0, "height": 0,
                "id_view": v.id, "id_intrinsic": v.intrinsics_id, "id_pose": v.id}}}})
        extrinsics.append({"key": v.id, "value": {"rotation": _rot(v.pose.q).tolist(),
                                                  "center": _center(v.pose).tolist()}})
    obs = [[] for _ in rec.points]
    for o in rec.observations or ():
        obs[o.point_index].append({"key": o.camera_id, "value": {"id_feat": len(obs[o.point_index]),
                                                                 "x": list(o.uv)}})
    structure = [{"key": k, "value": {"X": list(p.position), "color": list(p.color), "observations": obs[k]}}
                 for k, p in enumerate(rec.points)]
    doc = {"sfm_data_version": "0.3", "root_path": "/images", "views": views, "intrinsics": intrinsics,
           "extrinsics": extrinsics, "structure": structure, "control_points": []}
    with open(path, "w") as fh:
        json.dump(doc, fh)


# -- MVE ---------------------------------------------------------------------

def encode_mve(rec, root, dims_in_ini=True):
    """Views are numbered 0..n-1 in camera order; cameras must be single-focal, at most RADIAL."""
    views = list(rec.cameras.values())
    index = {v.id: k for k, v in enumerate(views)}
    os.makedirs(os.path.join(root, "views"), exist_ok=True)
    for k, v in enumerate(views):
        intr = rec.intrinsics_pool[v.intrinsics_id]
        vdir = os.path.join(root, "views", f"view_{k:04d}.mve")
        os.makedirs(vdir, exist_ok=True)
        d = (list(intr.distortion) + [0.0, 0.0])[:2]
        R = _rot(v.pose.q)
        lines = ["[camera]",
                 f"focal_length = {_r(intr.fx / max(intr.width, intr.height))}",
                 "pixel_aspect = 1",
                 f"principal_point = {_r(intr.cx / intr.width)} {_r(intr.cy / intr.height)}",
                 f"radial_distortion = {_r(d[0])} {_r(d[1])}",
                 "rotation = " + " ".join(_r(x) for x in R.ravel()),
                 "translation = " + " ".join(_r(x) for x in v.pose.t),
                 "", "[view]", f"id = {k}", f"name = {v.image_name}"]
        if dims_in_ini:
            lines += [f"width = {intr.width}", f"height = {intr.height}"]
        with open(os.path.join(vdir, "meta.ini"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
    lines = ["# Bundle file v0.3", f"{len(views)} {len(rec.points)}"]
    for v in views:
        intr = rec.intrinsics_pool[v.intrinsics_id]
        lines += [f"{_r(intr.fx)} 0 0"] + [" ".join(_r(x) for x in row) for row in D @ _rot(v.pose.q)]
        lines.append(" ".join(_r(x) for x in D @ np.asarray(v.pose.t)))
    meas = [[] for _ in rec.points]
    for o in rec.observations or ():
        intr = rec.intrinsics_pool[rec.cameras[o.camera_id].intrinsics_id]
        meas[o.point_index].append((index[o.camera_id], o.uv[0] - intr.cx, intr.cy - o.uv[1]))
    for p, ms in zip(rec.points, meas):
        lines += [" ".join(_r(x) for x in p.position), " ".join(str(c) for c in p.color),
                  " ".join([str(len(ms))] + [f"{c} {j} {_r(x)} {_r(y)}" for j, (c, x, y) in enumerate(ms)])]
    with open(os.path.join(root, "synth_0.out"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


# -- PLY ---------------------------------------------------------------------

def encode_ply(positions, colors, encoding):
    """Hand-built PLY with double positions and uchar colors."""
    n = len(positions)
    head = (f"ply\nformat {encoding} 1.0\ncomment hand encoded\nelement vertex {n}\n"
            "property double x\nproperty double y\nproperty double z\n"
            "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n").encode()
    if encoding == "ascii":
        body = "".join(" ".join([*(repr(float(v)) for v in p), *(str(int(c)) for c in col)]) + "\n"
                       for p, col in zip(positions, colors)).encode()
    else:
        e = "<" if encoding == "binary_little_endian" else ">"
        body = b"".join(struct.pack(f"{e}3d3B", *p, *col) for p, col in zip(positions, colors))
    return head + body
