"""VisualSfM ``.nvm`` (NVM_V3) reader.

NVM stores camera centres rather than translations, measurements relative to
the image centre, and no image dimensions. The radial coefficient ``r`` is
VisualSfM's undistortion term on pixel measurements
(``m_undist = m * (1 + r * |m|^2)``); it is converted to the first-order
equivalent forward coefficient on normalized coordinates, ``k = -r * f**2``.
"""

from __future__ import annotations

from ..errors import ParseError
from ..geometry import quat_to_matrix, unit_quaternion
from ..scene import (
    CameraIntrinsics, CameraModel, CameraPose, CameraView, Observation, Point3D,
    Provenance, Reconstruction,
)
from ._io import ParseDiagnostics, Tokens, read_text, source_name

MAGIC = "NVM_V3"


def _header_calibration(header, location):
    tokens = header.split()
    if "FixedK" in tokens:
        i = tokens.index("FixedK")
        try:
            fx, cx, fy, cy = (float(v) for v in tokens[i + 1:i + 5])
        except ValueError:
            raise ParseError("malformed FixedK calibration", location) from None
        return fx, cx, fy, cy
    return None


def parse_nvm(source, image_dims=None):
    """Parse the first model of an NVM file.

    ``image_dims`` optionally maps image name -> (width, height); without it
    the principal point falls back to (0, 0) and dimensions are recorded as
    unknown.
    """
    location = source_name(source)
    text = read_text(source)
    if not text.startswith(MAGIC):
        raise ParseError(f"missing {MAGIC} magic", location)
    header, _, body = text.partition("\n")
    fixed = _header_calibration(header, location)
    tok = Tokens(body, location)
    diag = ParseDiagnostics()
    image_dims = image_dims or {}

    n_cameras = tok.int("camera count")
    if n_cameras < 0:
        raise ParseError("negative camera count", location)
    views, pool = {}, {}
    unknown_dims = 0
    for idx in range(n_cameras):
        name = tok.next("image name")
        f = tok.float("focal length")
        q = tok.floats(4, "quaternion")
        center = tok.floats(3, "camera center")
        r = tok.float("radial distortion")
        tok.int("camera record terminator")
        cam_id = idx + 1
        if not f > 0:
            diag.warn(f"{location}:camera {idx}", f"{name}: focal length {f}, treated as unregistered")
            continue
        width, height = image_dims.get(name, (0, 0))
        if fixed is not None:
            fx, cx, fy, cy = fixed
            f = fx
        else:
            cx, cy = width / 2.0, height / 2.0
        if not (width and height):
            unknown_dims += 1
        if fixed is not None and fx != fy:
            pool[cam_id] = CameraIntrinsics(CameraModel.OPENCV, width, height, fx, fy, cx, cy,
                                            (-r * fx * fy, 0.0, 0.0, 0.0))
        else:
            pool[cam_id] = CameraIntrinsics(CameraModel.SIMPLE_RADIAL, width, height, f, f, cx, cy,
                                            (-r * f * f,))
        try:
            q = unit_quaternion(q)
        except ValueError as exc:
            raise ParseError(str(exc), f"{location}:camera {idx}") from None
        R = quat_to_matrix(q)
        t = -R @ center
        views[cam_id] = CameraView(cam_id, name, cam_id, CameraPose(q, tuple(t)))
    if unknown_dims:
        diag.warn(location, f"unknown dimensions for {unknown_dims} camera(s); "
                            "principal point set to the image centre of a 0x0 image")
    diag.counts["unknown_dimensions"] = unknown_dims

    n_points = tok.int("point count") if tok.remaining() else 0
    if n_points < 0:
        raise ParseError("negative point count", location)
    points, observations = [], []
    dropped = 0
    for pidx in range(n_points):
        xyz = tok.floats(3, "point position")
        rgb = [tok.int("color") for _ in range(3)]
        m = tok.int("measurement count")
        track = []
        for _ in range(m):
            img = tok.int("image index")
            feat = tok.int("feature index")
            mx, my = tok.floats(2, "measurement")
            cam_id = img + 1
            intr = pool.get(cam_id)
            if intr is None:
                if not 0 <= img < n_cameras:
                    raise ParseError(f"point {pidx} measures unknown image {img}", location)
                dropped += 1
                continue
            track.append((cam_id, feat))
            observations.append(Observation(cam_id, pidx, (mx + intr.cx, my + intr.cy)))
        try:
            points.append(Point3D(xyz, rgb, None, track))
        except ValueError as exc:
            raise ParseError(str(exc), f"{location}:point {pidx}") from None
    if dropped:
        diag.warn(location, f"dropped {dropped} measurement(s) on unregistered cameras")
    if tok.remaining():
        try:
            extra = int(tok.tokens[tok.pos])
        except ValueError:
            extra = 0
        if extra > 0:
            diag.warn(location, "file holds additional models; only the first was read")

    rec = Reconstruction(views, pool, points, observations, Provenance("nvm", location))
    diag.count_from(rec)
    return rec, diag
