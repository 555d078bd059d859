"""Rotations, convention changes, projection and image-plane geometry.

Quaternions are Hamilton, scalar first ``(w, x, y, z)``. Pixel coordinates
are continuous with the centre of the top-left pixel at ``(0.5, 0.5)``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateQuaternionError, InvalidDepthError, InvalidRotationError
from .scene import CameraIntrinsics, CameraModel, CameraPose

# CV camera axes (y down, z forward) <-> graphics camera axes (y up, looks -z)
FLIP_YZ = np.diag([1.0, -1.0, -1.0])


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = (float(v) for v in q)
    norm = math.sqrt(w * w + x * x + y * y + z * z)
    if norm == 0.0 or not math.isfinite(norm):
        raise DegenerateQuaternionError(f"degenerate quaternion {tuple(q)}")
    if norm != 1.0:
        w, x, y, z = w / norm, x / norm, y / norm, z / norm
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def unit_quaternion(q) -> tuple:
    """``q`` scaled to unit norm; exact unit inputs pass through bit-identical."""
    q = tuple(float(v) for v in q)
    norm = math.sqrt(sum(v * v for v in q))
    if norm == 0.0 or not math.isfinite(norm):
        raise DegenerateQuaternionError(f"degenerate quaternion {q}")
    if norm == 1.0:
        return q
    return tuple(v / norm for v in q)


def check_rotation(R, tol=1e-6, what="rotation"):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidRotationError(f"invalid {what}: expected a finite 3x3 matrix")
    err = np.abs(R @ R.T - np.eye(3)).max()
    if err > tol:
        raise InvalidRotationError(f"invalid {what}: not orthonormal (max error {err:.3g})")
    if np.linalg.det(R) <= 0:
        raise InvalidRotationError(f"invalid {what}: determinant is negative (mirrored)")
    return R


def matrix_to_quat(R, tol=1e-6) -> tuple:
    """Rotation matrix to unit quaternion with ``w >= 0`` (Shepperd's method)."""
    m = check_rotation(R, tol)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = 2.0 * math.sqrt(tr + 1.0)
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    q = np.array([w, x, y, z])
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return tuple(float(v) + 0.0 for v in q)


def quat_multiply(a, b) -> tuple:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conjugate(q) -> tuple:
    return (q[0], -q[1], -q[2], -q[3])


def pose_from_rotation(R, t, tol=1e-6) -> CameraPose:
    return CameraPose(matrix_to_quat(R, tol), tuple(np.asarray(t, dtype=float)))


def pose_from_center(R, C, tol=1e-6) -> CameraPose:
    """Pose for ``x_cam = R @ (x_world - C)``."""
    R = check_rotation(R, tol)
    return CameraPose(matrix_to_quat(R, tol), tuple(-R @ np.asarray(C, dtype=float)))


def rotation(pose: CameraPose) -> np.ndarray:
    return quat_to_matrix(pose.q)


def camera_center(pose: CameraPose) -> np.ndarray:
    R = quat_to_matrix(pose.q)
    return -R.T @ np.asarray(pose.t)


def world_to_camera(pose: CameraPose, X) -> np.ndarray:
    """Map world points (N, 3) or (3,) into the CV camera frame."""
    R = quat_to_matrix(pose.q)
    return np.asarray(X, dtype=float) @ R.T + np.asarray(pose.t)


def camera_to_world(pose: CameraPose, Xc) -> np.ndarray:
    R = quat_to_matrix(pose.q)
    return (np.asarray(Xc, dtype=float) - np.asarray(pose.t)) @ R


def w2c_to_c2w_graphics(pose: CameraPose) -> np.ndarray:
    """4x4 camera-to-world transform for a camera looking down -z with +y up."""
    R = quat_to_matrix(pose.q)
    M = np.eye(4)
    M[:3, :3] = R.T @ FLIP_YZ
    M[:3, 3] = -R.T @ np.asarray(pose.t)
    return M


def graphics_to_w2c(M, tol=1e-6) -> CameraPose:
    M = np.asarray(M, dtype=float)
    if M.shape != (4, 4) or not np.allclose(M[3], [0.0, 0.0, 0.0, 1.0], rtol=0, atol=1e-12):
        raise InvalidRotationError("invalid rotation: expected a rigid 4x4 homogeneous transform")
    B = check_rotation(M[:3, :3], tol, "rotation block")
    R = FLIP_YZ @ B.T
    return CameraPose(matrix_to_quat(R, tol), tuple(-R @ M[:3, 3]))


def apply_distortion(model: CameraModel, coeffs, p) -> np.ndarray:
    """Distort normalized image coordinates ``p`` of shape (2,) or (N, 2)."""
    coeffs = tuple(coeffs)
    if len(coeffs) != model.num_distortion:
        raise ValueError(
            f"{model.name} takes {model.num_distortion} distortion coefficients, got {len(coeffs)}"
        )
    p = np.asarray(p, dtype=float)
    if model in (CameraModel.SIMPLE_PINHOLE, CameraModel.PINHOLE):
        return p.copy()
    x, y = p[..., 0], p[..., 1]
    r2 = x * x + y * y
    if model is CameraModel.SIMPLE_RADIAL:
        radial = 1.0 + coeffs[0] * r2
        return np.stack([x * radial, y * radial], axis=-1)
    if model is CameraModel.RADIAL:
        k1, k2 = coeffs
        radial = 1.0 + k1 * r2 + k2 * r2 * r2
        return np.stack([x * radial, y * radial], axis=-1)
    k1, k2, p1, p2 = coeffs
    radial = 1.0 + k1 * r2 + k2 * r2 * r2
    dx = 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    dy = p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    return np.stack([x * radial + dx, y * radial + dy], axis=-1)


def project_points(intr: CameraIntrinsics, pose: CameraPose, X, distortion=True):
    """Project world points (N, 3); returns ``(uv, in_front)``.

    Rows with ``in_front == False`` hold NaN.
    """
    Xc = world_to_camera(pose, np.atleast_2d(X))
    z = Xc[:, 2]
    in_front = z > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        n = Xc[:, :2] / z[:, None]
    if distortion:
        n = apply_distortion(intr.model, intr.distortion, n)
    uv = np.empty_like(n)
    uv[:, 0] = intr.fx * n[:, 0] + intr.cx
    uv[:, 1] = intr.fy * n[:, 1] + intr.cy
    uv[~in_front] = np.nan
    return uv, in_front


def project(intr: CameraIntrinsics, pose: CameraPose, X, distortion=True):
    """Pixel ``(u, v)`` of world point ``X``, or None when it is behind the camera."""
    uv, in_front = project_points(intr, pose, np.asarray(X, dtype=float)[None, :], distortion)
    if not in_front[0]:
        return None
    return float(uv[0, 0]), float(uv[0, 1])


def unproject_pixels(fx, fy, cx, cy, u, v, depth) -> np.ndarray:
    u, v, depth = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (u, v, depth)))
    return np.stack([(u - cx) / fx * depth, (v - cy) / fy * depth, depth], axis=-1)


def unproject_pixel(intr: CameraIntrinsics, uv, depth) -> np.ndarray:
    """Camera-frame point at pixel ``uv`` and depth along +z; distortion is ignored."""
    d = float(depth)
    if not (math.isfinite(d) and d > 0):
        raise InvalidDepthError(f"invalid depth {depth}")
    return unproject_pixels(intr.fx, intr.fy, intr.cx, intr.cy, uv[0], uv[1], d)


def fov_and_shift(intr: CameraIntrinsics):
    """Horizontal field of view (radians) and lens shift normalized by the larger side."""
    if not intr.dimensions_known:
        return 0.0, 0.0, 0.0
    fov_x = 2.0 * math.atan(intr.width / (2.0 * intr.fx))
    size = max(intr.width, intr.height)
    shift_x = (intr.width / 2.0 - intr.cx) / size
    shift_y = (intr.cy - intr.height / 2.0) / size
    return fov_x, shift_x, shift_y


def image_plane_corners(intr: CameraIntrinsics, pose: CameraPose, distance) -> np.ndarray:
    """World corners (top-left, top-right, bottom-right, bottom-left) at ``distance``."""
    d = float(distance)
    if not (math.isfinite(d) and d > 0):
        raise InvalidDepthError(f"invalid depth {distance}")
    w, h = intr.width, intr.height
    u = np.array([0.0, w, w, 0.0])
    v = np.array([0.0, 0.0, h, h])
    corners = unproject_pixels(intr.fx, intr.fy, intr.cx, intr.cy, u, v, d)
    return camera_to_world(pose, corners)
