"""Animated camera built from the registered views.

Keyframes come from image names, rotations are sign-aligned and slerped,
camera centres and intrinsics are interpolated linearly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .geometry import camera_center, fov_and_shift, quat_to_matrix
from .scene import CameraPose, Reconstruction

NLERP_THRESHOLD = 1.0 - 1e-9
MODES = ("linear", "none")

_DIGITS = re.compile(r"\d+")


@dataclass(frozen=True)
class Keyframe:
    frame: int
    pose: CameraPose
    fov_x: float
    shift_x: float
    shift_y: float


@dataclass(frozen=True)
class CameraState:
    pose: CameraPose
    fov_x: float
    shift_x: float
    shift_y: float
    # sign-continuous rotation (pose.q is the canonical w >= 0 representative)
    q: tuple


@dataclass(frozen=True)
class Trajectory:
    keyframes: tuple
    mode: str
    aligned_quats: tuple

    @property
    def frames(self):
        return [kf.frame for kf in self.keyframes]

    @property
    def first_frame(self):
        return self.keyframes[0].frame

    @property
    def last_frame(self):
        return self.keyframes[-1].frame


def _stem(name):
    base = name.replace("\\", "/").rsplit("/", 1)[-1]
    return base.rsplit(".", 1)[0] if "." in base[1:] else base


def natural_key(name):
    return [(0, int(part), "") if part.isdigit() else (1, 0, part.lower())
            for part in re.split(r"(\d+)", name) if part]


def assign_frames(views, step=1):
    """Pair each view with a frame number, returned in ascending frame order.

    Frames are the last digit group of each image stem when those are distinct
    across all views; otherwise views are natural-sorted by name and spaced
    ``step`` frames apart starting at 1.
    """
    views = list(views)
    if not views:
        raise ValueError("cannot assign frames to an empty view set")
    step = int(step)
    if step < 1:
        raise ValueError("step must be >= 1")
    numbers = []
    for view in views:
        groups = _DIGITS.findall(_stem(view.image_name))
        numbers.append(int(groups[-1]) if groups else None)
    if None not in numbers and len(set(numbers)) == len(numbers):
        pairs = list(zip(numbers, views))
    else:
        ordered = sorted(views, key=lambda v: natural_key(v.image_name))
        pairs = [(1 + k * step, v) for k, v in enumerate(ordered)]
    return sorted(pairs, key=lambda p: p[0])


def align_quaternion_signs(qs):
    """Flip quaternions so each has a non-negative dot product with its predecessor."""
    out = []
    for q in qs:
        q = tuple(float(v) for v in q)
        if out and sum(a * b for a, b in zip(out[-1], q)) < 0:
            q = tuple(-v for v in q)
        out.append(q)
    return out


def slerp(qa, qb, u):
    qa = np.asarray(qa, dtype=float)
    qb = np.asarray(qb, dtype=float)
    dot = float(np.dot(qa, qb))
    if dot < 0:
        qb, dot = -qb, -dot
    if dot > NLERP_THRESHOLD:
        q = (1.0 - u) * qa + u * qb
    else:
        theta = math.acos(min(dot, 1.0))
        s = math.sin(theta)
        q = (math.sin((1.0 - u) * theta) / s) * qa + (math.sin(u * theta) / s) * qb
    return tuple(q / np.linalg.norm(q))


def build_trajectory(rec: Reconstruction, step=1, mode="linear") -> Trajectory:
    if mode not in MODES:
        raise ValueError(f"interpolation mode must be one of {MODES}")
    if not rec.cameras:
        raise ValueError("reconstruction has no registered cameras")
    keyframes = []
    for frame, view in assign_frames(rec.views(), step):
        fov_x, shift_x, shift_y = fov_and_shift(rec.intrinsics_of(view))
        keyframes.append(Keyframe(frame, view.pose, fov_x, shift_x, shift_y))
    aligned = align_quaternion_signs(kf.pose.q for kf in keyframes)
    return Trajectory(tuple(keyframes), mode, tuple(aligned))


def _keyframe_state(traj, i):
    kf = traj.keyframes[i]
    return CameraState(kf.pose, kf.fov_x, kf.shift_x, kf.shift_y, traj.aligned_quats[i])


def sample_trajectory(traj: Trajectory, frame) -> CameraState:
    kfs = traj.keyframes
    frames = [kf.frame for kf in kfs]
    if frame <= frames[0]:
        return _keyframe_state(traj, 0)
    if frame >= frames[-1]:
        return _keyframe_state(traj, len(kfs) - 1)
    # index of the last keyframe at or below ``frame``
    i = int(np.searchsorted(frames, frame, side="right")) - 1
    if frame == frames[i] or traj.mode == "none":
        return _keyframe_state(traj, i)
    a, b = kfs[i], kfs[i + 1]
    u = (frame - a.frame) / (b.frame - a.frame)
    q = slerp(traj.aligned_quats[i], traj.aligned_quats[i + 1], u)
    center = (1.0 - u) * camera_center(a.pose) + u * camera_center(b.pose)
    t = -quat_to_matrix(q) @ center
    lerp = lambda x, y: (1.0 - u) * x + u * y  # noqa: E731
    return CameraState(CameraPose(q, tuple(t)), lerp(a.fov_x, b.fov_x),
                       lerp(a.shift_x, b.shift_x), lerp(a.shift_y, b.shift_y), q)


def sample_frames(traj: Trajectory, samples_per_interval=1):
    """(frame, state) at every 1/``samples_per_interval`` frame from first to last keyframe."""
    s = int(samples_per_interval)
    if s < 1:
        raise ValueError("samples_per_interval must be >= 1")
    first, last = traj.first_frame, traj.last_frame
    out = []
    for k in range((last - first) * s + 1):
        frame = first + k // s if k % s == 0 else first + k / s
        out.append((frame, sample_trajectory(traj, frame)))
    return out
