"""Keyframe a ring of cameras and sample a smooth flythrough.

    python demos/flythrough.py [out.csv]
"""

import sys

import numpy as np

from photoscene import (
    CameraIntrinsics, CameraModel, CameraPose, CameraView, Reconstruction, build_trajectory,
    camera_center, matrix_to_quat, sample_frames, write_trajectory,
)
from photoscene.synthetic import look_at_rotation

intr = CameraIntrinsics(CameraModel.PINHOLE, 1920, 1080, 1500.0, 1500.0, 960.0, 540.0)
views = {}
for k, angle in enumerate(np.linspace(0, 1.5 * np.pi, 7)):
    c = np.array([5 * np.cos(angle), 5 * np.sin(angle), 1.0])
    R = look_at_rotation(c, np.zeros(3), (0, 0, 1))
    # frame numbers come from the digits in the names
    pose = CameraPose(matrix_to_quat(R), tuple(-R @ c))
    views[k + 1] = CameraView(k + 1, f"shot_{10 * k + 1:03d}.jpg", 1, pose)

traj = build_trajectory(Reconstruction(views, {1: intr}, [], None))
samples = sample_frames(traj, samples_per_interval=2)
print(f"{len(traj.keyframes)} keyframes over frames {traj.first_frame}..{traj.last_frame}, "
      f"{len(samples)} samples")
for frame, state in samples[::12]:
    C = camera_center(state.pose)
    print(f"frame {frame:6.1f}  centre {np.round(C, 3)}  radius {np.linalg.norm(C[:2]):.3f}")

if len(sys.argv) > 1:
    write_trajectory(samples, sys.argv[1], "csv", 24.0, traj.frames)
    print("wrote", sys.argv[1])
