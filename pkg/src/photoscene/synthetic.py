"""Random synthetic scenes with exactly projected observations."""

from __future__ import annotations

import numpy as np

from .geometry import matrix_to_quat, project_points, quat_to_matrix
from .scene import (
    CameraIntrinsics, CameraModel, CameraPose, CameraView, Observation, Point3D,
    Provenance, Reconstruction,
)

ALL_MODELS = tuple(CameraModel)
ISOTROPIC_MODELS = (CameraModel.SIMPLE_PINHOLE, CameraModel.SIMPLE_RADIAL, CameraModel.RADIAL)
# what NVM stores exactly: one focal and one radial coefficient
NVM_MODELS = (CameraModel.SIMPLE_PINHOLE, CameraModel.SIMPLE_RADIAL)


def random_rotation(rng) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return quat_to_matrix(q)


def random_pose(rng, scale=5.0) -> CameraPose:
    R = random_rotation(rng)
    return CameraPose(matrix_to_quat(R), tuple(rng.uniform(-scale, scale, 3)))


def look_at_rotation(center, target, up) -> np.ndarray:
    """World-to-camera rotation (CV axes) for a camera at ``center`` facing ``target``."""
    z = np.asarray(target, float) - np.asarray(center, float)
    z /= np.linalg.norm(z)
    x = np.cross(up, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return np.stack([x, y, z])


def random_intrinsics(rng, model: CameraModel, isotropic=False, centered=False) -> CameraIntrinsics:
    width = int(rng.integers(160, 1600))
    height = int(rng.integers(120, 1200))
    fx = float(rng.uniform(0.6, 1.4) * max(width, height))
    fy = fx if (model.single_focal or isotropic) else fx * float(rng.uniform(0.9, 1.1))
    cx = width / 2.0 + (0.0 if centered else float(rng.uniform(-0.05, 0.05) * width))
    cy = height / 2.0 + (0.0 if centered else float(rng.uniform(-0.05, 0.05) * height))
    dist = {
        CameraModel.SIMPLE_RADIAL: rng.uniform(-0.05, 0.05, 1),
        CameraModel.RADIAL: rng.uniform(-0.05, 0.05, 2),
        CameraModel.OPENCV: np.concatenate([rng.uniform(-0.05, 0.05, 2), rng.uniform(-1e-3, 1e-3, 2)]),
    }.get(model, ())
    return CameraIntrinsics(model, width, height, fx, fy, cx, cy, tuple(dist))


def random_scene(rng, n_cameras=5, n_points=50, models=ALL_MODELS, isotropic=False,
                 observations=True, observe_fraction=0.7, camera_ids=None,
                 shared_intrinsics=False, centered=False) -> Reconstruction:
    """Cameras on a shell of radius 4-6 looking at points in the unit cube.

    ``centered`` puts every principal point at the image centre, as formats
    without a stored principal point require. Observations are generated
    camera-major with the package's own projection, so reprojection error
    is zero up to rounding.
    """
    if isinstance(rng, (int, np.integer)) or rng is None:
        rng = np.random.default_rng(rng)
    ids = list(camera_ids) if camera_ids is not None else list(range(1, n_cameras + 1))
    pool, views = {}, {}
    for k, cam_id in enumerate(ids):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        center = direction * rng.uniform(4.0, 6.0)
        target = rng.uniform(-0.3, 0.3, 3)
        up = rng.normal(size=3)
        R = look_at_rotation(center, target, up)
        pose = CameraPose(matrix_to_quat(R), tuple(-R @ center))
        intr_id = ids[0] if shared_intrinsics else cam_id
        if intr_id not in pool:
            model = models[int(rng.integers(len(models)))]
            pool[intr_id] = random_intrinsics(rng, model, isotropic, centered)
        views[cam_id] = CameraView(cam_id, f"img_{k + 1:04d}.jpg", intr_id, pose)

    X = rng.uniform(-1.0, 1.0, (n_points, 3))
    colors = rng.integers(0, 256, (n_points, 3))
    obs = []
    tracks = [[] for _ in range(n_points)]
    if observations:
        for cam_id, view in views.items():
            chosen = np.nonzero(rng.random(n_points) < observe_fraction)[0]
            if not len(chosen):
                continue
            uv, in_front = project_points(pool[view.intrinsics_id], view.pose, X[chosen])
            feature = 0
            for j, idx in enumerate(chosen):
                if not in_front[j]:
                    continue
                obs.append(Observation(cam_id, int(idx), tuple(uv[j])))
                tracks[idx].append((cam_id, feature))
                feature += 1
    points = [Point3D(tuple(X[i]), tuple(int(c) for c in colors[i]), float(rng.uniform(0, 2)),
                      tuple(tracks[i]))
              for i in range(n_points)]
    return Reconstruction(views, pool, points, obs if observations else None, Provenance("synthetic"))
