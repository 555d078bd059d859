"""Scene statistics and reprojection-error reports."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .geometry import project_points
from .scene import Reconstruction


@dataclass
class SceneStats:
    cameras: int
    points: int
    observations: int
    bbox_min: Optional[list]
    bbox_max: Optional[list]
    cameras_with_observations: int
    cameras_without_observations: int
    mean_point_error: Optional[float]
    max_point_error: Optional[float]

    def to_dict(self):
        return asdict(self)


@dataclass
class CameraReprojection:
    camera_id: int
    evaluated: int
    rmse: Optional[float]
    max_error: Optional[float]


@dataclass
class ReprojectionReport:
    total: int = 0
    evaluated: int = 0
    behind_camera: int = 0
    skipped: int = 0
    rmse: Optional[float] = None
    max_error: Optional[float] = None
    per_camera: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def compute_stats(rec: Reconstruction) -> SceneStats:
    observed = defaultdict(int)
    for obs in rec.observations or ():
        observed[obs.camera_id] += 1
    with_obs = sum(1 for cam_id in rec.cameras if observed.get(cam_id))
    if rec.points:
        P = np.array([p.position for p in rec.points])
        bbox_min, bbox_max = P.min(axis=0).tolist(), P.max(axis=0).tolist()
    else:
        bbox_min = bbox_max = None
    errors = [p.error for p in rec.points if p.error is not None]
    return SceneStats(
        cameras=len(rec.cameras),
        points=len(rec.points),
        observations=len(rec.observations or ()),
        bbox_min=bbox_min,
        bbox_max=bbox_max,
        cameras_with_observations=with_obs,
        cameras_without_observations=len(rec.cameras) - with_obs,
        mean_point_error=float(np.mean(errors)) if errors else None,
        max_point_error=float(np.max(errors)) if errors else None,
    )


def reprojection_report(rec: Reconstruction, distortion=True) -> ReprojectionReport:
    """Project every observed point into its camera and compare with the stored pixel."""
    report = ReprojectionReport(total=len(rec.observations or ()))
    by_camera = defaultdict(list)
    for obs in rec.observations or ():
        view = rec.cameras.get(obs.camera_id)
        if view is None or view.intrinsics_id not in rec.intrinsics_pool \
                or not 0 <= obs.point_index < len(rec.points):
            report.skipped += 1
            continue
        by_camera[obs.camera_id].append(obs)

    sq_sum = 0.0
    worst = 0.0
    for cam_id, obs_list in by_camera.items():
        view = rec.cameras[cam_id]
        intr = rec.intrinsics_of(view)
        X = np.array([rec.points[o.point_index].position for o in obs_list])
        uv = np.array([o.uv for o in obs_list])
        proj, in_front = project_points(intr, view.pose, X, distortion)
        report.behind_camera += int((~in_front).sum())
        err = np.linalg.norm(proj[in_front] - uv[in_front], axis=1)
        if len(err):
            cam_sq = float(np.sum(err * err))
            sq_sum += cam_sq
            worst = max(worst, float(err.max()))
            report.evaluated += len(err)
            report.per_camera.append(CameraReprojection(
                cam_id, len(err), math.sqrt(cam_sq / len(err)), float(err.max())))
        else:
            report.per_camera.append(CameraReprojection(cam_id, 0, None, None))
    if report.evaluated:
        report.rmse = math.sqrt(sq_sum / report.evaluated)
        report.max_error = worst
    return report


def format_stats(stats: SceneStats) -> str:
    rows = [
        ("cameras", stats.cameras),
        ("points", stats.points),
        ("observations", stats.observations),
        ("cameras with observations", stats.cameras_with_observations),
        ("cameras without observations", stats.cameras_without_observations),
        ("bbox min", "empty" if stats.bbox_min is None else " ".join(f"{v:.6g}" for v in stats.bbox_min)),
        ("bbox max", "empty" if stats.bbox_max is None else " ".join(f"{v:.6g}" for v in stats.bbox_max)),
        ("mean point error", "n/a" if stats.mean_point_error is None else f"{stats.mean_point_error:.6g}"),
        ("max point error", "n/a" if stats.max_point_error is None else f"{stats.max_point_error:.6g}"),
    ]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def format_report(report: ReprojectionReport) -> str:
    fmt = lambda v: "n/a" if v is None else f"{v:.6g}"  # noqa: E731
    lines = [
        f"observations     {report.total}",
        f"evaluated        {report.evaluated}",
        f"behind camera    {report.behind_camera}",
        f"skipped          {report.skipped}",
        f"global RMSE (px) {fmt(report.rmse)}",
        f"max error (px)   {fmt(report.max_error)}",
    ]
    if report.per_camera:
        lines.append(f"{'camera':>8} {'n':>7} {'rmse':>12} {'max':>12}")
        for c in report.per_camera:
            lines.append(f"{c.camera_id:>8} {c.evaluated:>7} {fmt(c.rmse):>12} {fmt(c.max_error):>12}")
    return "\n".join(lines)
