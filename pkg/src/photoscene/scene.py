"""Canonical in-memory scene shared by every parser and writer.

Poses are stored world-to-camera in the computer-vision axis convention
(x right, y down, z forward): ``x_cam = R(q) @ x_world + t``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional


class CameraModel(enum.Enum):
    # value: (colmap model id, number of distortion coefficients)
    SIMPLE_PINHOLE = (0, 0)
    PINHOLE = (1, 0)
    SIMPLE_RADIAL = (2, 1)
    RADIAL = (3, 2)
    OPENCV = (4, 4)

    @property
    def model_id(self) -> int:
        return self.value[0]

    @property
    def num_distortion(self) -> int:
        return self.value[1]

    @property
    def single_focal(self) -> bool:
        return self.name.startswith("SIMPLE") or self is CameraModel.RADIAL

    @property
    def num_params(self) -> int:
        return (3 if self.single_focal else 4) + self.num_distortion

    @classmethod
    def from_id(cls, model_id: int) -> "CameraModel":
        for model in cls:
            if model.model_id == model_id:
                return model
        raise ValueError(f"unknown camera model id {model_id}")


@dataclass(frozen=True)
class CameraIntrinsics:
    model: CameraModel
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    distortion: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "distortion", tuple(float(k) for k in self.distortion))
        if len(self.distortion) != self.model.num_distortion:
            raise ValueError(
                f"{self.model.name} takes {self.model.num_distortion} distortion "
                f"coefficients, got {len(self.distortion)}"
            )
        if self.model.single_focal and self.fx != self.fy:
            raise ValueError(f"{self.model.name} requires fx == fy")
        if self.width < 0 or self.height < 0:
            raise ValueError("image dimensions must be non-negative")

    @property
    def dimensions_known(self) -> bool:
        """Width/height of 0 mark formats that do not store image size."""
        return self.width > 0 and self.height > 0

    def params(self) -> list:
        """Parameter vector in Colmap order."""
        if self.model.single_focal:
            head = [self.fx, self.cx, self.cy]
        else:
            head = [self.fx, self.fy, self.cx, self.cy]
        return head + list(self.distortion)

    @classmethod
    def from_params(cls, model: CameraModel, width: int, height: int, params) -> "CameraIntrinsics":
        params = [float(p) for p in params]
        if len(params) != model.num_params:
            raise ValueError(
                f"{model.name} takes {model.num_params} parameters, got {len(params)}"
            )
        if model.single_focal:
            f, cx, cy = params[:3]
            return cls(model, int(width), int(height), f, f, cx, cy, params[3:])
        fx, fy, cx, cy = params[:4]
        return cls(model, int(width), int(height), fx, fy, cx, cy, params[4:])


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera rotation ``q`` (w, x, y, z) and translation ``t``.

    The quaternion is stored with ``w >= 0``; a negative scalar part flips the
    whole quaternion on construction.
    """

    q: tuple = (1.0, 0.0, 0.0, 0.0)
    t: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        q = tuple(float(v) for v in self.q)
        t = tuple(float(v) for v in self.t)
        if len(q) != 4 or len(t) != 3:
            raise ValueError("pose needs a 4-vector quaternion and a 3-vector translation")
        if q[0] < 0:
            q = tuple(-v for v in q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "t", t)

    convention = "cv-w2c"


@dataclass(frozen=True)
class CameraView:
    id: int
    image_name: str
    intrinsics_id: int
    pose: CameraPose

    def __post_init__(self):
        if not self.image_name:
            raise ValueError(f"camera view {self.id} has an empty image name")


@dataclass(frozen=True)
class Point3D:
    position: tuple
    color: tuple = (255, 255, 255)
    error: Optional[float] = None
    track: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        color = tuple(int(c) for c in self.color)
        if len(color) != 3 or any(c < 0 or c > 255 for c in color):
            raise ValueError(f"color channels must lie in [0, 255], got {self.color}")
        object.__setattr__(self, "color", color)
        if self.error is not None:
            if not self.error >= 0:
                raise ValueError(f"point error must be non-negative, got {self.error}")
            object.__setattr__(self, "error", float(self.error))
        if self.track is not None:
            object.__setattr__(self, "track", tuple((int(c), int(f)) for c, f in self.track))


@dataclass(frozen=True)
class Observation:
    camera_id: int
    point_index: int
    uv: tuple

    def __post_init__(self):
        object.__setattr__(self, "uv", (float(self.uv[0]), float(self.uv[1])))


@dataclass(frozen=True)
class Provenance:
    format: str = "memory"
    root: str = ""
    # source point id per dense point index, when the format has its own ids
    point_ids: Optional[tuple] = None


@dataclass(frozen=True)
class Reconstruction:
    cameras: dict = field(default_factory=dict)
    intrinsics_pool: dict = field(default_factory=dict)
    points: tuple = ()
    observations: Optional[tuple] = None
    source: Provenance = field(default_factory=Provenance)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if self.observations is not None:
            object.__setattr__(self, "observations", tuple(self.observations))
        for key, view in self.cameras.items():
            if key != view.id:
                raise ValueError(f"camera map key {key} does not match view id {view.id}")

    def intrinsics_of(self, view: CameraView) -> CameraIntrinsics:
        return self.intrinsics_pool[view.intrinsics_id]

    def views(self):
        return list(self.cameras.values())


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


def validate_references(rec: Reconstruction, quat_tol: float = 1e-6) -> list:
    """Return every referential or numeric violation found in ``rec``."""
    report = []
    for view in rec.cameras.values():
        if view.intrinsics_id not in rec.intrinsics_pool:
            report.append(Violation(
                "dangling_intrinsics",
                f"camera {view.id} references missing intrinsics {view.intrinsics_id}",
            ))
        norm = math.sqrt(sum(v * v for v in view.pose.q))
        if not abs(norm - 1.0) <= quat_tol:
            report.append(Violation(
                "non_unit_quaternion",
                f"camera {view.id} quaternion has norm {norm:.9g}",
            ))
    for intr_id, intr in rec.intrinsics_pool.items():
        if not (intr.fx > 0 and intr.fy > 0):
            report.append(Violation(
                "non_positive_focal",
                f"intrinsics {intr_id} has focal lengths ({intr.fx}, {intr.fy})",
            ))
    n_points = len(rec.points)
    for k, obs in enumerate(rec.observations or ()):
        if obs.camera_id not in rec.cameras:
            report.append(Violation(
                "dangling_observation_camera",
                f"observation {k} references missing camera {obs.camera_id}",
            ))
        if not 0 <= obs.point_index < n_points:
            report.append(Violation(
                "point_index_out_of_range",
                f"observation {k} references point {obs.point_index} of {n_points}",
            ))
    return report
