"""Load, convert and animate photogrammetry reconstructions.

All formats are read into one canonical scene: CV world-to-camera poses
(x_cam = R(q) X + t, Hamilton quaternion with w >= 0) and Colmap-style
camera models with pixel centres at half-integer coordinates.
"""

from .analysis import compute_stats, reprojection_report
from .animation import align_quaternion_signs, build_trajectory, sample_frames, sample_trajectory, slerp
from .depth import DepthMap, read_colmap_depth, read_pfm, unproject_depth_map
from .errors import (
    DegenerateQuaternionError, InvalidDepthError, InvalidRotationError, ParseError, PhotosceneError,
    RepresentabilityError, TruncatedDataError, UnrecognizedFormatError, UnsupportedCameraModelError,
)
from .geometry import (
    camera_center, graphics_to_w2c, matrix_to_quat, project, project_points, quat_to_matrix,
    unproject_pixel, w2c_to_c2w_graphics,
)
from .parsers import detect_format, load_reconstruction, load_with_diagnostics
from .ply import PointCloud, parse_ply, write_ply
from .scene import (
    CameraIntrinsics, CameraModel, CameraPose, CameraView, Observation, Point3D, Provenance,
    Reconstruction, validate_references,
)
from .writers import parse_scene_json, write_colmap_text, write_nvm, write_scene_json, write_trajectory

__version__ = "0.1.0"
