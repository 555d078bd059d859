"""File handlers, format detection and the ``load_reconstruction`` entry point."""

from __future__ import annotations

import json
import os

from ..errors import ParseError, UnrecognizedFormatError
from ..scene import Point3D, Provenance, Reconstruction
from ._io import ParseDiagnostics
from .bundler import parse_bundler_out
from .colmap import parse_colmap_model
from .meshroom import parse_meshroom_sfm
from .mve import parse_mve_workspace
from .nvm import parse_nvm
from .openmvg import parse_openmvg_sfm_data

FORMATS = ("colmap", "meshroom", "mve", "openmvg", "nvm", "bundler", "ply", "scene-json")
# pipelines whose output each file handler covers
PIPELINES = {
    "Colmap": "colmap",
    "Meshroom": "meshroom",
    "MVE": "mve",
    "OpenMVG / OpenMVS": "openmvg",
    "Regard3D": "openmvg",
    "VisualSfM": "nvm",
}
_SNIFF_BYTES = 64


def _sniff_json(path):
    try:
        with open(path, "rb") as fh:
            doc = json.loads(fh.read().decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError, OSError):
        return None
    if not isinstance(doc, dict):
        return None
    if "sfm_data_version" in doc:
        return "openmvg"
    if "views" in doc and "poses" in doc:
        return "meshroom"
    if "format_version" in doc and "cameras" in doc:
        return "scene-json"
    return None


def detect_format(path) -> str:
    """Format id for ``path`` from its directory listing or leading bytes."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if os.path.isdir(path):
        entries = set(os.listdir(path))
        if "cameras.bin" in entries or "cameras.txt" in entries:
            return "colmap"
        if "synth_0.out" in entries and os.path.isdir(os.path.join(path, "views")):
            return "mve"
        raise UnrecognizedFormatError(path)
    with open(path, "rb") as fh:
        head = fh.read(_SNIFF_BYTES)
    if head.startswith(b"NVM_V3"):
        return "nvm"
    if head.startswith(b"# Bundle file"):
        return "bundler"
    if head.startswith(b"ply\n") or head.startswith(b"ply\r\n"):
        return "ply"
    if head.lstrip()[:1] == b"{":
        fmt = _sniff_json(path)
        if fmt:
            return fmt
    raise UnrecognizedFormatError(path)


class ImageDimensions:
    """Lazy name -> (width, height) lookup over PPM/PGM headers in a directory."""

    def __init__(self, image_dir):
        self.image_dir = os.fspath(image_dir)
        self._cache = {}

    def _candidates(self, name):
        base = os.path.join(self.image_dir, name)
        stem = os.path.splitext(base)[0]
        flat = os.path.join(self.image_dir, os.path.splitext(os.path.basename(name))[0])
        return [base, stem + ".ppm", stem + ".pgm", flat + ".ppm", flat + ".pgm"]

    def get(self, name, default=(0, 0)):
        if name not in self._cache:
            from ..depth import read_pnm_size

            dims = default
            for cand in self._candidates(name):
                if os.path.isfile(cand):
                    try:
                        dims = read_pnm_size(cand)
                        break
                    except ParseError:
                        continue
            self._cache[name] = dims
        return self._cache[name]


def _ply_as_reconstruction(path):
    from ..ply import parse_ply

    cloud, diag = parse_ply(path)
    colors = cloud.colors.tolist() if cloud.colors is not None else [(255, 255, 255)] * len(cloud)
    points = [Point3D(p, c) for p, c in zip(cloud.positions.tolist(), colors)]
    if cloud.faces:
        diag.warn(os.fspath(path), f"{len(cloud.faces)} face(s) not represented in the scene")
    rec = Reconstruction({}, {}, points, None, Provenance("ply", os.fspath(path)))
    return rec, diag.count_from(rec)


def load_with_diagnostics(path, hint=None, image_dir=None):
    """Parse ``path`` with the handler for ``hint`` (or the detected format)."""
    if not os.path.exists(os.fspath(path)):
        raise FileNotFoundError(os.fspath(path))
    fmt = hint or detect_format(path)
    if fmt not in FORMATS:
        raise ValueError(f"unknown format hint {fmt!r}; expected one of {', '.join(FORMATS)}")
    dims = ImageDimensions(image_dir) if image_dir else None
    if fmt == "colmap":
        return parse_colmap_model(path)
    if fmt == "nvm":
        return parse_nvm(path, dims)
    if fmt == "bundler":
        return parse_bundler_out(path, dims)
    if fmt == "openmvg":
        return parse_openmvg_sfm_data(path)
    if fmt == "meshroom":
        return parse_meshroom_sfm(path)
    if fmt == "mve":
        return parse_mve_workspace(path)
    if fmt == "ply":
        return _ply_as_reconstruction(path)
    from ..writers import parse_scene_json

    rec = parse_scene_json(path)
    return rec, ParseDiagnostics().count_from(rec)


def load_reconstruction(path, hint=None, image_dir=None) -> Reconstruction:
    return load_with_diagnostics(path, hint, image_dir)[0]


__all__ = [
    "FORMATS", "PIPELINES", "ParseDiagnostics", "detect_format", "load_reconstruction",
    "load_with_diagnostics", "parse_bundler_out", "parse_colmap_model", "parse_meshroom_sfm",
    "parse_mve_workspace", "parse_nvm", "parse_openmvg_sfm_data",
]
