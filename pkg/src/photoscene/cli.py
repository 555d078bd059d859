"""``photoscene`` command line: info, convert, validate, animate, unproject.

Exit codes: 0 success, 1 usage, 2 parse or I/O error, 3 representability
problem or empty input, 4 validation failure. Reports go to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .errors import ParseError, PhotosceneError, RepresentabilityError

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_EMPTY, EXIT_INVALID = 0, 1, 2, 3, 4
CONVERT_TARGETS = ("scene-json", "colmap-txt", "nvm", "ply")
DEPTH_SUFFIXES = (".geometric.bin", ".photometric.bin", ".bin", ".pfm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _finite_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be finite, got {text!r}")
    return value


def build_parser():
    from .parsers import FORMATS

    parser = _Parser(prog="photoscene", description="Inspect and convert photogrammetry reconstructions.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def loader_flags(p, flag="--format"):
        p.add_argument(flag, dest="input_format", choices=FORMATS, help="skip format detection")
        p.add_argument("--image-dir", help="PPM/PGM images used to look up missing dimensions")

    p = sub.add_parser("info", help="print scene statistics")
    p.add_argument("input")
    loader_flags(p)
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("convert", help="convert a reconstruction to another format")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--to", required=True, choices=CONVERT_TARGETS)
    loader_flags(p)
    p.add_argument("--ply-encoding", default="binary_little_endian",
                   choices=("ascii", "binary_little_endian", "binary_big_endian"))

    p = sub.add_parser("validate", help="check references and reprojection error")
    p.add_argument("input")
    loader_flags(p)
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.add_argument("--no-distortion", action="store_true", help="project without lens distortion")
    p.add_argument("--max-rmse", type=_finite_float, help="also fail when the global RMSE exceeds this")

    p = sub.add_parser("animate", help="interpolate the registered cameras into a trajectory")
    p.add_argument("input")
    loader_flags(p, "--input-format")
    p.add_argument("--out", required=True)
    p.add_argument("--step", type=_positive_int, default=1, help="frame spacing when names carry no numbers")
    p.add_argument("--fps", type=_finite_float, default=24.0)
    p.add_argument("--samples-per-interval", type=_positive_int, default=1)
    p.add_argument("--format", dest="out_format", choices=("json", "csv"), default="json")
    p.add_argument("--mode", choices=("linear", "none"), default="linear")

    p = sub.add_parser("unproject", help="back-project depth maps into a fused point cloud")
    p.add_argument("input")
    loader_flags(p)
    p.add_argument("--depth-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stride", type=_positive_int, default=1)
    p.add_argument("--min-depth", type=_finite_float)
    p.add_argument("--max-depth", type=_finite_float)
    p.add_argument("--color-dir")
    p.add_argument("--ply-encoding", default="binary_little_endian",
                   choices=("ascii", "binary_little_endian", "binary_big_endian"))
    return parser


def _load(args):
    from .parsers import load_with_diagnostics

    path = args.input
    if not os.path.exists(path):
        raise _Fail(EXIT_PARSE, f"no such file or directory: {path}")
    try:
        rec, diag = load_with_diagnostics(path, args.input_format, args.image_dir)
    except (ParseError, OSError) as exc:
        raise _Fail(EXIT_PARSE, f"cannot read {path}: {exc}") from None
    for w in diag.warnings:
        _warn(w)
    return rec


# -- subcommands ------------------------------------------------------------

def cmd_info(args):
    from .analysis import compute_stats, format_stats

    stats = compute_stats(_load(args))
    if args.json:
        print(json.dumps(stats.to_dict(), indent=1))
    else:
        print(format_stats(stats))
    return EXIT_OK


def cmd_convert(args):
    from . import writers
    from .ply import PointCloud, write_ply

    rec = _load(args)
    try:
        if args.to == "scene-json":
            notes = writers.write_scene_json(rec, args.output)
        elif args.to == "colmap-txt":
            notes = writers.write_colmap_text(rec, args.output)
        elif args.to == "nvm":
            if not rec.cameras:
                raise _Fail(EXIT_EMPTY, "scene has no cameras to write as NVM")
            notes = writers.write_nvm(rec, args.output)
        else:
            cloud = PointCloud.from_points(rec.points)
            notes = write_ply(cloud, args.output, args.ply_encoding) + ["positions stored as float32"]
            dropped = [f for f, n in (("cameras", len(rec.cameras)),
                                      ("observations", len(rec.observations or ()))) if n]
            if dropped:
                notes = list(notes) + [f"only points are written; dropped {', '.join(dropped)}"]
    except RepresentabilityError as exc:
        raise _Fail(EXIT_EMPTY, f"cannot convert to {args.to}: {exc}") from None
    except OSError as exc:
        raise _Fail(EXIT_PARSE, f"cannot write {args.output}: {exc}") from None
    if notes:
        _warn(f"lossy conversion to {args.to}: " + "; ".join(notes))
    return EXIT_OK


def cmd_validate(args):
    from .analysis import format_report, reprojection_report
    from .scene import validate_references

    rec = _load(args)
    violations = validate_references(rec)
    report = reprojection_report(rec, distortion=not args.no_distortion)
    rmse_fail = args.max_rmse is not None and report.rmse is not None and report.rmse > args.max_rmse
    if args.json:
        doc = {"valid": not violations and not rmse_fail,
               "violations": [{"kind": v.kind, "message": v.message} for v in violations],
               "reprojection": report.to_dict()}
        print(json.dumps(doc, indent=1))
    else:
        print(format_report(report))
        for v in violations:
            print(f"violation [{v.kind}] {v.message}")
    if rmse_fail:
        print(f"global RMSE {report.rmse:.6g} px exceeds {args.max_rmse:g}", file=sys.stderr)
    if violations:
        print(f"{len(violations)} violation(s) found", file=sys.stderr)
    return EXIT_INVALID if violations or rmse_fail else EXIT_OK


def cmd_animate(args):
    from .animation import build_trajectory, sample_frames
    from .writers import write_trajectory

    rec = _load(args)
    if not rec.cameras:
        raise _Fail(EXIT_EMPTY, f"{args.input} has no registered cameras to animate")
    traj = build_trajectory(rec, args.step, args.mode)
    samples = sample_frames(traj, args.samples_per_interval)
    try:
        write_trajectory(samples, args.out, args.out_format, args.fps, traj.frames)
    except OSError as exc:
        raise _Fail(EXIT_PARSE, f"cannot write {args.out}: {exc}") from None
    print(f"{len(traj.keyframes)} keyframe(s), {len(samples)} sample(s) -> {args.out}", file=sys.stderr)
    return EXIT_OK


def depth_stem(filename):
    for suffix in DEPTH_SUFFIXES:
        if filename.endswith(suffix):
            return filename[: -len(suffix)]
    return None


def _view_keys(image_name):
    base = os.path.basename(image_name.replace("\\", "/"))
    return {image_name, base, os.path.splitext(base)[0]}


def match_depth_files(views, filenames):
    """Map view id -> depth filename, plus the stems no view claimed."""
    by_key = {}
    for view in views:
        for key in _view_keys(view.image_name):
            by_key.setdefault(key, view.id)
    matched, unmatched = {}, []
    for name in sorted(filenames):
        stem = depth_stem(name)
        if stem is None:
            continue
        view_id = by_key.get(stem)
        if view_id is None:
            view_id = by_key.get(os.path.splitext(stem)[0])
        if view_id is None or view_id in matched:
            unmatched.append(stem)
        else:
            matched[view_id] = name
    return matched, unmatched


def _find_color(color_dir, image_name):
    base = os.path.basename(image_name.replace("\\", "/"))
    for cand in (base + ".ppm", os.path.splitext(base)[0] + ".ppm"):
        path = os.path.join(color_dir, cand)
        if os.path.isfile(path):
            return path
    return None


def cmd_unproject(args):
    from .depth import fuse_depth_clouds, read_colmap_depth, read_pfm, read_ppm, unproject_depth_map
    from .ply import write_ply

    if args.min_depth is not None and args.max_depth is not None and args.min_depth > args.max_depth:
        raise UsageError("--min-depth must not exceed --max-depth")
    if not os.path.isdir(args.depth_dir):
        raise _Fail(EXIT_PARSE, f"depth directory not found: {args.depth_dir}")
    rec = _load(args)
    matched, unmatched = match_depth_files(rec.views(), os.listdir(args.depth_dir))
    for stem in unmatched:
        _warn(f"depth file {stem!r} matches no registered view")
    if not matched:
        raise _Fail(EXIT_EMPTY, f"no depth files in {args.depth_dir} match a registered view")

    depth_range = None
    if args.min_depth is not None or args.max_depth is not None:
        depth_range = (args.min_depth if args.min_depth is not None else 0.0,
                       args.max_depth if args.max_depth is not None else math.inf)
    clouds, failed = [], 0
    for view_id, filename in sorted(matched.items()):
        view = rec.cameras[view_id]
        path = os.path.join(args.depth_dir, filename)
        try:
            dmap = read_pfm(path) if filename.endswith(".pfm") else read_colmap_depth(path)
            color = None
            if args.color_dir:
                cpath = _find_color(args.color_dir, view.image_name)
                if cpath:
                    color = read_ppm(cpath)
                else:
                    _warn(f"no color image for {view.image_name} in {args.color_dir}")
            cloud = unproject_depth_map(dmap, rec.intrinsics_of(view), view.pose,
                                        args.stride, depth_range, color)
        except (PhotosceneError, OSError, ValueError) as exc:
            failed += 1
            _warn(f"view {view_id} ({filename}): {exc}")
            continue
        print(f"{view.image_name}\t{len(cloud)}")
        clouds.append((view_id, cloud))
    if not clouds:
        raise _Fail(EXIT_PARSE, f"all {failed} matched depth map(s) failed")
    fused = fuse_depth_clouds(clouds)
    try:
        write_ply(fused, args.out, args.ply_encoding)
    except OSError as exc:
        raise _Fail(EXIT_PARSE, f"cannot write {args.out}: {exc}") from None
    print(f"total\t{len(fused)}")
    return EXIT_OK


COMMANDS = {"info": cmd_info, "convert": cmd_convert, "validate": cmd_validate,
            "animate": cmd_animate, "unproject": cmd_unproject}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except RepresentabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SystemExit as exc:
        # --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK
