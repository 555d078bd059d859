"""PLY point clouds and meshes: ascii, binary little-endian and big-endian."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParseError, TruncatedDataError
from .parsers._io import ParseDiagnostics, read_bytes, source_name

SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}
FORMATS = {"ascii": None, "binary_little_endian": "<", "binary_big_endian": ">"}
COLOR_NAMES = (("red", "green", "blue"), ("diffuse_red", "diffuse_green", "diffuse_blue"))
FACE_LISTS = ("vertex_indices", "vertex_index")


@dataclass
class PointCloud:
    positions: np.ndarray
    colors: Optional[np.ndarray] = None
    normals: Optional[np.ndarray] = None
    faces: Optional[list] = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
            if len(self.colors) != len(self.positions):
                raise ValueError("colors and positions differ in length")
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if len(self.normals) != len(self.positions):
                raise ValueError("normals and positions differ in length")

    def __len__(self):
        return len(self.positions)

    @classmethod
    def empty(cls, with_colors=True):
        return cls(np.zeros((0, 3)), np.zeros((0, 3), np.uint8) if with_colors else None)

    @classmethod
    def from_points(cls, points):
        """Cloud holding the positions and colors of a sequence of Point3D."""
        if not len(points):
            return cls.empty()
        return cls(np.array([p.position for p in points]), np.array([p.color for p in points]))


@dataclass
class Property:
    name: str
    dtype: str
    count_dtype: Optional[str] = None  # set for list properties

    @property
    def is_list(self):
        return self.count_dtype is not None


@dataclass
class Element:
    name: str
    count: int
    properties: list


def _scalar(type_name, location):
    try:
        return SCALAR_TYPES[type_name]
    except KeyError:
        raise ParseError(f"unknown property type {type_name!r}", location) from None


def parse_header(data: bytes, location="<ply>"):
    """Return (format name, elements, payload offset)."""
    if not (data.startswith(b"ply\n") or data.startswith(b"ply\r\n")):
        raise ParseError("missing 'ply' magic", location)
    end = data.find(b"end_header")
    if end < 0:
        raise ParseError("header lacks end_header", location)
    nl = data.find(b"\n", end)
    offset = len(data) if nl < 0 else nl + 1
    lines = data[:end].decode("ascii", errors="replace").splitlines()[1:]
    fmt = None
    elements = []
    for lineno, raw in enumerate(lines, 2):
        parts = raw.split()
        loc = f"{location}:{lineno}"
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "format":
            if len(parts) != 3 or parts[1] not in FORMATS or parts[2] != "1.0":
                raise ParseError(f"unsupported format line {raw!r}", loc)
            fmt = parts[1]
        elif parts[0] == "element":
            if len(parts) != 3:
                raise ParseError(f"malformed element line {raw!r}", loc)
            try:
                count = int(parts[2])
            except ValueError:
                raise ParseError(f"non-integer element count {parts[2]!r}", loc) from None
            elements.append(Element(parts[1], count, []))
        elif parts[0] == "property":
            if not elements:
                raise ParseError("property before any element", loc)
            if len(parts) == 5 and parts[1] == "list":
                prop = Property(parts[4], _scalar(parts[3], loc), _scalar(parts[2], loc))
            elif len(parts) == 3:
                prop = Property(parts[2], _scalar(parts[1], loc))
            else:
                raise ParseError(f"malformed property line {raw!r}", loc)
            elements[-1].properties.append(prop)
        else:
            raise ParseError(f"unexpected header line {raw!r}", loc)
    if fmt is None:
        raise ParseError("header lacks a format line", location)
    return fmt, elements, offset


def _read_binary(element, buf, offset, endian, location):
    if not any(p.is_list for p in element.properties):
        dtype = np.dtype([(p.name, endian + p.dtype) for p in element.properties])
        size = dtype.itemsize * element.count
        if offset + size > len(buf):
            raise TruncatedDataError(
                f"element {element.name!r}: payload holds fewer than {element.count} records", location)
        rows = np.frombuffer(buf, dtype=dtype, count=element.count, offset=offset)
        return {p.name: rows[p.name].astype(rows[p.name].dtype.newbyteorder("=")) for p in element.properties}, offset + size
    columns = {p.name: [] for p in element.properties}
    for _ in range(element.count):
        for p in element.properties:
            if p.is_list:
                cdt = np.dtype(endian + p.count_dtype)
                if offset + cdt.itemsize > len(buf):
                    raise TruncatedDataError(f"element {element.name!r} truncated", location)
                n = int(np.frombuffer(buf, cdt, 1, offset)[0])
                offset += cdt.itemsize
                idt = np.dtype(endian + p.dtype)
                if offset + idt.itemsize * n > len(buf):
                    raise TruncatedDataError(f"element {element.name!r} truncated", location)
                columns[p.name].append(tuple(np.frombuffer(buf, idt, n, offset).tolist()))
                offset += idt.itemsize * n
            else:
                dt = np.dtype(endian + p.dtype)
                if offset + dt.itemsize > len(buf):
                    raise TruncatedDataError(f"element {element.name!r} truncated", location)
                columns[p.name].append(np.frombuffer(buf, dt, 1, offset)[0])
                offset += dt.itemsize
    return columns, offset


def _read_ascii(element, tokens, pos, location):
    props = element.properties
    if not any(p.is_list for p in props):
        n = element.count * len(props)
        if pos + n > len(tokens):
            raise TruncatedDataError(
                f"element {element.name!r}: payload holds fewer than {element.count} records", location)
        try:
            table = np.array(tokens[pos:pos + n], dtype=np.float64).reshape(element.count, len(props))
        except ValueError:
            raise ParseError(f"non-numeric value in element {element.name!r}", location) from None
        return {p.name: table[:, k].astype(p.dtype) for k, p in enumerate(props)}, pos + n
    columns = {p.name: [] for p in props}
    try:
        for _ in range(element.count):
            for p in props:
                if p.is_list:
                    n = int(tokens[pos])
                    columns[p.name].append(tuple(int(v) if p.dtype[0] in "iu" else float(v)
                                                 for v in tokens[pos + 1:pos + 1 + n]))
                    if len(columns[p.name][-1]) != n:
                        raise IndexError
                    pos += 1 + n
                else:
                    columns[p.name].append(float(tokens[pos]))
                    pos += 1
    except IndexError:
        raise TruncatedDataError(f"element {element.name!r} truncated", location) from None
    except ValueError:
        raise ParseError(f"non-numeric value in element {element.name!r}", location) from None
    return columns, pos


def _colors(cols, props):
    for names in COLOR_NAMES:
        if all(n in cols for n in names):
            stacked = np.stack([np.asarray(cols[n]) for n in names], axis=1)
            kind = {p.name: p.dtype for p in props}[names[0]]
            if kind[0] == "f":
                stacked = np.rint(np.clip(stacked, 0.0, 1.0) * 255.0)
            return np.clip(stacked, 0, 255).astype(np.uint8)
    return None


def parse_ply(source):
    """Parse a PLY file into a PointCloud; returns ``(cloud, diagnostics)``."""
    location = source_name(source)
    data = read_bytes(source)
    fmt, elements, offset = parse_header(data, location)
    diag = ParseDiagnostics()
    endian = FORMATS[fmt]
    tokens = None if endian else data[offset:].split()
    pos = offset if endian else 0
    columns = {}
    for element in elements:
        if endian:
            cols, pos = _read_binary(element, data, pos, endian, location)
        else:
            cols, pos = _read_ascii(element, tokens, pos, location)
        columns[element.name] = (element, cols)
    leftover = len(data) - pos if endian else len(tokens) - pos
    if leftover:
        raise ParseError(f"element count vs payload mismatch: {leftover} unread "
                         f"{'bytes' if endian else 'values'}", location)

    if "vertex" not in columns:
        if elements:
            diag.warn(location, "file has no vertex element")
        cloud = PointCloud(np.zeros((0, 3)))
    else:
        element, cols = columns["vertex"]
        missing = [c for c in "xyz" if c not in cols]
        if missing:
            raise ParseError(f"vertex element lacks {', '.join(missing)}", location)
        positions = np.stack([np.asarray(cols[c], dtype=np.float64) for c in "xyz"], axis=1)
        normals = None
        if all(n in cols for n in ("nx", "ny", "nz")):
            normals = np.stack([np.asarray(cols[n], dtype=np.float64) for n in ("nx", "ny", "nz")], axis=1)
        known = {"x", "y", "z", "nx", "ny", "nz", *COLOR_NAMES[0], *COLOR_NAMES[1]}
        skipped = [p.name for p in element.properties if p.name not in known]
        if skipped:
            diag.warn(location, f"skipped vertex properties: {', '.join(skipped)}")
        cloud = PointCloud(positions.reshape(-1, 3), _colors(cols, element.properties), normals)
    if "face" in columns:
        element, cols = columns["face"]
        for name in FACE_LISTS:
            if name in cols:
                cloud.faces = [tuple(int(i) for i in face) for face in cols[name]]
                break
        else:
            diag.warn(location, "face element without vertex_indices; faces ignored")
    for name in columns:
        if name not in ("vertex", "face"):
            diag.warn(location, f"skipped element {name!r}")
    diag.counts["points"] = len(cloud)
    diag.counts["faces"] = len(cloud.faces or ())
    return cloud, diag


def write_ply(cloud: PointCloud, path, encoding="binary_little_endian"):
    """Write positions (float32), optional normals (float32) and colors (uint8)."""
    if encoding not in FORMATS:
        raise ValueError(f"unknown PLY encoding {encoding!r}")
    n = len(cloud)
    fields = [("x", "f4"), ("y", "f4"), ("z", "f4")]
    if cloud.normals is not None:
        fields += [("nx", "f4"), ("ny", "f4"), ("nz", "f4")]
    if cloud.colors is not None:
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    header = ["ply", f"format {encoding} 1.0", f"element vertex {n}"]
    header += [f"property {'float' if t == 'f4' else 'uchar'} {name}" for name, t in fields]
    faces = cloud.faces or []
    if cloud.faces is not None:
        header += [f"element face {len(faces)}", "property list uchar int vertex_indices"]
    header.append("end_header")
    head = ("\n".join(header) + "\n").encode("ascii")

    endian = FORMATS[encoding]
    with open(os.fspath(path), "wb") as fh:
        fh.write(head)
        if endian:
            rows = np.empty(n, dtype=[(name, endian + t) for name, t in fields])
            for k, c in enumerate("xyz"):
                rows[c] = cloud.positions[:, k]
            if cloud.normals is not None:
                for k, c in enumerate(("nx", "ny", "nz")):
                    rows[c] = cloud.normals[:, k]
            if cloud.colors is not None:
                for k, c in enumerate(("red", "green", "blue")):
                    rows[c] = cloud.colors[:, k]
            fh.write(rows.tobytes())
            for face in faces:
                fh.write(np.array([len(face)], endian + "u1").tobytes())
                fh.write(np.asarray(face, endian + "i4").tobytes())
        else:
            pos32 = cloud.positions.astype(np.float32)
            nrm32 = cloud.normals.astype(np.float32) if cloud.normals is not None else None
            lines = []
            for i in range(n):
                vals = [f"{float(v):.9g}" for v in pos32[i]]
                if nrm32 is not None:
                    vals += [f"{float(v):.9g}" for v in nrm32[i]]
                if cloud.colors is not None:
                    vals += [str(int(c)) for c in cloud.colors[i]]
                lines.append(" ".join(vals))
            for face in faces:
                lines.append(" ".join([str(len(face))] + [str(int(i)) for i in face]))
            fh.write(("\n".join(lines) + ("\n" if lines else "")).encode("ascii"))
    return []
