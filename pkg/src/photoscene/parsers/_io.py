from __future__ import annotations

import contextlib
import io
import os
import struct
from dataclasses import dataclass, field

from ..errors import ParseError, TruncatedDataError


@dataclass
class ParseDiagnostics:
    warnings: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)

    def warn(self, location, message):
        self.warnings.append((str(location), message))

    def count_from(self, rec):
        self.counts["cameras"] = len(rec.cameras)
        self.counts["points"] = len(rec.points)
        self.counts["observations"] = len(rec.observations or ())
        return self


@contextlib.contextmanager
def open_binary(source):
    """Yield a binary stream for a path, raw bytes or an already open stream."""
    if isinstance(source, (bytes, bytearray, memoryview)):
        yield io.BytesIO(bytes(source))
    elif hasattr(source, "read"):
        yield source
    else:
        with open(source, "rb") as fh:
            yield fh


def read_bytes(source) -> bytes:
    with open_binary(source) as fh:
        return fh.read()


def read_text(source, location=None) -> str:
    data = read_bytes(source)
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        return data.decode("latin-1")


def source_name(source, default="<memory>") -> str:
    if isinstance(source, (str, os.PathLike)):
        return os.fspath(source)
    return getattr(source, "name", default)


class BinaryReader:
    """Sequential little-endian reader that raises on short reads."""

    def __init__(self, stream, location=""):
        self.stream = stream
        self.location = location

    def read(self, fmt):
        size = struct.calcsize(fmt)
        data = self.stream.read(size)
        if len(data) != size:
            raise TruncatedDataError(
                f"truncated stream: needed {size} bytes, got {len(data)}", self.location
            )
        return struct.unpack(fmt, data)

    def read_cstring(self):
        chunks = bytearray()
        while True:
            b = self.stream.read(1)
            if not b:
                raise TruncatedDataError("truncated stream inside a string", self.location)
            if b == b"\0":
                return chunks.decode("utf-8")
            chunks += b

    def at_end(self):
        return self.stream.read(1) == b""


class Tokens:
    """Whitespace token cursor over text, used by the plain-text SfM formats."""

    def __init__(self, text, location=""):
        self.tokens = text.split()
        self.pos = 0
        self.location = location

    def next(self, what="token"):
        if self.pos >= len(self.tokens):
            raise TruncatedDataError(f"unexpected end of file while reading {what}", self.location)
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def int(self, what="integer"):
        tok = self.next(what)
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"expected {what}, got {tok!r}", self.location) from None

    def float(self, what="number"):
        tok = self.next(what)
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"expected {what}, got {tok!r}", self.location) from None

    def floats(self, n, what="number"):
        return [self.float(what) for _ in range(n)]

    def remaining(self):
        return len(self.tokens) - self.pos
