"""Reading and writing event files.

Formats
-------
``canonical`` (binary, little-endian)::

    b"HATSEVT1"  u16 width  u16 height  u64 count
    count x 13-byte records: u16 x, u16 y, u64 t (us), i8 p

``csv``: a ``x,y,t,p`` header line, then one decimal record per line.

``nmnist`` (read only): 5-byte records. Byte 0 is x, byte 1 is y, bit 7 of
byte 2 is the polarity (1 = ON), and the remaining 23 bits of bytes 2..4,
big-endian, are the timestamp in microseconds.
"""

from __future__ import annotations

import io
import os
import struct

import numpy as np

from .events import EventError, EventStream, SensorGeometry, validate_stream

MAGIC = b"HATSEVT1"
_HEADER = struct.Struct("<8sHHQ")
RECORD = np.dtype([("x", "<u2"), ("y", "<u2"), ("t", "<u8"), ("p", "i1")])
assert RECORD.itemsize == 13

NMNIST_GEOMETRY = SensorGeometry(34, 34)
FORMATS = ("canonical", "csv", "nmnist")
WRITE_FORMATS = ("canonical", "csv")


class MalformedHeader(EventError):
    pass


class TruncatedRecord(EventError):
    pass


def guess_format(path) -> str:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".csv":
        return "csv"
    if ext == ".bin":
        return "nmnist"
    return "canonical"


def read_events(path, format: str = "canonical", geometry: SensorGeometry | None = None, label=None) -> EventStream:
    """Load an event file.

    csv and nmnist files carry no grid size, so ``geometry`` fixes it for them
    (csv falls back to the bounding box of the events, nmnist to 34x34).
    Canonical files ignore it.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if format == "canonical":
        return decode_canonical(data, label=label)
    if format == "csv":
        return decode_csv(data.decode("ascii"), geometry, label=label)
    if format == "nmnist":
        return decode_nmnist(data, geometry or NMNIST_GEOMETRY, label=label)
    raise ValueError(f"unknown event format {format!r}; expected one of {FORMATS}")


def write_events(stream: EventStream, path, format: str = "canonical") -> None:
    if format == "canonical":
        payload = encode_canonical(stream)
    elif format == "csv":
        payload = encode_csv(stream).encode("ascii")
    else:
        raise ValueError(f"cannot write format {format!r}; expected one of {WRITE_FORMATS}")
    with open(path, "wb") as fh:
        fh.write(payload)


def encode_canonical(stream: EventStream) -> bytes:
    g = stream.geometry
    if g.width > 0xFFFF or g.height > 0xFFFF:
        raise ValueError("canonical format limits geometry to 65535x65535")
    rec = np.empty(len(stream), dtype=RECORD)
    rec["x"] = stream.x
    rec["y"] = stream.y
    rec["t"] = stream.t
    rec["p"] = stream.p
    return _HEADER.pack(MAGIC, g.width, g.height, len(stream)) + rec.tobytes()


def decode_canonical(data: bytes, label=None) -> EventStream:
    if len(data) < _HEADER.size:
        raise MalformedHeader(f"header needs {_HEADER.size} bytes, file has {len(data)}")
    magic, width, height, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MalformedHeader(f"bad magic {magic!r}")
    if width < 1 or height < 1:
        raise MalformedHeader(f"invalid geometry {width}x{height}")
    body = len(data) - _HEADER.size
    need = count * RECORD.itemsize
    if body < need:
        raise TruncatedRecord(f"expected {count} records ({need} bytes), found {body} bytes")
    if body > need:
        raise MalformedHeader(f"header declares {count} records but {body - need} extra bytes follow")
    rec = np.frombuffer(data, dtype=RECORD, count=count, offset=_HEADER.size)
    if count and rec["t"].max() > np.iinfo(np.int64).max:
        raise EventError("timestamp exceeds signed 64-bit range")
    return EventStream.from_arrays(
        SensorGeometry(width, height), rec["x"], rec["y"], rec["t"].astype(np.int64), rec["p"], label
    )


def encode_csv(stream: EventStream) -> str:
    buf = io.StringIO()
    buf.write("x,y,t,p\n")
    for x, y, t, p in zip(stream.x.tolist(), stream.y.tolist(), stream.t.tolist(), stream.p.tolist()):
        buf.write(f"{x},{y},{t},{p}\n")
    return buf.getvalue()


def decode_csv(text: str, geometry: SensorGeometry | None = None, label=None) -> EventStream:
    lines = text.splitlines()
    if not lines or lines[0].strip().replace(" ", "") != "x,y,t,p":
        raise MalformedHeader("csv must start with the header line 'x,y,t,p'")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise TruncatedRecord(f"line {lineno}: expected 4 fields, got {len(parts)}")
        try:
            rows.append(tuple(int(v) for v in parts))
        except ValueError:
            raise TruncatedRecord(f"line {lineno}: non-integer field in {line!r}") from None
    if geometry is None:
        if rows:
            geometry = SensorGeometry(max(r[0] for r in rows) + 1, max(r[1] for r in rows) + 1)
        else:
            geometry = SensorGeometry(1, 1)
    return validate_stream(rows, geometry, label=label)


def decode_nmnist(data: bytes, geometry: SensorGeometry = NMNIST_GEOMETRY, label=None) -> EventStream:
    if len(data) % 5:
        raise TruncatedRecord(f"N-MNIST payload of {len(data)} bytes is not a multiple of 5")
    raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, 5).astype(np.int64)
    x = raw[:, 0]
    y = raw[:, 1]
    p = np.where(raw[:, 2] & 0x80, 1, -1)
    t = ((raw[:, 2] & 0x7F) << 16) | (raw[:, 3] << 8) | raw[:, 4]
    return EventStream.from_arrays(geometry, x, y, t, p, label)
