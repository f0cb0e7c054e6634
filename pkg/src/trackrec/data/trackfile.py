"""Binary track file IO.

Layout (all little-endian):

    bytes 0-3    magic b"TRKS"
    bytes 4-23   u32 version, u32 P, u32 T, u32 W, u32 H
    bytes 24-27  f32 fps
    then         P*T*2 f32 coordinates, point-major, frames in order,
                 (x, y) interleaved per frame
    then         ceil(P*T / 8) bytes of visibility flags, packed MSB-first
                 in the same point-major order

Coordinates are stored in raw pixel units; normalized sets must be
denormalized before writing. Reading a file whose sizes do not add up,
whose magic is wrong, or whose version is unknown raises FormatError.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from ..trackcore import TrackSet

MAGIC = b"TRKS"
VERSION = 1
_HEADER = struct.Struct("<4s5If")


def write_tracks(ts: TrackSet, path: str | Path) -> Path:
    """Serialize a raw-pixel TrackSet; returns the written path."""
    if ts.normalized:
        raise ValueError("track files store raw pixel coordinates; denormalize first")
    path = Path(path)
    p, t = ts.num_points, ts.num_frames
    header = _HEADER.pack(MAGIC, VERSION, p, t, ts.width, ts.height, ts.fps)
    coords = ts.coords.astype("<f4").tobytes()
    vis = np.packbits(ts.visible.reshape(-1)).tobytes()
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(coords)
        fh.write(vis)
    return path


def read_tracks(path: str | Path) -> TrackSet:
    """Deserialize a track file written by :func:`write_tracks`."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read track file {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, p, t, width, height, fps = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if t < 1 or width < 1 or height < 1:
        raise FormatError(f"{path}: degenerate header (T={t}, W={width}, H={height})")
    coords_bytes = p * t * 2 * 4
    vis_bytes = (p * t + 7) // 8
    expected = _HEADER.size + coords_bytes + vis_bytes
    if len(blob) != expected:
        raise FormatError(
            f"{path}: size mismatch, expected {expected} bytes got {len(blob)}"
        )
    coords = np.frombuffer(
        blob, dtype="<f4", count=p * t * 2, offset=_HEADER.size
    ).astype(np.float64)
    coords = coords.reshape(p, t, 2)
    packed = np.frombuffer(blob, dtype=np.uint8, offset=_HEADER.size + coords_bytes)
    visible = np.unpackbits(packed, count=p * t).astype(bool).reshape(p, t)
    try:
        return TrackSet(coords, visible, width, height, fps=fps, normalized=False)
    except ValueError as exc:
        raise FormatError(f"{path}: invalid payload: {exc}") from exc
