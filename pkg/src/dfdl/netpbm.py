"""Minimal Netpbm (PGM/PPM) reader and writer for 8-bit images."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FormatError

_CHANNELS = {b"P2": 1, b"P3": 3, b"P5": 1, b"P6": 3}


def _tokens(data: bytes, count: int, pos: int):
    """Read `count` whitespace-separated header tokens, skipping # comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated netpbm header")
        out.append(data[start:pos])
    return out, pos


def decode(data: bytes):
    """Decode PGM/PPM bytes into ``(samples, maxval)``.

    ``samples`` is uint8 with shape (h, w) for PGM and (h, w, 3) for PPM.
    """
    magic = data[:2]
    if magic not in _CHANNELS:
        raise FormatError(f"not a PGM/PPM file (magic {magic!r})")
    channels = _CHANNELS[magic]
    try:
        (w, h, maxval), pos = _tokens(data, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise FormatError(f"malformed netpbm header: {exc}") from exc
    if w < 1 or h < 1:
        raise FormatError(f"bad image size {w}x{h}")
    if not 1 <= maxval <= 255:
        raise FormatError(f"unsupported bit depth: maxval {maxval} (only 8-bit images are read)")
    count = w * h * channels
    if magic in (b"P5", b"P6"):
        pos += 1  # exactly one whitespace byte before the raster
        raster = np.frombuffer(data, dtype=np.uint8, count=-1, offset=pos)
        if raster.size < count:
            raise FormatError(f"truncated raster: {raster.size} of {count} bytes")
        raster = raster[:count]
    else:
        values = data[pos:].split()
        if len(values) < count:
            raise FormatError(f"truncated raster: {len(values)} of {count} samples")
        raster = np.array([int(v) for v in values[:count]], dtype=np.int64)
    if raster.max(initial=0) > maxval:
        raise FormatError("sample value exceeds maxval")
    raster = raster.astype(np.uint8)
    shape = (h, w) if channels == 1 else (h, w, 3)
    return raster.reshape(shape), maxval


def read_netpbm(path):
    return decode(Path(path).read_bytes())


def encode(samples) -> bytes:
    """Binary PGM (2-D input) or PPM ((h, w, 3) input) with maxval 255."""
    arr = np.asarray(samples)
    if arr.dtype != np.uint8:
        raise FormatError(f"expected uint8 samples, got {arr.dtype}")
    if arr.ndim == 2:
        magic = b"P5"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"P6"
    else:
        raise FormatError(f"cannot encode array of shape {arr.shape}")
    h, w = arr.shape[:2]
    return magic + f"\n{w} {h}\n255\n".encode() + np.ascontiguousarray(arr).tobytes()


def write_netpbm(path, samples):
    Path(path).write_bytes(encode(samples))
