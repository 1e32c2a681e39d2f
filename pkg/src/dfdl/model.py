"""Binary ``.dfdl`` model files.

Layout, all little-endian::

    b"DFDL"               4 bytes magic
    version               u32 (currently 1)
    c, d                  u64 each
    k_1 .. k_c            u64 each
    lambda, threshold     f64 each
    mode, min_region, connectivity
                          u64 each (mode 0 = proportion_vote, 1 = region_detect)
    per class: len, label u64 byte length, UTF-8 bytes
    per class: atoms      d * k_i f64, column-major

Nothing may follow the last payload.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .classify import MODES, ClassifierModel, ImageDecisionRule
from .errors import DFDLError, FormatError, InvalidInputError, InvariantError, UnsupportedVersionError
from .types import Dictionary

MAGIC = b"DFDL"
VERSION = 1
SUFFIX = ".dfdl"
_U64 = struct.Struct("<Q")
_F64 = struct.Struct("<d")


def encode_model(model: ClassifierModel, rule: ImageDecisionRule) -> bytes:
    c = model.n_classes
    parts = [MAGIC, struct.pack("<I", VERSION), struct.pack(f"<{2 + c}Q", c, model.d, *(D.k for D in model.dictionaries))]
    parts.append(struct.pack("<2d", model.lam, rule.threshold))
    parts.append(struct.pack("<3Q", MODES.index(rule.mode), rule.min_region_patches, rule.connectivity))
    for label in model.class_labels:
        raw = label.encode("utf-8")
        parts.append(_U64.pack(len(raw)) + raw)
    for D in model.dictionaries:
        parts.append(np.asarray(D.atoms, dtype="<f8").tobytes(order="F"))
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated model file while reading {what}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u64(self, what):
        return _U64.unpack(self.take(8, what))[0]

    def f64(self, what):
        return _F64.unpack(self.take(8, what))[0]


# header fields are untrusted; refuse sizes that cannot fit the file anyway
def _check_count(value, what, limit):
    if value > limit:
        raise FormatError(f"{what}={value} exceeds the file size")
    return value


def decode_model(data: bytes):
    """Parse model bytes into ``(ClassifierModel, ImageDecisionRule)``."""
    r = _Reader(data)
    if r.take(4, "magic") != MAGIC:
        raise FormatError("bad magic: not a .dfdl model file")
    version = struct.unpack("<I", r.take(4, "version"))[0]
    if version != VERSION:
        raise UnsupportedVersionError(f"model format version {version} is not supported (expected {VERSION})")
    c = _check_count(r.u64("class count"), "class count", len(data))
    d = _check_count(r.u64("dimension"), "dimension", len(data))
    ks = [_check_count(r.u64("atom count"), "atom count", len(data)) for _ in range(c)]
    lam = r.f64("lambda")
    threshold = r.f64("threshold")
    mode_idx = r.u64("mode")
    min_region = r.u64("min_region")
    connectivity = r.u64("connectivity")
    labels = []
    for _ in range(c):
        n = _check_count(r.u64("label length"), "label length", len(data))
        try:
            labels.append(r.take(n, "label").decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError(f"label is not UTF-8: {exc}") from exc
    if c < 2:
        raise InvariantError(f"model needs at least two classes, file has {c}")
    if d < 1 or any(k < 1 for k in ks):
        raise InvariantError(f"dimension and atom counts must be >= 1 (d={d}, k={ks})")
    if mode_idx >= len(MODES):
        raise FormatError(f"unknown decision mode {mode_idx}")
    atoms = []
    for i, k in enumerate(ks):
        raw = r.take(d * k * 8, f"dictionary {i}")
        atoms.append(np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape((d, k), order="F"))
    if r.pos != len(data):
        raise FormatError(f"{len(data) - r.pos} trailing bytes after the last dictionary")
    try:
        model = ClassifierModel(tuple(Dictionary(a) for a in atoms), lam, tuple(labels))
        rule = ImageDecisionRule(MODES[mode_idx], threshold, int(min_region), int(connectivity))
    except InvalidInputError as exc:
        raise InvariantError(f"model file violates an invariant: {exc}") from exc
    return model, rule


def save_model(model: ClassifierModel, rule: ImageDecisionRule, destination) -> int:
    """Write the model; returns the number of bytes written."""
    data = encode_model(model, rule)
    path = Path(destination)
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write model file {path}: {exc.strerror}") from exc
    return len(data)


def load_model(source):
    path = Path(source)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read model file {path}: {exc.strerror}") from exc
    try:
        return decode_model(data)
    except DFDLError as exc:
        raise type(exc)(f"{path}: {exc}") from exc
