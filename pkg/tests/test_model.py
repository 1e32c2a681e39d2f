import struct

import numpy as np
import pytest

from dfdl.classify import ClassifierModel, ImageDecisionRule
from dfdl.errors import FormatError, InvariantError, UnsupportedVersionError
from dfdl.model import decode_model, encode_model, load_model, save_model


def _hand_written(c, d, ks, lam, thr, mode, minr, conn, labels, columns, version=1):
    """Byte-by-byte writer built from the documented layout, not the encoder."""
    out = bytearray(b"DFDL")
    out += version.to_bytes(4, "little")
    for v in (c, d, *ks):
        out += v.to_bytes(8, "little")
    out += struct.pack("<d", lam) + struct.pack("<d", thr)
    for v in (mode, minr, conn):
        out += v.to_bytes(8, "little")
    for lab in labels:
        raw = lab.encode()
        out += len(raw).to_bytes(8, "little") + raw
    for cols in columns:
        for col in cols:
            for x in col:
                out += struct.pack("<d", x)
    return bytes(out)


def _small(rng):
    A = rng.standard_normal((4, 3))
    B = rng.standard_normal((4, 3))
    return ClassifierModel((A / np.linalg.norm(A, axis=0), B / np.linalg.norm(B, axis=0)), 0.1, ("UDH", "DCIS"))


def test_file_size_arithmetic(rng, tmp_path):
    n = save_model(_small(rng), ImageDecisionRule(), tmp_path / "m.dfdl")
    # magic+version, c,d,k1,k2, lambda,threshold, 3 rule fields, two labels, 2*4*3 doubles
    expected = 8 + 4 * 8 + 2 * 8 + 3 * 8 + (8 + 3) + (8 + 4) + 2 * 4 * 3 * 8
    assert n == expected == (tmp_path / "m.dfdl").stat().st_size


def test_independent_writer_decodes():
    data = _hand_written(2, 1, [1, 1], 0.25, 0.5, 1, 3, 4, ["a", "b"], [[[1.0]], [[-1.0]]])
    model, rule = decode_model(data)
    assert model.dictionaries[0].atoms.tolist() == [[1.0]]
    assert model.dictionaries[1].atoms.tolist() == [[-1.0]]
    assert model.lam == 0.25 and model.class_labels == ("a", "b")
    assert rule == ImageDecisionRule("region_detect", 0.5, 3, 4)
    assert encode_model(model, rule) == data


def test_encoder_matches_independent_writer(rng):
    model = _small(rng)
    rule = ImageDecisionRule("proportion_vote", 0.3, 5, 8)
    cols = [[D.atoms[:, j].tolist() for j in range(D.k)] for D in model.dictionaries]
    assert encode_model(model, rule) == _hand_written(2, 4, [3, 3], 0.1, 0.3, 0, 5, 8, ["UDH", "DCIS"], cols)


def test_round_trip_bitwise(rng, tmp_path):
    model, rule = _small(rng), ImageDecisionRule("region_detect", 0.7, 2, 4)
    save_model(model, rule, tmp_path / "m.dfdl")
    back, back_rule = load_model(tmp_path / "m.dfdl")
    assert back_rule == rule and back.class_labels == model.class_labels
    for a, b in zip(model.dictionaries, back.dictionaries):
        assert a.atoms.tobytes() == b.atoms.tobytes()
    assert encode_model(back, back_rule) == encode_model(model, rule)


def test_corruptions(rng):
    good = encode_model(_small(rng), ImageDecisionRule())
    with pytest.raises(FormatError):
        decode_model(b"DFDX" + good[4:])
    with pytest.raises(UnsupportedVersionError):
        decode_model(good[:4] + (2).to_bytes(4, "little") + good[8:])
    for cut in (3, 10, 60, len(good) - 1):
        with pytest.raises(FormatError):
            decode_model(good[:cut])
    with pytest.raises(FormatError):
        decode_model(good + b"\x00")


def test_invariant_violations():
    with pytest.raises(InvariantError):
        decode_model(_hand_written(2, 1, [0, 1], 0.1, 0.5, 0, 4, 8, ["a", "b"], [[], [[1.0]]]))
    with pytest.raises(InvariantError):
        decode_model(_hand_written(1, 1, [1], 0.1, 0.5, 0, 4, 8, ["a"], [[[1.0]]]))
    # atom norm above one
    with pytest.raises(InvariantError):
        decode_model(_hand_written(2, 1, [1, 1], 0.1, 0.5, 0, 4, 8, ["a", "b"], [[[2.0]], [[1.0]]]))
    # connectivity 6 is not a valid rule
    with pytest.raises(InvariantError):
        decode_model(_hand_written(2, 1, [1, 1], 0.1, 0.5, 0, 4, 6, ["a", "b"], [[[1.0]], [[1.0]]]))


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_model(tmp_path / "nope.dfdl")
