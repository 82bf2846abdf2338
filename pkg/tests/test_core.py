import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from strokestack.core import (StrokeFileError, StrokeKind, StrokeParams, StrokeSequence,
                              load_sequence, save_sequence, validate)


def test_interior_oil_stroke_is_valid():
    assert validate(StrokeParams("oil", [0.5] * 8)) is None


def test_out_of_range_component_is_named():
    msg = validate(StrokeParams("oil", [1.2] + [0.5] * 7))
    assert msg is not None and msg.startswith("x=")


def test_bezier_arity():
    msg = validate(StrokeParams("bezier", [0.5] * 8))
    assert msg.startswith("arity")


def test_nan_is_rejected():
    assert validate(StrokeParams("oil", [0.5] * 4 + [float("nan")] + [0.5] * 3)) is not None


@given(kind=st.sampled_from(list(StrokeKind)),
       values=st.lists(st.floats(-0.5, 1.5, allow_nan=False), min_size=1, max_size=15))
def test_validate_accepts_exactly_the_invariant_set(kind, values):
    ok = len(values) == kind.arity and all(0 <= v <= 1 for v in values)
    assert (validate(StrokeParams(kind, values)) is None) == ok


def test_field_lookup():
    s = StrokeParams("oil", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
    assert s["theta"] == 0.5
    assert s.color == (0.6, 0.7, 0.8)


def test_sequence_rejects_mixed_kinds():
    with pytest.raises(ValueError):
        StrokeSequence.from_strokes("oil", [StrokeParams("oil", [0.5] * 8), StrokeParams("bezier", [0.5] * 13)])


def test_sequence_is_read_only():
    seq = StrokeSequence("oil", np.full((2, 8), 0.5))
    with pytest.raises(ValueError):
        seq.strokes[0, 0] = 0.1


def test_empty_roundtrip(tmp_path):
    seq = StrokeSequence("oil", np.zeros((0, 8)), 64, 32)
    save_sequence(seq, tmp_path / "e.json")
    back = load_sequence(tmp_path / "e.json")
    assert len(back) == 0 and back.kind is StrokeKind.OIL
    assert (back.canvas_h, back.canvas_w) == (64, 32)


@pytest.mark.parametrize("kind", list(StrokeKind))
def test_random_roundtrip_is_lossless(tmp_path, kind):
    rng = np.random.default_rng(7)
    seq = StrokeSequence(kind, rng.uniform(0, 1, (256, kind.arity)))
    save_sequence(seq, tmp_path / "s.json")
    back = load_sequence(tmp_path / "s.json")
    assert np.abs(back.strokes - seq.strokes).max() <= 1e-9
    assert back.kind is kind


def test_file_layout(tmp_path):
    seq = StrokeSequence("bezier", np.full((1, 13), 0.25), 128, 128)
    save_sequence(seq, tmp_path / "s.json")
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["version"] == 1 and doc["stroke_type"] == "bezier"
    assert doc["canvas"] == {"h": 128, "w": 128}
    assert doc["strokes"] == [[0.25] * 13]


@pytest.mark.parametrize("patch, needle", [
    ({"version": 2}, "version"),
    ({"strokes": [[0.5] * 7]}, "arity"),
    ({"stroke_type": "tape"}, "stroke_type"),
])
def test_bad_files_raise(tmp_path, patch, needle):
    doc = {"version": 1, "stroke_type": "oil", "canvas": {"h": 8, "w": 8}, "strokes": [[0.5] * 8]}
    doc.update(patch)
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    with pytest.raises(StrokeFileError, match=needle):
        load_sequence(tmp_path / "bad.json")


def test_unparseable_file(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(StrokeFileError):
        load_sequence(tmp_path / "bad.json")


def test_save_refuses_invalid(tmp_path):
    seq = StrokeSequence("oil", np.full((1, 8), 0.5))
    bad = seq.with_strokes(np.full((1, 8), 1.5))
    with pytest.raises(ValueError):
        save_sequence(bad, tmp_path / "s.json")
