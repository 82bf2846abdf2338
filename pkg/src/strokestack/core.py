"""Stroke parameterisations, sequences, canvases and the stroke-file format.

Every stroke parameter is normalised to [0, 1]. Pixel-space quantities are
derived at render time from the canvas size stored on the sequence.

Oil stroke layout (8 values)::

    x, y, h, w, theta, r, g, b

Bezier stroke layout (13 values)::

    x0, y0, x1, y1, x2, y2, r0, t0, r1, t1, r, g, b
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

FORMAT_VERSION = 1


class StrokeKind(str, enum.Enum):
    OIL = "oil"
    BEZIER = "bezier"

    @property
    def fields(self) -> tuple[str, ...]:
        return OIL_FIELDS if self is StrokeKind.OIL else BEZIER_FIELDS

    @property
    def arity(self) -> int:
        return len(self.fields)


OIL_FIELDS = ("x", "y", "h", "w", "theta", "r", "g", "b")
BEZIER_FIELDS = ("x0", "y0", "x1", "y1", "x2", "y2", "r0", "t0", "r1", "t1", "r", "g", "b")

# column index of the first colour channel; colour is always the last three values
COLOR_SLICE = slice(-3, None)


class StrokeFileError(ValueError):
    """Raised when a stroke-sequence file cannot be loaded."""


@dataclass(frozen=True)
class StrokeParams:
    kind: StrokeKind
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", StrokeKind(self.kind))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __getitem__(self, name: str) -> float:
        return self.values[self.kind.fields.index(name)]

    @property
    def color(self) -> tuple[float, float, float]:
        return self.values[-3:]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def validate(stroke: StrokeParams) -> str | None:
    """Return ``None`` if the stroke is valid, else a description of the first violation."""
    kind = StrokeKind(stroke.kind)
    if len(stroke.values) != kind.arity:
        return f"arity: {kind.value} stroke needs {kind.arity} values, got {len(stroke.values)}"
    for name, v in zip(kind.fields, stroke.values):
        if not (0.0 <= v <= 1.0):  # NaN fails too
            return f"{name}={v!r} out of range [0, 1]"
    return None


@dataclass(frozen=True)
class StrokeSequence:
    """Ordered strokes in paint order: row ``i + 1`` is painted over row ``i``."""

    kind: StrokeKind
    strokes: np.ndarray
    canvas_h: int = 128
    canvas_w: int = 128

    def __post_init__(self):
        kind = StrokeKind(self.kind)
        arr = np.array(self.strokes, dtype=np.float64).reshape(-1, kind.arity)
        arr.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "strokes", arr)

    def __len__(self) -> int:
        return self.strokes.shape[0]

    def __getitem__(self, i: int) -> StrokeParams:
        return StrokeParams(self.kind, tuple(self.strokes[i]))

    @property
    def colors(self) -> np.ndarray:
        return self.strokes[:, COLOR_SLICE]

    @classmethod
    def from_strokes(cls, kind, strokes: Sequence[StrokeParams], canvas_h=128, canvas_w=128):
        kind = StrokeKind(kind)
        rows = []
        for s in strokes:
            if StrokeKind(s.kind) is not kind:
                raise ValueError(f"stroke kind {s.kind} does not match sequence kind {kind}")
            rows.append(s.values)
        return cls(kind, np.array(rows, dtype=np.float64).reshape(-1, kind.arity), canvas_h, canvas_w)

    def with_strokes(self, strokes: np.ndarray) -> "StrokeSequence":
        return StrokeSequence(self.kind, strokes, self.canvas_h, self.canvas_w)

    def violations(self) -> list[tuple[int, str]]:
        out = []
        for i in range(len(self)):
            msg = validate(self[i])
            if msg is not None:
                out.append((i, msg))
        return out


@dataclass
class Canvas:
    """An H x W x 3 image with channel values in [0, 1]."""

    pixels: np.ndarray

    @property
    def h(self) -> int:
        return self.pixels.shape[0]

    @property
    def w(self) -> int:
        return self.pixels.shape[1]

    @classmethod
    def blank(cls, h: int, w: int) -> "Canvas":
        return cls(np.zeros((h, w, 3)))


@dataclass
class StrokeFrame:
    """One rendered stroke: alpha map (H, W) and colour map (H, W, 3)."""

    alpha: np.ndarray
    color: np.ndarray = field(repr=False)


def save_sequence(seq: StrokeSequence, path) -> None:
    bad = seq.violations()
    if bad:
        i, msg = bad[0]
        raise ValueError(f"stroke {i}: {msg}")
    doc = {
        "version": FORMAT_VERSION,
        "stroke_type": seq.kind.value,
        "canvas": {"h": int(seq.canvas_h), "w": int(seq.canvas_w)},
        # json writes float repr, which round-trips exactly
        "strokes": [[float(v) for v in row] for row in seq.strokes],
    }
    Path(path).write_text(json.dumps(doc))


def load_sequence(path) -> StrokeSequence:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise StrokeFileError(f"{path}: not a stroke file ({exc})") from exc
    if not isinstance(doc, dict):
        raise StrokeFileError(f"{path}: expected a JSON object")
    if doc.get("version") != FORMAT_VERSION:
        raise StrokeFileError(f"{path}: unsupported version {doc.get('version')!r}")
    if doc.get("stroke_type") not in [k.value for k in StrokeKind]:
        raise StrokeFileError(f"{path}: unknown stroke_type {doc.get('stroke_type')!r}")
    try:
        kind = StrokeKind(doc["stroke_type"])
        h, w = int(doc["canvas"]["h"]), int(doc["canvas"]["w"])
        rows = doc["strokes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise StrokeFileError(f"{path}: malformed stroke file ({exc})") from exc
    for i, row in enumerate(rows):
        if len(row) != kind.arity:
            raise StrokeFileError(f"{path}: arity: stroke {i} has {len(row)} values, expected {kind.arity}")
        if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in row):
            raise StrokeFileError(f"{path}: stroke {i} has non-numeric values")
    return StrokeSequence(kind, np.array(rows, dtype=np.float64).reshape(-1, kind.arity), h, w)
