"""Landmark domain types and the portable corpus file format.

A corpus is a UTF-8 CSV with header
``sample_id,frame,kind,landmark_index,x,y,z,label``. Coordinates are
normalized image coordinates; a missing coordinate is an empty field on disk
and NaN in memory. Labels are carried inline on every row of a sample
(denormalized) so one file is self-contained.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import CorpusFormatError, ValidationError

__all__ = [
    "MISSING",
    "LandmarkKind",
    "KIND_CAPACITY",
    "LandmarkFrame",
    "SignSample",
    "LabelMap",
    "read_corpus",
    "write_corpus",
    "read_label_map",
    "write_label_map",
]

# In-memory sentinel for a missing coordinate. Serialized as an empty field.
MISSING = math.nan

# Default lexicon size; per-corpus maps may be smaller (toy datasets).
DEFAULT_NUM_CLASSES = 250


class LandmarkKind(Enum):
    """Landmark source stream. Enum values are the stable wire/serial codes."""

    FACE = 0
    LEFT_HAND = 1
    POSE = 2
    RIGHT_HAND = 3

    @property
    def csv_name(self) -> str:
        return self.name.lower()

    @property
    def capacity(self) -> int:
        return KIND_CAPACITY[self]


KIND_CAPACITY = {
    LandmarkKind.FACE: 468,
    LandmarkKind.LEFT_HAND: 21,
    LandmarkKind.POSE: 33,
    LandmarkKind.RIGHT_HAND: 21,
}

_KIND_BY_NAME = {k.csv_name: k for k in LandmarkKind}
_KIND_BY_CODE = {k.value: k for k in LandmarkKind}


def kind_from_name(name: str) -> LandmarkKind:
    try:
        return _KIND_BY_NAME[name]
    except KeyError:
        raise ValidationError(f"unknown landmark kind {name!r}") from None


def kind_from_code(code: int) -> LandmarkKind:
    try:
        return _KIND_BY_CODE[code]
    except KeyError:
        raise ValidationError(f"unknown landmark kind code {code!r}") from None


def _coord_ok(v: float) -> bool:
    # finite or the missing sentinel; infinities are always invalid
    return math.isfinite(v) or math.isnan(v)


@dataclass(frozen=True, eq=False)
class LandmarkFrame:
    """One landmark observation at one video frame."""

    frame_index: int
    kind: LandmarkKind
    landmark_index: int
    x: float
    y: float
    z: float = MISSING

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValidationError(f"negative frame_index {self.frame_index}")
        cap = KIND_CAPACITY[self.kind]
        if not 0 <= self.landmark_index < cap:
            raise ValidationError(
                f"landmark_index {self.landmark_index} out of range for "
                f"{self.kind.csv_name} (capacity {cap})"
            )
        for name in ("x", "y", "z"):
            if not _coord_ok(getattr(self, name)):
                raise ValidationError(f"non-finite {name} coordinate")

    # NaN-aware equality so the missing sentinel survives round-trip checks.
    def __eq__(self, other) -> bool:
        if not isinstance(other, LandmarkFrame):
            return NotImplemented
        same = (
            self.frame_index == other.frame_index
            and self.kind is other.kind
            and self.landmark_index == other.landmark_index
        )
        if not same:
            return False
        for name in ("x", "y", "z"):
            a, b = getattr(self, name), getattr(other, name)
            if not (a == b or (math.isnan(a) and math.isnan(b))):
                return False
        return True

    def __hash__(self):
        return hash((self.frame_index, self.kind, self.landmark_index))


@dataclass
class SignSample:
    """A labeled (or unlabeled) landmark sequence for one isolated sign."""

    sample_id: str
    frames: list[LandmarkFrame]
    label: int | None = None

    def __post_init__(self):
        if not self.sample_id:
            raise ValidationError("sample_id must be non-empty")
        if not self.frames:
            raise ValidationError(f"sample {self.sample_id!r} has no frames")
        prev = -1
        for f in self.frames:
            if f.frame_index < prev:
                raise ValidationError(
                    f"sample {self.sample_id!r}: frame_index decreases "
                    f"({prev} -> {f.frame_index})"
                )
            prev = f.frame_index
        if self.label is not None and not 0 <= self.label < DEFAULT_NUM_CLASSES:
            raise ValidationError(
                f"sample {self.sample_id!r}: label {self.label} outside "
                f"[0, {DEFAULT_NUM_CLASSES})"
            )

    def by_frame(self) -> list[tuple[int, list[LandmarkFrame]]]:
        """Frames grouped by distinct frame_index, in order of appearance."""
        groups: list[tuple[int, list[LandmarkFrame]]] = []
        for f in self.frames:
            if groups and groups[-1][0] == f.frame_index:
                groups[-1][1].append(f)
            else:
                groups.append((f.frame_index, [f]))
        return groups

    def num_frames(self) -> int:
        return len(self.by_frame())


@dataclass(frozen=True)
class LabelMap:
    """Bijective class id <-> gloss map; ids are dense in [0, len)."""

    glosses: tuple[str, ...]

    def __post_init__(self):
        if not self.glosses:
            raise ValidationError("label map is empty")
        seen: set[str] = set()
        for g in self.glosses:
            if not g:
                raise ValidationError("empty gloss in label map")
            if g in seen:
                raise ValidationError(f"duplicate gloss {g!r} in label map")
            seen.add(g)

    def __len__(self) -> int:
        return len(self.glosses)

    def gloss_for(self, class_id: int) -> str:
        if not 0 <= class_id < len(self.glosses):
            raise ValidationError(f"class id {class_id} outside [0, {len(self)})")
        return self.glosses[class_id]

    def id_for(self, gloss: str) -> int:
        try:
            return self.glosses.index(gloss)
        except ValueError:
            raise ValidationError(f"unknown gloss {gloss!r}") from None


CORPUS_HEADER = ["sample_id", "frame", "kind", "landmark_index", "x", "y", "z", "label"]


def _parse_float(text: str, column: str, line: int) -> float:
    if text == "":
        return MISSING
    try:
        v = float(text)
    except ValueError:
        raise CorpusFormatError(f"non-numeric {column} value {text!r}", line) from None
    if math.isinf(v):
        raise CorpusFormatError(f"infinite {column} value", line)
    return v


def _parse_int(text: str, column: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise CorpusFormatError(f"non-integer {column} value {text!r}", line) from None


def read_corpus(path: str | Path) -> list[SignSample]:
    """Parse a corpus CSV into samples, grouped by sample_id.

    Row order within a sample is preserved. Any malformed content raises
    CorpusFormatError with the 1-based line number; out-of-range landmark
    indices raise ValidationError (also positioned).
    """
    path = Path(path)
    frames: dict[str, list[LandmarkFrame]] = {}
    labels: dict[str, int | None] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusFormatError("missing header", 1) from None
        if header != CORPUS_HEADER:
            raise CorpusFormatError(
                f"bad header {header!r}, expected {CORPUS_HEADER!r}", 1
            )
        last_frame_index: dict[str, int] = {}
        for line, row in enumerate(reader, start=2):
            if not row:
                continue  # tolerate blank trailing lines
            if len(row) != len(CORPUS_HEADER):
                raise CorpusFormatError(
                    f"expected {len(CORPUS_HEADER)} columns, got {len(row)}", line
                )
            sample_id, frame_s, kind_s, index_s, x_s, y_s, z_s, label_s = row
            if not sample_id:
                raise CorpusFormatError("empty sample_id", line)
            try:
                kind = kind_from_name(kind_s)
            except ValidationError as e:
                raise CorpusFormatError(str(e), line) from None
            frame_index = _parse_int(frame_s, "frame", line)
            landmark_index = _parse_int(index_s, "landmark_index", line)
            x = _parse_float(x_s, "x", line)
            y = _parse_float(y_s, "y", line)
            z = _parse_float(z_s, "z", line)
            label = None if label_s == "" else _parse_int(label_s, "label", line)
            try:
                lf = LandmarkFrame(frame_index, kind, landmark_index, x, y, z)
            except ValidationError as e:
                raise ValidationError(f"{e} (line {line})") from None
            if sample_id in last_frame_index and frame_index < last_frame_index[sample_id]:
                raise CorpusFormatError(
                    f"frame index decreases within sample {sample_id!r}", line
                )
            last_frame_index[sample_id] = frame_index
            if sample_id in labels:
                if labels[sample_id] != label:
                    raise CorpusFormatError(
                        f"inconsistent label for sample {sample_id!r}", line
                    )
            else:
                labels[sample_id] = label
            frames.setdefault(sample_id, []).append(lf)
    return [
        SignSample(sample_id, frames[sample_id], labels[sample_id])
        for sample_id in frames
    ]


def _fmt_coord(v: float) -> str:
    return "" if math.isnan(v) else repr(v)


def write_corpus(samples: list[SignSample], path: str | Path) -> None:
    """Write samples as corpus CSV; read_corpus(write_corpus(s)) == s."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CORPUS_HEADER)
        for sample in samples:
            label_s = "" if sample.label is None else str(sample.label)
            for f in sample.frames:
                writer.writerow(
                    [
                        sample.sample_id,
                        str(f.frame_index),
                        f.kind.csv_name,
                        str(f.landmark_index),
                        _fmt_coord(f.x),
                        _fmt_coord(f.y),
                        _fmt_coord(f.z),
                        label_s,
                    ]
                )


def read_label_map(path: str | Path) -> LabelMap:
    """Load a label map: a JSON array of glosses, index == class id."""
    with Path(path).open(encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(f"label map {path}: invalid JSON ({e})") from None
    if not isinstance(data, list) or not all(isinstance(g, str) for g in data):
        raise ValidationError(f"label map {path}: expected a JSON array of strings")
    return LabelMap(tuple(data))


def write_label_map(labels: LabelMap, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(list(labels.glosses), fh, ensure_ascii=False, indent=0)
        fh.write("\n")
