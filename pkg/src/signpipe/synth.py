"""Synthetic labeled corpora for tests, demos, and training smoke runs.

Each class gets a fixed motion template: a handful of anchor poses for every
selected landmark, interpolated over the sample's length. Templates depend
only on the class id, so independently generated train and validation sets
share them; per-sample variation comes from Gaussian jitter and a random
length. Classes are well separated, which is the point: this data checks the
training loop, not the ceiling of the model.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .landmarks import DEFAULT_NUM_CLASSES, LabelMap, LandmarkFrame, SignSample
from .preprocess import SelectionSpec

__all__ = [
    "synthetic_label_map",
    "make_synthetic_samples",
    "make_train_val",
]

# Offset separating template seeds from sample-noise seeds.
_TEMPLATE_SEED_BASE = 10_000
_NUM_ANCHORS = 4


def synthetic_label_map(num_classes: int) -> LabelMap:
    if not 1 <= num_classes <= DEFAULT_NUM_CLASSES:
        raise ValidationError(
            f"num_classes {num_classes} outside [1, {DEFAULT_NUM_CLASSES}]"
        )
    return LabelMap(tuple(f"sign_{c:02d}" for c in range(num_classes)))


def _class_template(class_id: int, num_landmarks: int) -> np.ndarray:
    rng = np.random.default_rng(_TEMPLATE_SEED_BASE + class_id)
    return rng.uniform(0.2, 0.8, size=(_NUM_ANCHORS, num_landmarks, 2))


def _interp_anchors(anchors: np.ndarray, length: int) -> np.ndarray:
    pos = np.linspace(0.0, anchors.shape[0] - 1.0, length)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, anchors.shape[0] - 1)
    frac = (pos - lo)[:, None, None]
    return anchors[lo] * (1.0 - frac) + anchors[hi] * frac


def _selected_keys(spec: SelectionSpec):
    return [key for key, _ in sorted(spec.row_of().items(), key=lambda kv: kv[1])]


def make_synthetic_samples(num_classes: int, per_class: int,
                           spec: SelectionSpec | None = None,
                           seed: int = 0, noise: float = 0.02,
                           length_range: tuple[int, int] = (24, 40),
                           id_prefix: str = "syn") -> list[SignSample]:
    """per_class samples for each of num_classes classes, class-major order."""
    synthetic_label_map(num_classes)  # range-checks num_classes
    if per_class < 1:
        raise ValidationError(f"per_class must be >= 1, got {per_class}")
    lo, hi = length_range
    if not 1 <= lo <= hi:
        raise ValidationError(f"bad length_range {length_range}")
    spec = spec or SelectionSpec()
    keys = _selected_keys(spec)
    rng = np.random.default_rng(seed)
    samples: list[SignSample] = []
    for c in range(num_classes):
        anchors = _class_template(c, spec.num_landmarks)
        for i in range(per_class):
            length = int(rng.integers(lo, hi + 1))
            coords = _interp_anchors(anchors, length)
            coords = coords + rng.normal(0.0, noise, size=coords.shape)
            frames = [
                LandmarkFrame(t, kind, index,
                              float(coords[t, r, 0]), float(coords[t, r, 1]), 0.0)
                for t in range(length)
                for r, (kind, index) in enumerate(keys)
            ]
            samples.append(SignSample(f"{id_prefix}-{c:02d}-{i:03d}", frames, c))
    return samples


def make_train_val(num_classes: int = 5, train_per_class: int = 40,
                   val_per_class: int = 10, spec: SelectionSpec | None = None,
                   seed: int = 7, noise: float = 0.02,
                   ) -> tuple[list[SignSample], list[SignSample], LabelMap]:
    """Disjoint train/val draws from the same class templates."""
    train = make_synthetic_samples(
        num_classes, train_per_class, spec, seed=seed, noise=noise, id_prefix="tr"
    )
    val = make_synthetic_samples(
        num_classes, val_per_class, spec, seed=seed + 1, noise=noise, id_prefix="va"
    )
    return train, val, synthetic_label_map(num_classes)
