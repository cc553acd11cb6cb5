"""Turn raw landmark samples into fixed-shape feature tensors.

Stages: select the informative landmarks and drop z, optionally augment
(training only), normalize per sample, then resample to a fixed number of
time steps. The working representation between stages is a "ragged sequence":
a list with one (K, 2) float64 matrix per distinct frame, NaN marking missing
coordinates. The final tensor is float32 with shape (target_len, 2K), rows
flattened landmark-major as (x0, y0, x1, y1, ...).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, ValidationError
from .landmarks import KIND_CAPACITY, LandmarkKind, SignSample

__all__ = [
    "DEFAULT_LIPS",
    "DEFAULT_POSE",
    "POSE_FLIP_PAIRS",
    "SelectionSpec",
    "AugmentConfig",
    "select_and_drop_z",
    "normalize",
    "resample",
    "flip_horizontal",
    "augment",
    "preprocess_pipeline",
]

# The 40-landmark lip contour of the holistic face mesh, sorted ascending.
DEFAULT_LIPS = (
    0, 13, 14, 17, 37, 39, 40, 61, 78, 80,
    81, 82, 84, 87, 88, 91, 95, 146, 178, 181,
    185, 191, 267, 269, 270, 291, 308, 310, 311, 312,
    314, 317, 318, 321, 324, 375, 402, 405, 409, 415,
)

# Shoulders, elbows, wrists.
DEFAULT_POSE = (11, 12, 13, 14, 15, 16)

# Left/right partner pose indices exchanged by a horizontal flip.
POSE_FLIP_PAIRS = ((11, 12), (13, 14), (15, 16))

STD_FLOOR = 1e-8

_HAND_COUNT = KIND_CAPACITY[LandmarkKind.LEFT_HAND]


def _check_indices(name: str, indices: tuple[int, ...], capacity: int) -> None:
    if list(indices) != sorted(set(indices)):
        raise ValidationError(f"{name} indices must be sorted and unique")
    if indices and not (0 <= indices[0] and indices[-1] < capacity):
        raise ValidationError(f"{name} indices out of range [0, {capacity})")


@dataclass(frozen=True)
class SelectionSpec:
    """Which landmarks enter the feature tensor. Hands are always all 21."""

    lips: tuple[int, ...] = DEFAULT_LIPS
    pose: tuple[int, ...] = DEFAULT_POSE

    def __post_init__(self):
        _check_indices("lips", self.lips, KIND_CAPACITY[LandmarkKind.FACE])
        _check_indices("pose", self.pose, KIND_CAPACITY[LandmarkKind.POSE])

    @property
    def num_landmarks(self) -> int:
        return len(self.lips) + 2 * _HAND_COUNT + len(self.pose)

    @property
    def feature_dim(self) -> int:
        return 2 * self.num_landmarks

    def row_of(self) -> dict[tuple[LandmarkKind, int], int]:
        """Map (kind, landmark_index) -> row in the selected matrix."""
        rows: dict[tuple[LandmarkKind, int], int] = {}
        r = 0
        for idx in self.lips:
            rows[(LandmarkKind.FACE, idx)] = r
            r += 1
        for idx in range(_HAND_COUNT):
            rows[(LandmarkKind.LEFT_HAND, idx)] = r
            r += 1
        for idx in range(_HAND_COUNT):
            rows[(LandmarkKind.RIGHT_HAND, idx)] = r
            r += 1
        for idx in self.pose:
            rows[(LandmarkKind.POSE, idx)] = r
            r += 1
        return rows

    @classmethod
    def from_json(cls, text: str) -> "SelectionSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"selection spec: invalid JSON ({e})") from None
        if not isinstance(data, dict):
            raise ValidationError("selection spec: expected a JSON object")
        lips = data.get("lips", list(DEFAULT_LIPS))
        pose = data.get("pose", list(DEFAULT_POSE))
        for name, val in (("lips", lips), ("pose", pose)):
            if not isinstance(val, list) or not all(isinstance(i, int) for i in val):
                raise ValidationError(f"selection spec: {name} must be an int array")
        return cls(tuple(lips), tuple(pose))

    @classmethod
    def load(cls, path: str | Path) -> "SelectionSpec":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def save(self, path: str | Path) -> None:
        payload = {"lips": list(self.lips), "pose": list(self.pose)}
        Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class AugmentConfig:
    """Seeded training-time augmentation. Default ranges are the identity."""

    resample_scale_range: tuple[float, float] = (1.0, 1.0)
    mask_prob: float = 0.0
    flip_prob: float = 0.0
    scale_range: tuple[float, float] = (1.0, 1.0)
    shift_range: tuple[float, float] = (0.0, 0.0)
    rotate_deg_range: tuple[float, float] = (0.0, 0.0)
    shear_range: tuple[float, float] = (0.0, 0.0)
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("resample_scale_range", "scale_range", "shift_range",
                     "rotate_deg_range", "shear_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValidationError(f"{name}: lo {lo} > hi {hi}")
        for name in ("mask_prob", "flip_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} {p} outside [0, 1]")


def select_and_drop_z(sample: SignSample, spec: SelectionSpec) -> list[np.ndarray]:
    """Per distinct frame, a (K, 2) matrix of selected (x, y); NaN = absent."""
    rows = spec.row_of()
    k = spec.num_landmarks
    out: list[np.ndarray] = []
    for _, group in sample.by_frame():
        mat = np.full((k, 2), np.nan)
        for f in group:
            r = rows.get((f.kind, f.landmark_index))
            if r is not None:
                mat[r, 0] = f.x
                mat[r, 1] = f.y
        out.append(mat)
    return out


def normalize(frames: list[np.ndarray]) -> list[np.ndarray]:
    """Center/scale by the per-sample mean and population std of all
    non-missing coordinates (x and y pooled); missing entries become 0."""
    stacked = np.concatenate([f.ravel() for f in frames])
    finite = stacked[np.isfinite(stacked)]
    if finite.size == 0:
        raise DegenerateInputError("sample has no observed coordinates")
    mean = finite.mean()
    std = finite.std()
    if std < STD_FLOOR:
        std = 1.0
    out = []
    for f in frames:
        g = (f - mean) / std
        out.append(np.where(np.isnan(f), 0.0, g))
    return out


def _stack(frames: list[np.ndarray]) -> np.ndarray:
    # (L, K, 2) -> (L, 2K), landmark-major interleaving
    arr = np.stack(frames)
    return arr.reshape(arr.shape[0], -1)


def resample(frames: list[np.ndarray], target_len: int) -> np.ndarray:
    """Linearly interpolate onto target_len uniform positions over [0, L-1].

    Returns the float32 feature tensor of shape (target_len, 2K). When the
    input already has target_len frames the result is a bit-identical copy.
    """
    if target_len <= 0:
        raise ValueError(f"target_len must be positive, got {target_len}")
    if not frames:
        raise ValidationError("cannot resample an empty sequence")
    flat = _stack(frames)
    return _resample_matrix(flat, target_len).astype(np.float32)


def _resample_matrix(flat: np.ndarray, target_len: int) -> np.ndarray:
    length = flat.shape[0]
    if length == target_len:
        return flat.copy()
    if length == 1:
        return np.repeat(flat, target_len, axis=0)
    pos = np.linspace(0.0, length - 1.0, target_len)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, length - 1)
    frac = (pos - lo)[:, None]
    return flat[lo] * (1.0 - frac) + flat[hi] * frac


def _flip_permutation(spec: SelectionSpec) -> np.ndarray:
    perm = np.arange(spec.num_landmarks)
    nl = len(spec.lips)
    left = np.arange(nl, nl + _HAND_COUNT)
    right = left + _HAND_COUNT
    perm[left] = right
    perm[right] = left
    pose_base = nl + 2 * _HAND_COUNT
    pose_pos = {idx: pose_base + i for i, idx in enumerate(spec.pose)}
    for a, b in POSE_FLIP_PAIRS:
        if a in pose_pos and b in pose_pos:
            perm[pose_pos[a]] = pose_pos[b]
            perm[pose_pos[b]] = pose_pos[a]
    return perm


def flip_horizontal(frames: list[np.ndarray], spec: SelectionSpec) -> list[np.ndarray]:
    """Mirror x -> 1-x and exchange the left/right hand blocks and the
    paired pose rows. An involution: applying it twice restores the input."""
    perm = _flip_permutation(spec)
    out = []
    for f in frames:
        g = f[perm].copy()
        g[:, 0] = 1.0 - g[:, 0]
        out.append(g)
    return out


def _affine_matrix(scale: float, rotate_deg: float, shear: float) -> np.ndarray:
    # Composition order: scale, then x-shear, then rotation, all about origin.
    theta = math.radians(rotate_deg)
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    sh = np.array([[1.0, shear], [0.0, 1.0]])
    sc = np.array([[scale, 0.0], [0.0, scale]])
    return rot @ sh @ sc


def augment(frames: list[np.ndarray], cfg: AugmentConfig,
            spec: SelectionSpec) -> list[np.ndarray]:
    """Seeded augmentation: temporal re-length + frame masking, then
    horizontal flip and a random affine map of (x, y). Pure in rng_seed."""
    rng = np.random.default_rng(cfg.rng_seed)
    length = len(frames)

    # Temporal: new length round(L*u), half away from zero, floor 1.
    u = rng.uniform(*cfg.resample_scale_range)
    new_len = max(1, int(math.floor(length * u + 0.5)))
    if new_len != length:
        flat = _resample_matrix(_stack(frames), new_len)
        k = frames[0].shape[0]
        frames = [row.reshape(k, 2) for row in flat]
    else:
        frames = [f.copy() for f in frames]

    mask_draws = rng.uniform(size=len(frames))
    for i, draw in enumerate(mask_draws):
        if draw < cfg.mask_prob:
            frames[i] = np.full_like(frames[i], np.nan)

    if rng.uniform() < cfg.flip_prob:
        frames = flip_horizontal(frames, spec)

    scale = rng.uniform(*cfg.scale_range)
    rotate = rng.uniform(*cfg.rotate_deg_range)
    shear = rng.uniform(*cfg.shear_range)
    shift = rng.uniform(cfg.shift_range[0], cfg.shift_range[1], size=2)
    identity = scale == 1.0 and rotate == 0.0 and shear == 0.0 and not shift.any()
    if not identity:
        m = _affine_matrix(scale, rotate, shear)
        frames = [f @ m.T + shift for f in frames]
    return frames


def preprocess_pipeline(sample: SignSample, spec: SelectionSpec,
                        target_len: int,
                        cfg: AugmentConfig | None = None) -> np.ndarray:
    """select_and_drop_z -> (augment) -> normalize -> resample."""
    frames = select_and_drop_z(sample, spec)
    if cfg is not None:
        frames = augment(frames, cfg, spec)
    frames = normalize(frames)
    return resample(frames, target_len)
