"""Shared fixtures: tiny model configs, corpora builders, descriptor DBs."""

from __future__ import annotations

import numpy as np
import pytest

from signpipe.gesture import GestureDb, GestureDescriptor
from signpipe.landmarks import LandmarkFrame, LandmarkKind, SignSample
from signpipe.nn import ModelConfig, init_weights

# The published two-step example: the spoken reply and its tagged version.
SPOKEN_FIXTURE = (
    "Great! You drew a cloud sign, but the weather today is really nice. "
    "Just look up at the sky."
)
TAGGED_FIXTURE = (
    "[Yes] Great! [/Yes] You drew a cloud sign, but [Excited] the weather "
    "today is really nice [/Excited]. Just [ShowSky] look up at the sky "
    "[/ShowSky]."
)


@pytest.fixture
def tiny_cfg() -> ModelConfig:
    return ModelConfig(
        input_dim=6,
        extractor_dims=(8,),
        model_dim=8,
        num_layers=2,
        num_heads=2,
        ff_dim=16,
        num_classes=5,
        max_seq_len=4,
    )


@pytest.fixture
def tiny_weights(tiny_cfg):
    return init_weights(tiny_cfg, seed=123)


@pytest.fixture
def fixture_db() -> GestureDb:
    def g(tag, playtime, parts):
        return GestureDescriptor(tag, f"{tag} gesture", playtime, frozenset(parts))

    return GestureDb([
        g("Yes", 1.4, {"Neck"}),
        g("Excited", 2.6, {"Left Arm", "Right Arm"}),
        g("ShowSky", 2.1, {"Right Arm", "Right Hand"}),
        g("Thinking", 2.17, {"Eyes", "Neck", "Right Arm", "Right Hand"}),
    ])


def make_sample(sample_id: str = "s1", num_frames: int = 5, seed: int = 0,
                label: int | None = 3, with_missing: bool = False) -> SignSample:
    """A small right-hand-plus-pose sample with deterministic coordinates."""
    rng = np.random.default_rng(seed)
    frames = []
    for t in range(num_frames):
        for kind, count in ((LandmarkKind.RIGHT_HAND, 21), (LandmarkKind.POSE, 6)):
            for i in range(count):
                index = i if kind is LandmarkKind.RIGHT_HAND else 11 + i
                x, y, z = rng.uniform(0.1, 0.9, size=3)
                if with_missing and rng.uniform() < 0.2:
                    x = y = z = float("nan")
                frames.append(LandmarkFrame(t, kind, index, float(x), float(y), float(z)))
    return SignSample(sample_id, frames, label)
