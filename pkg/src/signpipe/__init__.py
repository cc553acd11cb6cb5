"""signpipe: isolated sign recognition plus co-speech gesture composition.

The pipeline: landmark corpus -> preprocessing -> transformer classifier
(from-scratch numpy, manual backprop) -> two-step LLM dialogue with gesture
markup -> speech/gesture timeline, with a TCP server/robot-client pair and
a CLI tying the stages together.
"""

from . import dialogue, gesture, landmarks, netpipe, nn, preprocess, synth
from .errors import (
    BackendError,
    CorpusFormatError,
    DegenerateInputError,
    DivergenceError,
    FrameError,
    ProtocolViolation,
    ShapeError,
    SignpipeError,
    TemplateError,
    TransportError,
    UsageError,
    ValidationError,
    WeightFormatError,
)

__version__ = "0.1.0"

__all__ = [
    "dialogue",
    "gesture",
    "landmarks",
    "netpipe",
    "nn",
    "preprocess",
    "synth",
    "BackendError",
    "CorpusFormatError",
    "DegenerateInputError",
    "DivergenceError",
    "FrameError",
    "ProtocolViolation",
    "ShapeError",
    "SignpipeError",
    "TemplateError",
    "TransportError",
    "UsageError",
    "ValidationError",
    "WeightFormatError",
    "__version__",
]
