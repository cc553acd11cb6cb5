"""Length-prefixed JSON wire format.

A frame is a 4-byte big-endian unsigned payload length followed by that many
bytes of UTF-8 JSON shaped `{"type": ..., "body": {...}}`. Payloads are
capped at 16 MiB. The decoder is incremental: bytes may arrive split at any
boundary and frames are emitted as soon as they complete.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

from ..errors import FrameError, ValidationError
from ..landmarks import LandmarkFrame, SignSample, kind_from_code

__all__ = [
    "DEFAULT_PORT",
    "MAX_FRAME_BYTES",
    "PROTOCOL_VERSION",
    "WIRE_TYPES",
    "WireMessage",
    "encode_frame",
    "decode_frame",
    "FrameDecoder",
    "error_message",
    "landmarks_message",
    "sample_to_body",
    "sample_from_body",
]

DEFAULT_PORT = 9470
PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 16 * 1024 * 1024

WIRE_TYPES = ("HELLO", "LANDMARKS", "RESULT", "SCRIPT", "ERROR", "BYE")

_LEN = struct.Struct(">I")


@dataclass(frozen=True)
class WireMessage:
    type: str
    body: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.type not in WIRE_TYPES:
            raise ValidationError(f"unknown wire message type {self.type!r}")
        if not isinstance(self.body, dict):
            raise ValidationError("wire message body must be an object")


def encode_frame(msg: WireMessage) -> bytes:
    """Canonical bytes for one message: no whitespace, keys type then body."""
    try:
        payload = json.dumps(
            {"type": msg.type, "body": msg.body},
            separators=(",", ":"),
            ensure_ascii=False,
            allow_nan=False,
        ).encode("utf-8")
    except (TypeError, ValueError) as e:
        raise FrameError(f"body is not wire-encodable: {e}") from None
    if len(payload) > MAX_FRAME_BYTES:
        raise FrameError(
            f"payload of {len(payload)} bytes exceeds the "
            f"{MAX_FRAME_BYTES}-byte frame cap"
        )
    return _LEN.pack(len(payload)) + payload


def _decode_payload(payload: bytes) -> WireMessage:
    try:
        data = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FrameError(f"payload is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise FrameError("payload must be a JSON object")
    extra = set(data) - {"type", "body"}
    if extra:
        raise FrameError(f"unexpected payload keys {sorted(extra)}")
    if "type" not in data or "body" not in data:
        raise FrameError("payload must have exactly the keys 'type' and 'body'")
    msg_type, body = data["type"], data["body"]
    if not isinstance(msg_type, str) or msg_type not in WIRE_TYPES:
        raise FrameError(f"unknown message type {msg_type!r}")
    if not isinstance(body, dict):
        raise FrameError("message body must be a JSON object")
    return WireMessage(msg_type, body)


class FrameDecoder:
    """Incremental frame parser. feed() buffers arbitrary chunks and returns
    every message completed so far; a partial frame just waits for more
    bytes. Oversized or malformed frames raise FrameError, after which the
    decoder must be discarded (the stream has lost sync)."""

    def __init__(self):
        self._buf = bytearray()

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)

    def feed(self, data: bytes) -> list[WireMessage]:
        self._buf.extend(data)
        out: list[WireMessage] = []
        while True:
            if len(self._buf) < _LEN.size:
                return out
            (length,) = _LEN.unpack_from(self._buf)
            if length > MAX_FRAME_BYTES:
                raise FrameError(
                    f"declared payload of {length} bytes exceeds the "
                    f"{MAX_FRAME_BYTES}-byte frame cap"
                )
            if len(self._buf) < _LEN.size + length:
                return out
            payload = bytes(self._buf[_LEN.size:_LEN.size + length])
            del self._buf[:_LEN.size + length]
            out.append(_decode_payload(payload))


def decode_frame(data: bytes) -> WireMessage:
    """Decode exactly one complete frame; partial or trailing bytes error."""
    if len(data) < _LEN.size:
        raise FrameError("incomplete frame header")
    (length,) = _LEN.unpack_from(data)
    if length > MAX_FRAME_BYTES:
        raise FrameError(
            f"declared payload of {length} bytes exceeds the "
            f"{MAX_FRAME_BYTES}-byte frame cap"
        )
    if len(data) != _LEN.size + length:
        raise FrameError(
            f"frame declares {length} payload bytes but {len(data) - _LEN.size} "
            "are present"
        )
    return _decode_payload(data[_LEN.size:])


def error_message(code: str, message: str) -> WireMessage:
    return WireMessage("ERROR", {"code": code, "message": message})


def _wire_coord(v: float):
    # NaN has no JSON encoding; missing travels as null
    return None if math.isnan(v) else v


def sample_to_body(sample: SignSample) -> dict:
    """LANDMARKS body for a sample. The label never crosses the wire.

    Rows are [frame_index, kind_code, landmark_index, x, y, z] with null
    for missing coordinates.
    """
    return {
        "sample": {
            "id": sample.sample_id,
            "frames": [
                [f.frame_index, f.kind.value, f.landmark_index,
                 _wire_coord(f.x), _wire_coord(f.y), _wire_coord(f.z)]
                for f in sample.frames
            ],
        }
    }


def _body_coord(v, row: int) -> float:
    if v is None:
        return math.nan
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"sample frame {row}: coordinate is not a number")
    return float(v)


def sample_from_body(body: dict) -> SignSample:
    """Inverse of sample_to_body; raises ValidationError on any shape or
    content problem (this is remote input)."""
    sample = body.get("sample")
    if not isinstance(sample, dict):
        raise ValidationError("LANDMARKS body is missing the sample object")
    sample_id = sample.get("id")
    if not isinstance(sample_id, str):
        raise ValidationError("sample id must be a string")
    rows = sample.get("frames")
    if not isinstance(rows, list):
        raise ValidationError("sample frames must be an array")
    frames: list[LandmarkFrame] = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 6:
            raise ValidationError(f"sample frame {i}: expected 6 elements")
        frame_index, kind_code, landmark_index = row[0], row[1], row[2]
        if not isinstance(frame_index, int) or isinstance(frame_index, bool):
            raise ValidationError(f"sample frame {i}: frame index must be an int")
        if not isinstance(kind_code, int) or isinstance(kind_code, bool):
            raise ValidationError(f"sample frame {i}: kind code must be an int")
        if not isinstance(landmark_index, int) or isinstance(landmark_index, bool):
            raise ValidationError(f"sample frame {i}: landmark index must be an int")
        frames.append(
            LandmarkFrame(
                frame_index,
                kind_from_code(kind_code),
                landmark_index,
                _body_coord(row[3], i),
                _body_coord(row[4], i),
                _body_coord(row[5], i),
            )
        )
    return SignSample(sample_id, frames)


def landmarks_message(sample: SignSample) -> WireMessage:
    return WireMessage("LANDMARKS", sample_to_body(sample))
