"""TCP link between the recognition server and the robot client."""

from .wire import (
    DEFAULT_PORT,
    MAX_FRAME_BYTES,
    PROTOCOL_VERSION,
    WIRE_TYPES,
    FrameDecoder,
    WireMessage,
    decode_frame,
    encode_frame,
    error_message,
    landmarks_message,
    sample_from_body,
    sample_to_body,
)
from .session import Session, SessionEffect, SessionState
from .server import ServerConfig, ServerHandle, serve
from .robot import robot_sim

__all__ = [
    "DEFAULT_PORT",
    "MAX_FRAME_BYTES",
    "PROTOCOL_VERSION",
    "WIRE_TYPES",
    "FrameDecoder",
    "WireMessage",
    "decode_frame",
    "encode_frame",
    "error_message",
    "landmarks_message",
    "sample_from_body",
    "sample_to_body",
    "Session",
    "SessionEffect",
    "SessionState",
    "ServerConfig",
    "ServerHandle",
    "serve",
    "robot_sim",
]
