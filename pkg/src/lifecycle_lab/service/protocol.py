"""Wire protocol: JSON text messages with a small envelope.

Every message is one UTF-8 JSON object ``{"type", "session_id", "seq",
"payload"}`` carried over a persistent bidirectional channel (WebSocket).
Sequence numbers increase strictly per session per direction; the server
rejects submissions whose sequence number does not advance past the last one
seen, which makes client retries after a lost acknowledgement safe. A HELLO
starts a new inbound epoch (a reconnecting client restarts its counter).
"""

from __future__ import annotations

import json
import math
from typing import Any

from ..errors import ValidationError

CLIENT_TYPES = ("HELLO", "SUBMIT_CONSUMPTION", "QUESTIONNAIRE_SUBMIT")
SERVER_TYPES = (
    "PERIOD_STATE",
    "ROUND_SUMMARY",
    "PHASE_CHANGE",
    "QUESTIONNAIRE_FORM",
    "SESSION_COMPLETE",
    "ERROR",
)

ERROR_CODES = (
    "bad_request",
    "sequence_error",
    "validation_error",
    "conflict",
    "state_error",
    "internal",
)


def envelope(msg_type: str, session_id: str | None, seq: int, payload: dict) -> dict:
    return {"type": msg_type, "session_id": session_id, "seq": seq, "payload": payload}


def encode(message: dict) -> str:
    """Canonical serialization: sorted keys, no whitespace, strict floats."""
    return json.dumps(message, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def decode(text: str) -> dict:
    """Parse and structurally validate one inbound client message."""
    try:
        msg = json.loads(text, parse_constant=_reject_constant)
    except (json.JSONDecodeError, ValueError) as exc:
        raise ValidationError(f"malformed JSON: {exc}") from None
    if not isinstance(msg, dict):
        raise ValidationError("message must be a JSON object")
    msg_type = msg.get("type")
    if msg_type not in CLIENT_TYPES:
        raise ValidationError(f"unknown or missing message type {msg_type!r}")
    seq = msg.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 1:
        raise ValidationError("seq must be a positive integer")
    session_id = msg.get("session_id")
    if session_id is not None and not isinstance(session_id, str):
        raise ValidationError("session_id must be a string or null")
    payload = msg.get("payload")
    if not isinstance(payload, dict):
        raise ValidationError("payload must be an object")
    return msg


def _reject_constant(name: str) -> Any:
    raise ValueError(f"non-finite JSON constant {name!r} not allowed")
