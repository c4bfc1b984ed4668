"""Channel protocol frames.

One frame = one JSON object with fields {type, docId, actor?, payload,
frontier?}. Over a message transport (WebSocket) each frame is one text
message; over a byte stream frames are length-delimited as
``<decimal byte length>\\n<json bytes>``. PROTOCOL.md documents the schema
field by field; the browser client, the headless clients, and the
simulator all speak exactly this.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .ops import canonical_json

HELLO = "hello"
OP = "op"
ACK = "ack"
PRESENCE = "presence"
CATCHUP_REQUEST = "catchup-request"
CATCHUP_BUNDLE = "catchup-bundle"
POPUP = "popup"
INTENT = "intent"
INTENT_RESULT = "intent-result"
ERROR = "error"

FRAME_TYPES = (
    HELLO,
    OP,
    ACK,
    PRESENCE,
    CATCHUP_REQUEST,
    CATCHUP_BUNDLE,
    POPUP,
    INTENT,
    INTENT_RESULT,
    ERROR,
)


class ProtocolError(Exception):
    pass


@dataclass(frozen=True)
class Frame:
    type: str
    doc_id: str
    payload: dict = field(default_factory=dict)
    actor: str | None = None
    frontier: dict | None = None

    def to_obj(self) -> dict:
        obj = {"type": self.type, "docId": self.doc_id, "payload": self.payload}
        if self.actor is not None:
            obj["actor"] = self.actor
        if self.frontier is not None:
            obj["frontier"] = self.frontier
        return obj

    def encode(self) -> str:
        return canonical_json(self.to_obj())

    @classmethod
    def from_obj(cls, obj: dict) -> "Frame":
        t = obj.get("type")
        if t not in FRAME_TYPES:
            raise ProtocolError(f"unknown frame type: {t!r}")
        return cls(
            type=t,
            doc_id=obj.get("docId", ""),
            payload=obj.get("payload") or {},
            actor=obj.get("actor"),
            frontier=obj.get("frontier"),
        )

    @classmethod
    def decode(cls, text: str) -> "Frame":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"bad frame json: {exc}") from exc
        return cls.from_obj(obj)


def encode_stream(frame: Frame) -> bytes:
    body = frame.encode().encode("utf-8")
    return str(len(body)).encode("ascii") + b"\n" + body


class StreamDecoder:
    """Incremental parser for the length-delimited stream form."""

    def __init__(self):
        self._buf = b""

    def feed(self, data: bytes) -> list[Frame]:
        self._buf += data
        out: list[Frame] = []
        while True:
            nl = self._buf.find(b"\n")
            if nl < 0:
                break
            try:
                length = int(self._buf[:nl].decode("ascii"))
            except ValueError as exc:
                raise ProtocolError("bad length prefix") from exc
            end = nl + 1 + length
            if len(self._buf) < end:
                break
            body = self._buf[nl + 1 : end]
            self._buf = self._buf[end:]
            out.append(Frame.decode(body.decode("utf-8")))
        return out
