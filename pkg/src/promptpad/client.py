"""Headless clients.

Two modes exist, both speaking the channel protocol:

* full replica (op frames): owns a local CRDT replica, can edit offline,
  exchanges op frames and catch-up bundles. The simulator and the
  convergence fuzz drive these.
* thin intent client (intent frames): no local fold; every gesture becomes
  an intent frame the server materializes. The browser UI is exactly this,
  so `gesture_to_intent` below is the contract the UI fidelity test checks
  — the TypeScript client implements the same table and the traces must
  match gesture for gesture.
"""

from __future__ import annotations

import asyncio
import json

from .ops import SyncOp
from .protocol import (
    CATCHUP_BUNDLE,
    Frame,
    HELLO,
    INTENT,
    INTENT_RESULT,
    OP,
    POPUP,
)
from .replica import Replica

GESTURE_TO_INTENT = {
    "addBlock": "insertBlock",
    "deleteBlock": "deleteBlock",
    "type": "editText",
    "selectNode": "createAnchor",
    "mechanismIcon": "createLink",
    "popupAccept": "acceptShare",
    "popupDecline": "declineShare",
    "dehighlightLink": "unlink",
    "cancelRequest": "cancelRequest",
    "resolveMessage": "resolveMessage",
    "generate": "regenerate",
    "promptFromCode": "promptFromCode",
    "rollback": "rollback",
    "runCode": "execute",
    "explain": "explain",
    "resetSession": "resetSession",
}

_GESTURE_ARGS = {
    "addBlock": ("kind", "content", "afterBlockId", "beforeBlockId", "level"),
    "deleteBlock": ("blockId",),
    "type": ("blockId", "rangeEdits"),
    "selectNode": ("blockId", "start", "end"),
    "mechanismIcon": ("kind", "source", "target", "message"),
    "popupAccept": ("linkId",),
    "popupDecline": ("linkId",),
    "dehighlightLink": ("linkId",),
    "cancelRequest": ("linkId",),
    "resolveMessage": ("messageId",),
    "generate": ("blockId",),
    "promptFromCode": ("blockId",),
    "rollback": ("blockId", "toVersion"),
    "runCode": ("blockId",),
    "explain": ("blockId",),
    "resetSession": (),
}


def gesture_to_intent(gesture: dict, req_id: int) -> dict:
    """Translate one editor gesture into an intent payload.

    Pure and total over known gestures; raises KeyError on unknown ones.
    The TS client mirrors this table verbatim.
    """
    name = gesture["gesture"]
    intent = GESTURE_TO_INTENT[name]
    args = {}
    for key in _GESTURE_ARGS[name]:
        if key in gesture and gesture[key] is not None:
            args[key] = gesture[key]
    return {"reqId": req_id, "intent": intent, "args": args}


class IntentTrace:
    """Recorded wire-visible intent sequence (the fidelity artifact)."""

    def __init__(self):
        self.frames: list[dict] = []

    def record(self, frame: Frame) -> None:
        if frame.type == INTENT:
            self.frames.append(
                {"intent": frame.payload["intent"], "args": frame.payload["args"]}
            )

    def to_obj(self) -> list[dict]:
        return self.frames


class ThinClient:
    """Transport-agnostic intent client core: gestures in, frames out."""

    def __init__(self, doc_id: str, actor: str, send=None):
        self.doc_id = doc_id
        self.actor = actor
        self._send = send
        self._req = 0
        self.trace = IntentTrace()
        self.popups: list[dict] = []
        self.results: dict[int, dict] = {}

    def hello_frame(self) -> Frame:
        return Frame(HELLO, self.doc_id, {}, actor=self.actor, frontier={})

    def gesture(self, gesture: dict) -> Frame:
        self._req += 1
        payload = gesture_to_intent(gesture, self._req)
        frame = Frame(INTENT, self.doc_id, payload, actor=self.actor)
        self.trace.record(frame)
        if self._send is not None:
            self._send(frame)
        return frame

    def on_frame(self, frame: Frame) -> None:
        if frame.type == POPUP:
            self.popups.append(frame.payload)
        elif frame.type == INTENT_RESULT:
            self.results[frame.payload.get("reqId")] = frame.payload


class ReplicaClient:
    """Full client: local replica + op-frame exchange + offline catch-up."""

    def __init__(self, doc_id: str, actor: str):
        self.replica = Replica(doc_id, actor)
        self.doc_id = doc_id
        self.actor = actor
        self.popups: list[dict] = []
        self.highlights: list[dict] = []

    def hello_frame(self) -> Frame:
        return Frame(
            HELLO, self.doc_id, {}, actor=self.actor, frontier=self.replica.frontier()
        )

    def outgoing_op_frame(self) -> Frame | None:
        ops = self.replica.take_outbox()
        if not ops:
            return None
        return Frame(OP, self.doc_id, {"ops": [op.to_obj() for op in ops]},
                     actor=self.actor)

    def on_frame(self, frame: Frame) -> None:
        if frame.type == OP:
            ops = [SyncOp.from_obj(o) for o in frame.payload.get("ops", [])]
            self.replica.integrate(ops)
        elif frame.type == CATCHUP_BUNDLE:
            ops = [SyncOp.from_obj(o) for o in frame.payload.get("ops", [])]
            self.replica.integrate(ops)
            self.popups.extend(frame.payload.get("popups", []))
            self.highlights.extend(frame.payload.get("highlights", []))
        elif frame.type == POPUP:
            self.popups.append(frame.payload)


class WsReplicaClient:
    """Async WebSocket transport for a full replica client."""

    def __init__(self, url: str, doc_id: str, actor: str):
        self.url = url
        self.core = ReplicaClient(doc_id, actor)
        self._ws = None
        self._reader: asyncio.Task | None = None

    async def connect(self) -> None:
        import websockets

        self._ws = await websockets.connect(self.url)
        await self._ws.send(self.core.hello_frame().encode())
        self._reader = asyncio.create_task(self._read_loop())

    async def _read_loop(self) -> None:
        assert self._ws is not None
        try:
            async for message in self._ws:
                self.core.on_frame(Frame.decode(message))
        except Exception:
            pass

    async def flush(self) -> None:
        frame = self.core.outgoing_op_frame()
        if frame is not None and self._ws is not None:
            await self._ws.send(frame.encode())

    async def close(self) -> None:
        if self._reader is not None:
            self._reader.cancel()
        if self._ws is not None:
            await self._ws.close()

    @property
    def replica(self) -> Replica:
        return self.core.replica


def parse_frame_json(text: str) -> Frame:
    return Frame.from_obj(json.loads(text))
