"""Document hosting service, transport-agnostic.

A DocSession owns the authoritative replica, the propagation engine, the
persistence store, and the exec sandbox for one document. Frame handling
returns (recipient, frame) pairs; the WebSocket app and the in-process
simulator both drive this same code, so the wire behavior they see is
identical by construction.

Ops are persisted and fsynced before they are broadcast: a recovered server
can never have handed out an op it does not remember, which keeps (actor,
seq) minting safe across crashes.
"""

from __future__ import annotations

import logging

from .. import protocol
from ..document import DocumentError
from ..engine import Engine
from ..genai import GenRequest, OracleUnavailable, assemble_context
from ..links import LinkError
from ..actionlog import UnknownMessage
from ..ops import SyncOp
from ..persist import DocStore, recover_replica, restore_actor_counters
from ..protocol import Frame
from ..replica import Replica, catchup_bundle
from ..sandbox import RunnerUnavailable, SandboxManager

logger = logging.getLogger(__name__)

SERVER_ACTOR = "server"


class UnknownDocument(Exception):
    pass


class DocSession:
    def __init__(
        self,
        doc_id: str,
        oracle,
        store: DocStore | None = None,
        sandbox: SandboxManager | None = None,
        exec_timeout_ms: int = 10_000,
    ):
        self.doc_id = doc_id
        self.oracle = oracle
        self.store = store
        self.sandbox = sandbox
        self.exec_timeout_ms = exec_timeout_ms
        # simulator mode: zero out wall-clock fields so reports are
        # byte-reproducible for a given (script, seed)
        self.exec_normalize = False
        if store is not None:
            self.replica, _, digest_ok = recover_replica(
                store.dir.parent, doc_id, SERVER_ACTOR
            )
            if not digest_ok:
                logger.warning("snapshot digest mismatch for %s; log wins", doc_id)
        else:
            self.replica = Replica(doc_id, SERVER_ACTOR)
        self.engine = Engine(self.replica, oracle)
        self.connected: dict[str, int] = {}  # actor -> connection generation

    # -- plumbing -----------------------------------------------------------

    def _persist(self, ops: list[SyncOp]) -> None:
        if self.store is None or not ops:
            return
        for op in ops:
            self.store.append_op(op)
        self.store.flush()

    def _drain_engine(self) -> list[SyncOp]:
        self.engine.pump()
        return self.replica.take_outbox()

    def _broadcasts(self, ops: list[SyncOp], exclude: str | None = None):
        if not ops:
            return []
        frame = Frame(
            protocol.OP,
            self.doc_id,
            {"ops": [op.to_obj() for op in ops]},
        )
        return [
            (actor, frame)
            for actor in self.connected
            if actor != exclude
        ]

    def _popups_for(self, ops: list[SyncOp]):
        out = []
        for op in ops:
            if op.kind != "link-event" or op.payload.get("event") != "create":
                continue
            if op.payload.get("kind") != "share":
                continue
            link = self.replica.state.links.get(op.payload.get("linkId"))
            if link is None or link.state != "pending":
                continue
            recipient = self.replica.state.share_recipient(link)
            if recipient in self.connected:
                out.append(
                    (
                        recipient,
                        Frame(
                            protocol.POPUP,
                            self.doc_id,
                            {
                                "linkId": link.id,
                                "from": link.creator,
                                "message": link.message,
                                "createdAt": link.created_at,
                            },
                        ),
                    )
                )
        return out

    def _ack(self, actor: str):
        return (actor, Frame(protocol.ACK, self.doc_id,
                             {}, frontier=self.replica.frontier()))

    # -- frame handlers -------------------------------------------------------

    def handle_hello(self, actor: str, frontier: dict) -> list:
        self.connected[actor] = self.connected.get(actor, 0) + 1
        bundle = catchup_bundle(self.replica, frontier or {}, actor)
        return [
            (
                actor,
                Frame(
                    protocol.CATCHUP_BUNDLE,
                    self.doc_id,
                    bundle,
                    frontier=self.replica.frontier(),
                ),
            )
        ]

    def handle_disconnect(self, actor: str) -> None:
        self.connected.pop(actor, None)

    def handle_ops(self, actor: str, op_objs: list[dict]) -> list:
        try:
            ops = [SyncOp.from_obj(o) for o in op_objs]
        except (KeyError, ValueError) as exc:
            return [(actor, Frame(protocol.ERROR, self.doc_id, {"error": str(exc)}))]
        applied = self.replica.integrate(ops)
        self._persist(applied)
        engine_ops = self._drain_engine()
        self._persist(engine_ops)
        out = []
        out.extend(self._broadcasts(applied, exclude=actor))
        out.extend(self._broadcasts(engine_ops))
        out.extend(self._popups_for(applied))
        out.append(self._ack(actor))
        return out

    def handle_catchup_request(self, actor: str, frontier: dict) -> list:
        bundle = catchup_bundle(self.replica, frontier or {}, actor)
        return [
            (actor, Frame(protocol.CATCHUP_BUNDLE, self.doc_id, bundle,
                          frontier=self.replica.frontier()))
        ]

    def handle_presence(self, actor: str, payload: dict) -> list:
        stamped = dict(payload)
        stamped["lastSeen"] = self.replica.clock
        self.replica.presence[actor] = stamped
        frame = Frame(protocol.PRESENCE, self.doc_id, stamped, actor=actor)
        return [(a, frame) for a in self.connected if a != actor]

    def handle_intent(self, actor: str, payload: dict) -> list:
        req_id = payload.get("reqId")
        name = payload.get("intent")
        args = payload.get("args") or {}
        try:
            result = self._dispatch_intent(actor, name, args)
            reply = {"reqId": req_id, "ok": True, "result": result}
        except (DocumentError, LinkError, UnknownMessage, RunnerUnavailable,
                OracleUnavailable, ValueError) as exc:
            reply = {
                "reqId": req_id,
                "ok": False,
                "error": type(exc).__name__,
                "message": str(exc),
            }
        own_ops = self.replica.take_outbox()
        self._persist(own_ops)
        engine_ops = self._drain_engine()
        self._persist(engine_ops)
        out = []
        out.extend(self._broadcasts(own_ops))
        out.extend(self._broadcasts(engine_ops))
        out.extend(self._popups_for(own_ops))
        out.append((actor, Frame(protocol.INTENT_RESULT, self.doc_id, reply)))
        return out

    def view_model(self) -> dict:
        """Render-ready mirror of the document for thin clients."""
        state = self.replica.state
        from ..actionlog import canonical_order

        blocks = []
        for b in state.order():
            blocks.append(
                {
                    "id": b.id,
                    "kind": b.kind,
                    "level": b.level,
                    "content": b.content,
                    "createdBy": b.created_by,
                    "authorLast": b.author_last,
                    "sourcePromptId": b.source_prompt_id,
                    "updatedAt": b.updated_at,
                    "execResult": state.exec_results.get(b.id),
                }
            )
        return {
            "docId": self.doc_id,
            "blocks": blocks,
            "wiki": state.wiki.tree.to_obj(),
            "anchors": [
                {
                    "id": a.id,
                    "blockId": a.block_id,
                    "start": a.start,
                    "end": a.end,
                    "status": a.status,
                    "owner": a.owner,
                    "wholeSection": a.whole_section,
                }
                for _, a in sorted(state.anchors.items())
            ],
            "links": [l.to_obj() for l in state.links.values()],
            "messages": [m.to_obj() for m in canonical_order(state.messages.values())],
            "presence": {k: dict(v) for k, v in sorted(self.replica.presence.items())},
            "frontier": self.replica.frontier(),
        }

    def handle_frame(self, actor: str, frame: Frame) -> list:
        if frame.type == protocol.HELLO:
            return self.handle_hello(frame.actor or actor, frame.frontier or {})
        if frame.type == protocol.OP:
            return self.handle_ops(actor, frame.payload.get("ops", []))
        if frame.type == protocol.CATCHUP_REQUEST:
            return self.handle_catchup_request(actor, frame.frontier or {})
        if frame.type == protocol.PRESENCE:
            return self.handle_presence(actor, frame.payload)
        if frame.type == protocol.INTENT:
            return self.handle_intent(actor, frame.payload)
        return [(actor, Frame(protocol.ERROR, self.doc_id,
                              {"error": f"unexpected frame type {frame.type}"}))]

    # -- intents ---------------------------------------------------------------

    def _dispatch_intent(self, actor: str, name: str, args: dict):
        """Server-side materialization for thin clients.

        The server replica mints the ops, but attribution uses the acting
        client: mutations go through a scoped actor proxy.
        """
        r = self.replica
        proxy = _ActorScope(r, actor)
        if name == "insertBlock":
            block_id = proxy.insert_block(
                kind=args["kind"],
                content=args.get("content", ""),
                after_block_id=args.get("afterBlockId"),
                before_block_id=args.get("beforeBlockId"),
                level=int(args.get("level", 1)),
                source_prompt_id=args.get("sourcePromptId"),
            )
            return {"blockId": block_id}
        if name == "deleteBlock":
            proxy.delete_block(args["blockId"])
            return {}
        if name == "editText":
            edits = [tuple(e) for e in args["rangeEdits"]]
            content = proxy.edit_block_text(args["blockId"], edits)
            return {"content": content}
        if name == "createAnchor":
            anchor_id = proxy.create_anchor(
                args["blockId"], int(args["start"]), int(args["end"])
            )
            return {"anchorId": anchor_id}
        if name == "createLink":
            link_id = proxy.create_link(
                args["kind"], args["source"], args["target"], args.get("message")
            )
            return {"linkId": link_id}
        if name == "acceptShare":
            proxy.accept_share(args["linkId"])
            return {}
        if name == "declineShare":
            proxy.decline_share(args["linkId"])
            return {}
        if name == "unlink":
            proxy.unlink(args["linkId"])
            return {}
        if name == "cancelRequest":
            proxy.cancel_request(args["linkId"])
            return {}
        if name == "resolveMessage":
            proxy.resolve_message(args["messageId"])
            return {}
        if name == "rollback":
            proxy.rollback(args["blockId"], int(args["toVersion"]))
            return {}
        if name == "regenerate":
            proxy.request_regenerate(args["blockId"])
            return {}
        if name == "promptFromCode":
            proxy.request_prompt_from_code(args["blockId"])
            return {}
        if name == "execute":
            return self._exec_intent(args)
        if name == "explain":
            result = self.engine.explain(args["blockId"])
            return {
                "steps": list(result.steps),
                "spanMap": [list(map(list, pair)) for pair in result.span_map],
                "unmapped": list(result.unmapped),
            }
        if name == "resetSession":
            if self.sandbox is not None:
                self.sandbox.reset_session(self.doc_id)
            return {}
        raise ValueError(f"unknown intent {name!r}")

    def _exec_intent(self, args: dict) -> dict:
        if self.sandbox is None:
            raise RunnerUnavailable("no sandbox configured")
        block_id = args["blockId"]
        block = self.replica.state.blocks.get(block_id)
        if block is None or block.deleted or block.kind != "code":
            raise DocumentError(f"execute needs a code block, got {block_id}")
        chain = self.replica.state.history.get(block_id, [])
        version = chain[-1].version_no if chain else 0
        result = self.sandbox.execute(
            self.doc_id,
            block_id,
            block.content,
            version,
            timeout_ms=int(args.get("timeoutMs", self.exec_timeout_ms)),
        )
        obj = result.to_obj()
        if self.exec_normalize:
            obj["durationMs"] = 0
        self.replica.record_exec_result(block_id, obj)
        return obj


class _ActorScope:
    """Runs replica intents with on_behalf_of set to the acting client, so
    minted ops carry their identity for attribution and recipient checks."""

    def __init__(self, replica: Replica, actor: str):
        self._replica = replica
        self._actor = actor

    def __getattr__(self, name):
        target = getattr(self._replica, name)
        if not callable(target):
            return target

        def scoped(*args, **kwargs):
            prev = self._replica.on_behalf_of
            self._replica.on_behalf_of = self._actor
            try:
                return target(*args, **kwargs)
            finally:
                self._replica.on_behalf_of = prev

        return scoped


class Hub:
    """All hosted documents."""

    def __init__(self, oracle, data_dir=None, sandbox: SandboxManager | None = None,
                 fsync_every: int = 8, exec_timeout_ms: int = 10_000):
        self.oracle = oracle
        self.data_dir = data_dir
        self.sandbox = sandbox if sandbox is not None else SandboxManager()
        self.fsync_every = fsync_every
        self.exec_timeout_ms = exec_timeout_ms
        self.docs: dict[str, DocSession] = {}

    def create_document(self, doc_id: str) -> DocSession:
        if doc_id in self.docs:
            return self.docs[doc_id]
        store = (
            DocStore(self.data_dir, doc_id, fsync_every=self.fsync_every)
            if self.data_dir is not None
            else None
        )
        session = DocSession(
            doc_id,
            self.oracle,
            store=store,
            sandbox=self.sandbox,
            exec_timeout_ms=self.exec_timeout_ms,
        )
        self.docs[doc_id] = session
        return session

    def get(self, doc_id: str) -> DocSession:
        session = self.docs.get(doc_id)
        if session is None:
            raise UnknownDocument(doc_id)
        return session

    def close(self) -> None:
        for session in self.docs.values():
            if session.store is not None:
                session.store.close()
        self.sandbox.close()
