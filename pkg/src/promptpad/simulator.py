"""Scripted multi-client sessions, fully in-process and deterministic.

A Session wires N full-replica clients to one hosted DocSession through
in-memory frame routing: per-client offline windows drop live frames (the
catch-up bundle replays them on reconnect), delivery order is shuffled by
the seeded RNG, and the mock oracle plus a normalized execution clock make
the whole run a pure function of (script, seed) — same inputs, byte-equal
report.
"""

from __future__ import annotations

import random
from pathlib import Path

import yaml

from .genai import MockOracle
from .ops import SyncOp, canonical_json
from .persist import DocStore
from .protocol import CATCHUP_BUNDLE, OP, POPUP
from .replica import Replica
from .sandbox import SandboxManager
from .server.service import DocSession

EVENT_CATEGORIES = (
    "add-prompt",
    "edit-prompt",
    "edit-code",
    "auto-update",
    "refer",
    "request",
    "share",
    "link",
    "navigate",
    "explain",
    "history",
)


class ScriptError(Exception):
    pass


class SimClient:
    def __init__(self, doc_id: str, name: str):
        self.name = name
        self.replica = Replica(doc_id, name)
        self.online = True
        self.popups: list[dict] = []
        self.highlights: list[dict] = []


class Session:
    """One simulated collaboration session."""

    def __init__(
        self,
        doc_id: str,
        client_names,
        seed: int = 0,
        oracle=None,
        data_dir=None,
        with_sandbox: bool = False,
    ):
        self.doc_id = doc_id
        self.rng = random.Random(seed)
        store = DocStore(data_dir, doc_id, fsync_every=1) if data_dir else None
        self.server = DocSession(
            doc_id,
            oracle if oracle is not None else MockOracle(),
            store=store,
            sandbox=SandboxManager() if with_sandbox else None,
        )
        self.server.exec_normalize = True
        self.clients = {n: SimClient(doc_id, n) for n in client_names}
        self.view_counts = {"navigate": 0, "explain": 0, "history": 0}
        for n in client_names:
            self.server.handle_hello(n, {})

    # -- frame routing -------------------------------------------------------

    def _route(self, messages) -> None:
        for target, frame in messages:
            client = self.clients.get(target)
            if client is None or not client.online:
                continue
            if frame.type == OP:
                client.replica.integrate(
                    [SyncOp.from_obj(o) for o in frame.payload.get("ops", [])]
                )
            elif frame.type == CATCHUP_BUNDLE:
                client.replica.integrate(
                    [SyncOp.from_obj(o) for o in frame.payload.get("ops", [])]
                )
                client.popups.extend(frame.payload.get("popups", []))
                client.highlights.extend(frame.payload.get("highlights", []))
            elif frame.type == POPUP:
                client.popups.append(frame.payload)

    def deliver_from(self, name: str) -> None:
        client = self.clients[name]
        if not client.online:
            return
        ops = client.replica.take_outbox()
        if ops:
            self._route(self.server.handle_ops(name, [o.to_obj() for o in ops]))

    def sync(self) -> None:
        """Flush all traffic to quiescence; delivery order is seed-shuffled."""
        for _ in range(1024):
            names = [
                n
                for n, c in self.clients.items()
                if c.online and c.replica.outbox
            ]
            if not names:
                break
            self.rng.shuffle(names)
            for n in names:
                self.deliver_from(n)

    def go_offline(self, name: str) -> None:
        self.clients[name].online = False
        self.server.handle_disconnect(name)

    def go_online(self, name: str) -> None:
        client = self.clients[name]
        client.online = True
        self._route(self.server.handle_hello(name, client.replica.frontier()))
        self.deliver_from(name)

    def intent(self, name: str, intent: str, args: dict) -> dict:
        messages = self.server.handle_intent(
            name, {"reqId": 0, "intent": intent, "args": args}
        )
        result = None
        for target, frame in messages:
            if frame.type == "intent-result" and target == name:
                result = frame.payload
        self._route([(t, f) for t, f in messages if f.type != "intent-result"])
        if result is None or not result.get("ok", False):
            raise ScriptError(f"intent {intent} failed: {result}")
        return result.get("result") or {}

    # -- inspection ------------------------------------------------------------

    def replicas(self) -> list[Replica]:
        return [self.server.replica] + [c.replica for c in self.clients.values()]

    def converged(self) -> bool:
        baseline = self.server.replica.state.canonical_bytes()
        return all(
            c.replica.state.canonical_bytes() == baseline
            for c in self.clients.values()
            if c.online
        )

    def event_counts(self) -> dict:
        counts = {k: 0 for k in EVENT_CATEGORIES}
        for op in self.server.replica.log:
            p = op.payload
            cause = p.get("cause") or {"kind": "manual"}
            auto = cause.get("kind") == "auto"
            if op.kind == "insert-block":
                if auto:
                    counts["auto-update"] += 1
                elif p.get("kind") == "prompt":
                    counts["add-prompt"] += 1
                elif p.get("kind") == "code":
                    counts["edit-code"] += 1
            elif op.kind == "text-edit":
                if auto:
                    counts["auto-update"] += 1
                elif cause.get("kind") == "rollback":
                    counts["history"] += 1
                else:
                    edits = p.get("edits", [])
                    if edits:
                        block = self.server.replica.state.blocks.get(
                            edits[0]["blockId"]
                        )
                        if block is not None and block.kind == "code":
                            counts["edit-code"] += 1
                        else:
                            counts["edit-prompt"] += 1
            elif op.kind == "link-event" and p.get("event") == "create":
                kind = p.get("kind")
                if kind in counts:
                    counts[kind] += 1
        for k, v in self.view_counts.items():
            counts[k] += v
        return counts


# -- script running -------------------------------------------------------


def _resolve(ids: dict, ref, session: Session | None = None):
    if ref is None:
        return None
    if isinstance(ref, str) and ref.startswith("code_of:"):
        prompt_id = ids.get(ref[8:], ref[8:])
        assert session is not None
        code = session.server.replica.state.code_block_of(prompt_id)
        if code is None:
            raise ScriptError(f"no code block for {ref}")
        return code.id
    return ids.get(ref, ref)


def run_script(script: dict, seed: int) -> dict:
    doc_id = script.get("doc", "sim-doc")
    client_names = script.get("clients", [])
    session = Session(
        doc_id,
        client_names,
        seed=seed,
        with_sandbox=bool(script.get("sandbox", False)),
    )
    ids: dict[str, str] = {}
    assertions: list[dict] = []

    for i, step in enumerate(script.get("steps", [])):
        if "do" in step:
            _run_action(session, ids, step)
        elif "assert" in step:
            ok, detail = _run_assert(session, ids, step)
            assertions.append(
                {"step": i, "kind": step["assert"], "ok": ok, "detail": detail}
            )
        else:
            raise ScriptError(f"step {i} has neither 'do' nor 'assert': {step}")

    session.sync()
    counts = session.event_counts()
    state = session.server.replica.state
    message_counts: dict[str, int] = {}
    for m in state.messages.values():
        message_counts[m.action_type] = message_counts.get(m.action_type, 0) + 1
    report = {
        "script": script.get("name", ""),
        "seed": seed,
        "clients": list(client_names),
        "opCount": len(session.server.replica.log),
        "eventCounts": {k: counts[k] for k in EVENT_CATEGORIES},
        "messageCounts": dict(sorted(message_counts.items())),
        "assertions": assertions,
        "allAssertionsPassed": all(a["ok"] for a in assertions),
        "converged": session.converged(),
        "finalSnapshot": state.snapshot_text().split("\n") if state.blocks else [],
        "finalDigest": state.digest(),
    }
    return report


def _client(session: Session, step: dict) -> SimClient:
    name = step.get("client")
    if name not in session.clients:
        raise ScriptError(f"unknown client {name!r}")
    return session.clients[name]


def _run_action(session: Session, ids: dict, step: dict) -> None:
    do = step["do"]
    if do == "sync":
        session.sync()
        return
    if do == "offline":
        session.go_offline(step["client"])
        return
    if do == "online":
        session.go_online(step["client"])
        return

    client = _client(session, step)
    r = client.replica
    if do == "insert":
        block_id = r.insert_block(
            kind=step["kind"],
            content=step.get("content", ""),
            after_block_id=_resolve(ids, step.get("after"), session),
            level=int(step.get("level", 1)),
        )
        if "as" in step:
            ids[step["as"]] = block_id
    elif do == "edit":
        edits = [tuple(e) for e in step["edits"]]
        r.edit_block_text(_resolve(ids, step["block"], session), edits)
    elif do == "delete":
        r.delete_block(_resolve(ids, step["block"], session))
    elif do == "anchor":
        anchor_id = r.create_anchor(
            _resolve(ids, step["block"], session),
            int(step["start"]),
            int(step["end"]),
        )
        if "as" in step:
            ids[step["as"]] = anchor_id
    elif do == "link":
        link_id = r.create_link(
            step["kind"],
            _resolve(ids, step["source"], session),
            _resolve(ids, step["target"], session),
            step.get("message"),
        )
        if "as" in step:
            ids[step["as"]] = link_id
    elif do == "accept":
        r.accept_share(_resolve(ids, step["link"], session))
    elif do == "decline":
        r.decline_share(_resolve(ids, step["link"], session))
    elif do == "unlink":
        r.unlink(_resolve(ids, step["link"], session))
    elif do == "cancel":
        r.cancel_request(_resolve(ids, step["link"], session))
    elif do == "regenerate":
        r.request_regenerate(_resolve(ids, step["block"], session))
    elif do == "rollback":
        r.rollback(_resolve(ids, step["block"], session), int(step["version"]))
    elif do == "resolve_message":
        r.resolve_message(_resolve(ids, step["message"], session))
    elif do == "execute":
        session.intent(
            step["client"], "execute",
            {"blockId": _resolve(ids, step["block"], session)},
        )
    elif do == "explain":
        session.intent(
            step["client"], "explain",
            {"blockId": _resolve(ids, step["block"], session)},
        )
        session.view_counts["explain"] += 1
    elif do == "navigate":
        session.view_counts["navigate"] += 1
    elif do == "history":
        session.view_counts["history"] += 1
    else:
        raise ScriptError(f"unknown action {do!r}")

    if step.get("deliver", True) and do not in ("navigate", "history"):
        session.sync()


def _run_assert(session: Session, ids: dict, step: dict) -> tuple[bool, str]:
    kind = step["assert"]
    state = session.server.replica.state

    def block(ref):
        bid = _resolve(ids, ref, session)
        b = state.blocks.get(bid)
        if b is None:
            raise ScriptError(f"unknown block {ref}")
        return b

    if kind == "converged":
        session.sync()
        ok = session.converged()
        return ok, "" if ok else "replica states differ"
    if kind == "text_contains":
        b = block(step["block"])
        ok = step["needle"] in b.content
        return ok, "" if ok else f"{step['needle']!r} not in {b.content!r}"
    if kind == "text_equals":
        b = block(step["block"])
        ok = b.content == step["value"]
        return ok, "" if ok else f"{b.content!r} != {step['value']!r}"
    if kind == "code_contains":
        b = block(step["block"])
        code = state.code_block_of(b.id)
        if code is None:
            return False, "no code block"
        ok = step["needle"] in code.content
        return ok, "" if ok else f"{step['needle']!r} not in {code.content!r}"
    if kind == "link_state":
        link = state.links.get(_resolve(ids, step["link"], session))
        if link is None:
            return False, "unknown link"
        ok = link.state == step["state"]
        return ok, "" if ok else f"state is {link.state}"
    if kind == "popup_count":
        client = session.clients[step["client"]]
        ok = len(client.popups) == int(step["count"])
        return ok, "" if ok else f"{len(client.popups)} popups"
    if kind == "popup_order":
        client = session.clients[step["client"]]
        got = [p.get("linkId") for p in client.popups]
        want = [_resolve(ids, x, session) for x in step["links"]]
        ok = got == want
        return ok, "" if ok else f"popups {got} != {want}"
    if kind == "message_count":
        msgs = [
            m
            for m in state.messages.values()
            if step.get("type") is None or m.action_type == step["type"]
        ]
        ok = len(msgs) == int(step["count"])
        return ok, "" if ok else f"{len(msgs)} messages"
    if kind == "history_cause":
        chain = state.history.get(_resolve(ids, step["block"], session), [])
        version = int(step["version"])
        if not (1 <= version <= len(chain)):
            return False, f"no version {version}"
        rec = chain[version - 1]
        ok = rec.cause == step["cause"]
        return ok, "" if ok else f"cause is {rec.cause}"
    if kind == "history_length":
        chain = state.history.get(_resolve(ids, step["block"], session), [])
        ok = len(chain) == int(step["count"])
        return ok, "" if ok else f"{len(chain)} records"
    if kind == "exec_status":
        res = state.exec_results.get(_resolve(ids, step["block"], session))
        if res is None:
            return False, "no exec result"
        ok = res.get("status") == step["status"]
        return ok, "" if ok else f"status {res.get('status')}"
    if kind == "wiki_tasks":
        n = len(state.wiki.tree.roots)
        ok = n == int(step["count"])
        return ok, "" if ok else f"{n} root tasks"
    raise ScriptError(f"unknown assertion {kind!r}")


def load_script(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        script = yaml.safe_load(fh)
    if not isinstance(script, dict):
        script = {}
    return script


def render_report(report: dict) -> str:
    return canonical_json(report)
