"""Per-document derived state and the deterministic op reducer.

DocState is a pure function of the op set: replicas fold ops in the total
order (lamport, actor, seq), and every piece of derived state — blocks,
anchors, links, history, the message panel, the wiki tree, pending
propagation jobs — is computed inside the fold. Out-of-order arrivals are
handled by the replica (checkpoint restore + refold), never here.

Invalid or stale ops (illegal lifecycle transitions, superseded propagation
epochs, references to missing entities) are dropped, identically on every
replica.
"""

from __future__ import annotations

import logging

from . import actionlog, history, links as linkmod
from .actionlog import ActionMessage
from .document import (
    Anchor,
    Block,
    CODE,
    HEADING,
    PROMPT,
    ORPHANED,
    document_order,
    reanchor,
    refresh_anchor_status,
    snapshot_records,
)
from .history import VersionRecord
from .links import (
    LINK_PROPAGATE,
    MechanismLink,
    PropagationJob,
    REFER_FIRE,
    REGENERATE,
    REQUEST_CHECK,
    SHARE_APPLY,
    job_key,
    transition,
)
from .ops import (
    CREATE_ANCHOR,
    DELETE_BLOCK,
    EXEC_RESULT,
    INSERT_BLOCK,
    LINK_EVENT,
    PRESENCE,
    SyncOp,
    TEXT_EDIT,
    canonical_json,
    digest,
)
from .textcore import TextCore, decode_run
from .wiki import WikiIndex, derive_wiki

logger = logging.getLogger(__name__)

# test instrumentation: when set, called as hook(state, op) after every
# folded op (the wiki-equality oracle rides on this)
AFTER_APPLY_HOOK = None

MANUAL = "manual"
AUTO = "auto"
ROLLBACK = "rollback"

_CAUSE_TO_RECORD = {
    "sync-propagate": history.SYNC_PROPAGATE,
    "refer": history.REFER,
    "request-resolve": history.REQUEST_RESOLVE,
    "share-accept": history.SHARE_ACCEPT,
    "regenerate": history.REGENERATE,
}

_JOB_KEY_BY_CAUSE = {
    "sync-propagate": LINK_PROPAGATE,
    "refer": REFER_FIRE,
    "request-resolve": REQUEST_CHECK,
    "share-accept": SHARE_APPLY,
}


def _id_from_obj(obj):
    return tuple(tuple(t) for t in obj)


class DocState:
    def __init__(self):
        self.blocks: dict[str, Block] = {}
        self.anchors: dict[str, Anchor] = {}
        self.links: dict[str, MechanismLink] = {}
        self.history: dict[str, list[VersionRecord]] = {}
        self.messages: dict[str, ActionMessage] = {}
        self.msg_seq = 0
        self.jobs: dict[str, PropagationJob] = {}
        self.parked_shares: dict[str, list] = {}
        self.exec_results: dict[str, dict] = {}
        self.applied: dict[str, int] = {}
        self.wiki = WikiIndex()

    # -- copies / equality -------------------------------------------------

    def clone(self) -> "DocState":
        s = DocState.__new__(DocState)
        s.blocks = {k: b.clone() for k, b in self.blocks.items()}
        s.anchors = {k: a.clone() for k, a in self.anchors.items()}
        s.links = {k: l.clone() for k, l in self.links.items()}
        s.history = {k: list(v) for k, v in self.history.items()}
        s.messages = {k: m.clone() for k, m in self.messages.items()}
        s.msg_seq = self.msg_seq
        s.jobs = dict(self.jobs)
        s.parked_shares = {k: list(v) for k, v in self.parked_shares.items()}
        s.exec_results = {k: dict(v) for k, v in self.exec_results.items()}
        s.applied = dict(self.applied)
        s.wiki = self.wiki.clone()
        return s

    def order(self) -> list[Block]:
        return document_order(self.blocks)

    def snapshot_text(self) -> str:
        """Document snapshot: one structured record per block, by position."""
        return "\n".join(canonical_json(r) for r in snapshot_records(self.blocks))

    def canonical_obj(self) -> dict:
        return {
            "blocks": [
                {
                    "id": b.id,
                    "kind": b.kind,
                    "level": b.level,
                    "pos": b.pos,
                    "content": b.content,
                    "sourcePromptId": b.source_prompt_id,
                    "createdBy": b.created_by,
                    "authorLast": b.author_last,
                    "createdAt": b.created_at,
                    "updatedAt": b.updated_at,
                }
                for b in self.order()
            ],
            "anchors": [
                {
                    "id": a.id,
                    "blockId": a.block_id,
                    "start": a.start,
                    "end": a.end,
                    "snapshot": a.snapshot,
                    "owner": a.owner,
                    "wholeSection": a.whole_section,
                    "status": a.status,
                }
                for _, a in sorted(self.anchors.items())
            ],
            "links": [l.to_obj() for _, l in sorted(self.links.items())],
            "history": {
                bid: [r.to_obj() for r in recs]
                for bid, recs in sorted(self.history.items())
            },
            "messages": [m.to_obj() for m in self.messages.values()],
            "jobs": [j.to_obj() for j in self.jobs.values()],
            "parkedShares": {k: list(v) for k, v in sorted(self.parked_shares.items())},
            "execResults": {k: v for k, v in sorted(self.exec_results.items())},
            "applied": dict(sorted(self.applied.items())),
            "wiki": self.wiki.tree.to_obj(),
        }

    def canonical_bytes(self) -> bytes:
        return canonical_json(self.canonical_obj()).encode("utf-8")

    def digest(self) -> str:
        return digest(self.canonical_obj())

    # -- helpers ------------------------------------------------------------

    def _pair_texts(self, block_id: str) -> tuple[str, str]:
        b = self.blocks[block_id]
        if b.kind == PROMPT:
            code = self.code_block_of(block_id)
            return b.content, code.content if code is not None else ""
        if b.kind == CODE:
            p = self.blocks.get(b.source_prompt_id or "")
            return (p.content if p is not None and not p.deleted else "", b.content)
        return b.content, ""

    def code_block_of(self, prompt_id: str) -> Block | None:
        for b in self.order():
            if b.kind == CODE and b.source_prompt_id == prompt_id:
                return b
        return None

    def section_block_ids(self, heading_id: str) -> list[str]:
        """Blocks under a heading, up to the next heading of level <= its."""
        out = []
        h = self.blocks.get(heading_id)
        if h is None:
            return out
        active = False
        for b in self.order():
            if b.id == heading_id:
                active = True
                continue
            if not active:
                continue
            if b.kind == HEADING and b.level <= h.level:
                break
            out.append(b.id)
        return out

    def _emit(self, op: SyncOp, emit_idx: int, action_type: str, actor: str,
              link_id=None, block_id=None) -> str:
        mid = f"{op.op_id}/{emit_idx}"
        if mid in self.messages:
            return mid
        self.messages[mid] = ActionMessage(
            id=mid,
            action_type=action_type,
            actor=actor,
            link_id=link_id,
            block_id=block_id,
            lamport=op.lamport,
            seq=self.msg_seq,
            processed=action_type not in actionlog.ATTENTION_TYPES,
        )
        self.msg_seq += 1
        return mid

    def _process_messages(self, link_id: str, action_type: str) -> None:
        for m in self.messages.values():
            if m.link_id == link_id and m.action_type == action_type:
                m.processed = True

    def _record(self, block_id: str, cause: str, actor: str, link_id, op: SyncOp) -> VersionRecord | None:
        prompt_text, code_text = self._pair_texts(block_id)
        chain = self.history.setdefault(block_id, [])
        if cause not in history.AUDIT_CAUSES and chain:
            head = chain[-1]
            if head.prompt_text == prompt_text and head.code_text == code_text:
                return None
        rec = VersionRecord(
            block_id=block_id,
            version_no=len(chain) + 1,
            prompt_text=prompt_text,
            code_text=code_text,
            cause=cause,
            actor=actor,
            link_id=link_id,
            lamport=op.lamport,
            parent_version_no=len(chain),
            op_id=op.op_id,
        )
        chain.append(rec)
        return rec

    def _anchor_blocks(self, link: MechanismLink) -> tuple[str | None, str | None]:
        sa = self.anchors.get(link.source)
        ta = self.anchors.get(link.target)
        return (
            sa.block_id if sa is not None else None,
            ta.block_id if ta is not None else None,
        )

    @staticmethod
    def _op_actor(op: SyncOp) -> str:
        return op.payload.get("onBehalfOf") or op.actor

    def _live_block(self, block_id) -> Block | None:
        b = self.blocks.get(block_id or "")
        return b if b is not None and not b.deleted else None

    def _wiki_links_changed(self, link: MechanismLink) -> None:
        sb, tb = self._anchor_blocks(link)
        ids = [i for i in (sb, tb) if i is not None]
        self.wiki.on_links_changed(ids, self.anchors, self.links)

    # -- demand rules ---------------------------------------------------------

    def _after_content_change(self, block_id: str, cause: dict, op: SyncOp) -> None:
        """Schedule propagation and request detection for one changed block."""
        is_auto = cause.get("kind") == AUTO
        origin = cause.get("origin", op.op_id) if is_auto else op.op_id
        via = cause.get("linkId") if is_auto else None

        for link in self.links.values():
            if link.kind != linkmod.LINK or link.state not in linkmod.LIVE_LINK_STATES:
                continue
            if link.id == via or link.last_origin == origin:
                continue
            sa = self.anchors.get(link.source)
            ta = self.anchors.get(link.target)
            if sa is None or ta is None or ORPHANED in (sa.status, ta.status):
                continue
            if sa.block_id == block_id:
                other = ta.block_id
            elif ta.block_id == block_id:
                other = sa.block_id
            else:
                continue
            if self._live_block(other) is None:
                continue
            key = job_key(LINK_PROPAGATE, link.id)
            self.jobs[key] = PropagationJob(
                key, LINK_PROPAGATE, link.id, other, origin, link.epoch + 1, op.lamport
            )
            if link.state == "active":
                transition(link, "propagating")
                self._wiki_links_changed(link)

        for link in self.links.values():
            if link.kind != linkmod.REQUEST or link.state != "pending" or link.id == via:
                continue
            ta = self.anchors.get(link.target)
            if ta is None or ta.status == ORPHANED:
                continue
            sa = self.anchors.get(link.source)
            if sa is None or self._live_block(sa.block_id) is None:
                continue  # requester's placeholder is gone; nothing to regenerate
            tb = self._live_block(ta.block_id)
            if tb is None:
                continue
            changed = self.blocks.get(block_id)
            pair_prompt = (
                changed.source_prompt_id
                if changed is not None and changed.kind == CODE
                else None
            )
            hit = (
                tb.id == block_id
                or pair_prompt == tb.id
                or (ta.whole_section and block_id in self.section_block_ids(tb.id))
            )
            if hit:
                key = job_key(REQUEST_CHECK, link.id)
                self.jobs[key] = PropagationJob(
                    key, REQUEST_CHECK, link.id, block_id, op.op_id,
                    link.epoch + 1, op.lamport,
                )

    # -- the reducer ----------------------------------------------------------

    def apply(self, op: SyncOp) -> None:
        if op.kind == PRESENCE:
            return
        self.applied[op.actor] = max(self.applied.get(op.actor, 0), op.seq)
        handler = {
            INSERT_BLOCK: self._apply_insert_block,
            DELETE_BLOCK: self._apply_delete_block,
            TEXT_EDIT: self._apply_text_edit,
            CREATE_ANCHOR: self._apply_create_anchor,
            LINK_EVENT: self._apply_link_event,
            EXEC_RESULT: self._apply_exec_result,
        }[op.kind]
        handler(op)
        if AFTER_APPLY_HOOK is not None:
            AFTER_APPLY_HOOK(self, op)

    def _apply_insert_block(self, op: SyncOp) -> None:
        p = op.payload
        bid = p["blockId"]
        if bid in self.blocks or p["kind"] not in (HEADING, "text", PROMPT, CODE):
            logger.warning("dropping bad insert-block %s", op.op_id)
            return
        cause = p.get("cause") or {"kind": MANUAL}
        is_auto = cause.get("kind") == AUTO
        if is_auto and cause.get("jobKey"):
            self.jobs.pop(cause["jobKey"], None)
        creator = self._op_actor(op) if not is_auto else cause.get("attribution", op.actor)
        src_prompt = p.get("sourcePromptId")
        if src_prompt is not None:
            sp = self._live_block(src_prompt)
            if sp is None or sp.kind != PROMPT or sp.pos >= p["pos"]:
                src_prompt = None  # keep the invariant: earlier live prompt only
        block = Block(
            id=bid,
            kind=p["kind"],
            level=int(p.get("level") or 1),
            pos=p["pos"],
            created_by=creator,
            author_last=creator,
            created_at=op.lamport,
            updated_at=op.lamport,
            source_prompt_id=src_prompt,
            body=TextCore(),
        )
        if p.get("run"):
            ids, text = decode_run(p["run"])
            block.body.apply_insert(ids, text)
        self.blocks[bid] = block

        adopt = p.get("adoptCodeBlockId")
        if adopt:
            cb = self._live_block(adopt)
            if cb is not None and cb.kind == CODE and not cb.source_prompt_id:
                cb.source_prompt_id = bid

        self.wiki.on_block_inserted(block, self.blocks, self.anchors, self.links)

        if block.kind in (PROMPT, CODE):
            rec_cause = (
                _CAUSE_TO_RECORD.get(cause.get("causeKind"), history.MANUAL_EDIT)
                if is_auto
                else history.MANUAL_EDIT
            )
            actor = cause.get("attribution", op.actor) if is_auto else self._op_actor(op)
            self._record(bid, rec_cause, actor, cause.get("linkId"), op)
            self._after_content_change(bid, cause, op)

        # a new prompt under a heading consumes parked share bundles
        if block.kind == PROMPT:
            h = self._nearest_heading(bid)
            parked = self.parked_shares.get(h) if h else None
            if parked:
                for link_id, accept_op in parked:
                    link = self.links.get(link_id)
                    if link is None or link.state != "accepted":
                        continue
                    key = job_key(SHARE_APPLY, link_id)
                    self.jobs[key] = PropagationJob(
                        key, SHARE_APPLY, link_id, bid, accept_op,
                        link.epoch + 1, op.lamport,
                    )
                del self.parked_shares[h]

    def _nearest_heading(self, block_id: str) -> str | None:
        last = None
        for b in self.order():
            if b.id == block_id:
                return last
            if b.kind == HEADING:
                last = b.id
        return None

    def _apply_delete_block(self, op: SyncOp) -> None:
        b = self._live_block(op.payload.get("blockId"))
        if b is None:
            return
        b.deleted = True
        for a in self.anchors.values():
            if a.block_id == b.id:
                a.status = ORPHANED
        self.jobs = {
            k: j
            for k, j in self.jobs.items()
            if not self._job_touches_block(j, b.id)
        }
        self.wiki.on_block_deleted(b, self.blocks, self.anchors, self.links)

    def _job_touches_block(self, job: PropagationJob, block_id: str) -> bool:
        if job.target_block == block_id:
            return True
        if job.link_id:
            link = self.links.get(job.link_id)
            if link is not None and block_id in self._anchor_blocks(link):
                return True
        return False

    def _apply_text_edit(self, op: SyncOp) -> None:
        p = op.payload
        cause = p.get("cause") or {"kind": MANUAL}
        is_auto = cause.get("kind") == AUTO
        link = None

        if is_auto and cause.get("causeKind") in _JOB_KEY_BY_CAUSE:
            link = self.links.get(cause.get("linkId") or "")
            if link is None or not self._gate_auto_edit(link, cause):
                return
        elif is_auto and cause.get("jobKey"):
            self.jobs.pop(cause["jobKey"], None)

        changed: list[str] = []
        for entry in p.get("edits", ()):
            bid = entry["blockId"]
            block = self._live_block(bid)
            if block is None:
                continue
            before = block.content
            splices = []
            for part in entry.get("parts", ()):
                # one part is one range replacement; when its deletions and
                # insertion land at a single position, present them to the
                # anchor transforms as one atomic splice
                part_splices = []
                for dead in part.get("del", ()):
                    for pos in block.body.apply_delete([_id_from_obj(dead)]):
                        part_splices.append((pos, 1, 0))
                if part.get("ins"):
                    ids, text = decode_run(part["ins"])
                    got = block.body.apply_insert(ids, text)
                    if got is not None:
                        for pos, n in got:
                            part_splices.append((pos, 0, n))
                positions = {p for p, _, _ in part_splices}
                if len(part_splices) > 1 and len(positions) == 1:
                    p = positions.pop()
                    ndel = sum(d for _, d, _ in part_splices)
                    nins = sum(i for _, _, i in part_splices)
                    splices.append((p, ndel, nins))
                else:
                    splices.extend(part_splices)
            for a in self.anchors.values():
                if a.block_id == bid:
                    reanchor(a, block, splices)
            if block.content != before:
                changed.append(bid)

        if link is not None:
            # settle even when the regenerated text happened to be identical,
            # so the job is consumed and the epoch/origin advance
            self._settle_auto_edit(link, cause)

        if not changed:
            return

        actor = cause.get("attribution", op.actor) if is_auto else self._op_actor(op)
        rec_cause = history.MANUAL_EDIT
        if is_auto:
            rec_cause = _CAUSE_TO_RECORD.get(cause.get("causeKind"), history.MANUAL_EDIT)
        elif cause.get("kind") == ROLLBACK:
            rec_cause = history.ROLLBACK

        emit_idx = 0
        for bid in changed:
            block = self.blocks[bid]
            block.author_last = actor
            block.updated_at = op.lamport
            self.wiki.on_label_changed(block)
            if block.kind in (PROMPT, CODE):
                self._record(bid, rec_cause, actor, cause.get("linkId"), op)

        if is_auto and cause.get("causeKind") != "regenerate":
            self._emit(op, emit_idx, actionlog.AUTO_UPDATED, actor,
                       link_id=cause.get("linkId"), block_id=changed[0])
            emit_idx += 1
        elif cause.get("kind") == ROLLBACK:
            self._emit(op, emit_idx, actionlog.ROLLBACK, actor,
                       block_id=cause.get("blockId", changed[0]))
            emit_idx += 1

        for bid in changed:
            self._after_content_change(bid, cause, op)

    def _gate_auto_edit(self, link: MechanismLink, cause: dict) -> bool:
        """Deterministic acceptance of a propagation result op."""
        kind = cause.get("causeKind")
        demand_epoch = int(cause.get("demandEpoch", 0))
        if demand_epoch != link.epoch + 1:
            return False  # superseded or duplicated job result
        if kind == "sync-propagate":
            return link.kind == linkmod.LINK and link.state in (
                "active", "propagating", "unlinked",
            )
        if kind == "refer":
            return link.kind == linkmod.REFER and link.state == "created"
        if kind == "request-resolve":
            return link.kind == linkmod.REQUEST and link.state in ("pending", "resolved")
        if kind == "share-accept":
            return link.kind == linkmod.SHARE and link.state == "accepted"
        return False

    def _settle_auto_edit(self, link: MechanismLink, cause: dict) -> None:
        kind = cause.get("causeKind")
        link.epoch = int(cause.get("demandEpoch", link.epoch + 1))
        link.last_origin = cause.get("origin")
        key = job_key(_JOB_KEY_BY_CAUSE[kind], link.id)
        self.jobs.pop(key, None)
        if kind == "sync-propagate" and link.state == "propagating":
            transition(link, "active")
            self._wiki_links_changed(link)
        elif kind == "refer":
            transition(link, "resolved")
            self._wiki_links_changed(link)
        elif kind == "share-accept":
            transition(link, "applied")
            self._wiki_links_changed(link)

    def _apply_create_anchor(self, op: SyncOp) -> None:
        p = op.payload
        aid = p["anchorId"]
        if aid in self.anchors:
            return
        block = self._live_block(p.get("blockId"))
        if block is None:
            return
        n = block.body.visible_len()
        start = min(max(0, int(p["start"])), n)
        end = min(max(start, int(p["end"])), n)
        a = Anchor(
            id=aid,
            block_id=block.id,
            start=start,
            end=end,
            snapshot=p.get("snapshot", ""),
            owner=self._op_actor(op),
            whole_section=bool(p.get("wholeSection")),
        )
        refresh_anchor_status(a, block)
        self.anchors[aid] = a

    def _apply_exec_result(self, op: SyncOp) -> None:
        p = op.payload
        if self._live_block(p.get("blockId")) is None:
            return
        self.exec_results[p["blockId"]] = {
            "status": p.get("status"),
            "stdout": p.get("stdout", ""),
            "stderr": p.get("stderr", ""),
            "valueRepr": p.get("valueRepr"),
            "durationMs": p.get("durationMs", 0),
            "executedVersionNo": p.get("executedVersionNo", 0),
        }

    # -- link events ----------------------------------------------------------

    def _apply_link_event(self, op: SyncOp) -> None:
        p = op.payload
        event = p.get("event")
        if event == "create":
            self._link_create(op)
            return
        if event == "resolve-message":
            m = self.messages.get(p.get("messageId") or "")
            if m is not None:
                m.processed = True
            return
        if event == "regenerate":
            b = self._live_block(p.get("blockId"))
            if b is not None and b.kind == PROMPT:
                key = job_key(REGENERATE, None, b.id)
                self.jobs[key] = PropagationJob(
                    key, REGENERATE, None, b.id, op.op_id, 0, op.lamport,
                    requester=self._op_actor(op),
                )
            return
        if event == "prompt-from-code":
            b = self._live_block(p.get("blockId"))
            if b is not None and b.kind == CODE and not b.source_prompt_id:
                key = job_key(linkmod.PROMPT_FROM_CODE, None, b.id)
                self.jobs[key] = PropagationJob(
                    key, linkmod.PROMPT_FROM_CODE, None, b.id, op.op_id, 0, op.lamport,
                    requester=self._op_actor(op),
                )
            return
        link = self.links.get(p.get("linkId") or "")
        if link is None:
            logger.warning("dropping link event for unknown link %s", op.op_id)
            return
        if event == "accept-share":
            self._share_accept(op, link)
        elif event == "decline-share":
            if link.kind == linkmod.SHARE and transition(link, "declined"):
                self._process_messages(link.id, actionlog.SHARE_OFFERED)
                self._emit(op, 0, actionlog.SHARE_DECLINED, self._op_actor(op), link_id=link.id)
                self._wiki_links_changed(link)
        elif event == "unlink":
            if link.kind == linkmod.LINK and transition(link, "unlinked"):
                link.resolved_at = op.lamport
                self.jobs.pop(job_key(LINK_PROPAGATE, link.id), None)
                self._emit(op, 0, actionlog.UNLINKED, self._op_actor(op), link_id=link.id)
                sb, tb = self._anchor_blocks(link)
                for bid in (sb, tb):
                    if self._live_block(bid) is not None and self.blocks[bid].kind in (PROMPT, CODE):
                        self._record(bid, history.UNLINK_AUDIT, self._op_actor(op), link.id, op)
                self._wiki_links_changed(link)
        elif event == "cancel-request":
            if link.kind == linkmod.REQUEST and transition(link, "cancelled"):
                link.resolved_at = op.lamport
                self.jobs.pop(job_key(REQUEST_CHECK, link.id), None)
                self._process_messages(link.id, actionlog.REQUEST_PENDING)
                self._emit(op, 0, actionlog.REQUEST_CANCELLED, self._op_actor(op), link_id=link.id)
                self._wiki_links_changed(link)
        elif event == "resolve-request":
            if link.kind == linkmod.REQUEST and transition(link, "resolved"):
                link.resolved_at = op.lamport
                self.jobs.pop(job_key(REQUEST_CHECK, link.id), None)
                self._process_messages(link.id, actionlog.REQUEST_PENDING)
                self._emit(op, 0, actionlog.REQUEST_RESOLVED, op.actor, link_id=link.id)
                self._wiki_links_changed(link)
        elif event == "noop-audit":
            self._noop_audit(op, link)
        elif event == "generation-failed":
            self._generation_failed(op, link)
        else:
            logger.warning("dropping unknown link event %r", event)

    def _link_create(self, op: SyncOp) -> None:
        p = op.payload
        link_id = p["linkId"]
        if link_id in self.links:
            return
        kind = p.get("kind")
        sa = self.anchors.get(p.get("source") or "")
        ta = self.anchors.get(p.get("target") or "")
        if kind not in linkmod.KINDS or sa is None or ta is None:
            return
        if ORPHANED in (sa.status, ta.status) or sa.id == ta.id:
            return
        sb = self._live_block(sa.block_id)
        tb = self._live_block(ta.block_id)
        if sb is None or tb is None:
            return
        if kind == linkmod.LINK and (sa.block_id == ta.block_id or sb.kind != PROMPT or tb.kind != PROMPT):
            return
        if kind == linkmod.REFER and tb.kind != PROMPT:
            return
        if kind in (linkmod.SHARE, linkmod.REQUEST) and tb.kind not in (PROMPT, HEADING):
            return

        link = MechanismLink(
            id=link_id,
            kind=kind,
            source=sa.id,
            target=ta.id,
            message=p.get("message"),
            creator=self._op_actor(op),
            state=linkmod.INITIAL_STATE[kind],
            created_at=op.lamport,
        )
        self.links[link_id] = link

        if kind == linkmod.REQUEST:
            self._emit(op, 0, actionlog.REQUEST_PENDING, self._op_actor(op),
                       link_id=link_id, block_id=ta.block_id)
            key = job_key(REQUEST_CHECK, link_id)
            self.jobs[key] = PropagationJob(
                key, REQUEST_CHECK, link_id, ta.block_id, op.op_id, 1, op.lamport
            )
        elif kind == linkmod.SHARE:
            self._emit(op, 0, actionlog.SHARE_OFFERED, self._op_actor(op),
                       link_id=link_id, block_id=ta.block_id)
        else:
            self._emit(op, 0, actionlog.LINK_CREATED, self._op_actor(op),
                       link_id=link_id, block_id=sa.block_id)
            if kind == linkmod.REFER:
                key = job_key(REFER_FIRE, link_id)
                self.jobs[key] = PropagationJob(
                    key, REFER_FIRE, link_id, sa.block_id, op.op_id, 1, op.lamport
                )
        self._wiki_links_changed(link)

    def share_recipient(self, link: MechanismLink) -> str | None:
        ta = self.anchors.get(link.target)
        tb = self._live_block(ta.block_id) if ta is not None else None
        return tb.created_by if tb is not None else None

    def _share_accept(self, op: SyncOp, link: MechanismLink) -> None:
        if link.kind != linkmod.SHARE or link.state != "pending":
            return
        if self.share_recipient(link) != self._op_actor(op):
            return
        transition(link, "accepted")
        self._process_messages(link.id, actionlog.SHARE_OFFERED)
        self._emit(op, 0, actionlog.SHARE_ACCEPTED, self._op_actor(op), link_id=link.id)
        self._wiki_links_changed(link)
        ta = self.anchors[link.target]
        tb = self._live_block(ta.block_id)
        if tb is None:
            return
        if tb.kind == HEADING:
            prompts = [
                bid for bid in self.section_block_ids(tb.id)
                if self.blocks[bid].kind == PROMPT and not self.blocks[bid].deleted
            ]
            if not prompts:
                self.parked_shares.setdefault(tb.id, []).append((link.id, op.op_id))
                return
            target = prompts[0]
        else:
            target = tb.id
        key = job_key(SHARE_APPLY, link.id)
        self.jobs[key] = PropagationJob(
            key, SHARE_APPLY, link.id, target, op.op_id, link.epoch + 1, op.lamport
        )

    def _noop_audit(self, op: SyncOp, link: MechanismLink) -> None:
        p = op.payload
        if link.kind != linkmod.LINK or int(p.get("demandEpoch", 0)) != link.epoch + 1:
            return
        link.epoch += 1
        link.last_origin = p.get("origin")
        self.jobs.pop(job_key(LINK_PROPAGATE, link.id), None)
        if link.state == "propagating":
            transition(link, "active")
            self._wiki_links_changed(link)
        target = p.get("targetBlock")
        if self._live_block(target) is not None and self.blocks[target].kind in (PROMPT, CODE):
            self._record(target, history.NOOP_AUDIT, op.actor, link.id, op)

    def _generation_failed(self, op: SyncOp, link: MechanismLink) -> None:
        p = op.payload
        key = p.get("jobKey")
        if key:
            self.jobs.pop(key, None)
        if link.kind == linkmod.REFER and link.state == "created":
            transition(link, "failed")
            link.resolved_at = op.lamport
        elif link.kind == linkmod.LINK and link.state == "propagating":
            transition(link, "active")
        self._emit(op, 0, actionlog.GENERATION_FAILED, op.actor, link_id=link.id)
        self._wiki_links_changed(link)

    # -- persistence ------------------------------------------------------------

    def dump_full(self) -> dict:
        return {
            "blocks": [
                {
                    "id": b.id,
                    "kind": b.kind,
                    "level": b.level,
                    "pos": b.pos,
                    "createdBy": b.created_by,
                    "authorLast": b.author_last,
                    "createdAt": b.created_at,
                    "updatedAt": b.updated_at,
                    "sourcePromptId": b.source_prompt_id,
                    "deleted": b.deleted,
                    "body": b.body.dump(),
                }
                for b in self.blocks.values()
            ],
            "anchors": [a.__dict__.copy() for a in self.anchors.values()],
            "links": [l.to_obj() for l in self.links.values()],
            "history": {k: [r.to_obj() for r in v] for k, v in self.history.items()},
            "messages": [m.to_obj() for m in self.messages.values()],
            "msgSeq": self.msg_seq,
            "jobs": [j.to_obj() for j in self.jobs.values()],
            "parkedShares": {k: [list(e) for e in v] for k, v in self.parked_shares.items()},
            "execResults": self.exec_results,
            "applied": self.applied,
        }

    @classmethod
    def load_full(cls, obj: dict) -> "DocState":
        s = cls()
        for bo in obj["blocks"]:
            s.blocks[bo["id"]] = Block(
                id=bo["id"],
                kind=bo["kind"],
                level=bo["level"],
                pos=bo["pos"],
                created_by=bo["createdBy"],
                author_last=bo["authorLast"],
                created_at=bo["createdAt"],
                updated_at=bo["updatedAt"],
                source_prompt_id=bo["sourcePromptId"],
                deleted=bo["deleted"],
                body=TextCore.load(bo["body"]),
            )
        for ao in obj["anchors"]:
            s.anchors[ao["id"]] = Anchor(**ao)
        for lo in obj["links"]:
            s.links[lo["id"]] = MechanismLink(
                id=lo["id"],
                kind=lo["kind"],
                source=lo["source"],
                target=lo["target"],
                message=lo["message"],
                creator=lo["creator"],
                state=lo["state"],
                created_at=lo["createdAt"],
                resolved_at=lo["resolvedAt"],
                epoch=lo["epoch"],
                last_origin=lo["lastOrigin"],
            )
        for bid, recs in obj["history"].items():
            s.history[bid] = [VersionRecord.from_obj(r) for r in recs]
        for mo in obj["messages"]:
            s.messages[mo["id"]] = ActionMessage(
                id=mo["id"],
                action_type=mo["actionType"],
                actor=mo["actor"],
                link_id=mo["linkId"],
                block_id=mo["blockId"],
                lamport=mo["lamport"],
                seq=mo["seq"],
                processed=mo["processed"],
            )
        s.msg_seq = obj["msgSeq"]
        for jo in obj["jobs"]:
            s.jobs[jo["key"]] = PropagationJob(
                key=jo["key"],
                kind=jo["kind"],
                link_id=jo["linkId"],
                target_block=jo["targetBlock"],
                origin=jo["origin"],
                demand_epoch=jo["demandEpoch"],
                lamport=jo["lamport"],
            )
        s.parked_shares = {
            k: [tuple(e) for e in v] for k, v in obj["parkedShares"].items()
        }
        s.exec_results = {k: dict(v) for k, v in obj["execResults"].items()}
        s.applied = dict(obj["applied"])
        s.wiki.rebuild(s.blocks, s.anchors, s.links)
        return s


def scratch_wiki(state: DocState):
    return derive_wiki(state.blocks, state.anchors, state.links)
