"""A document replica: op log, causal delivery, refold, and local intents.

The log is kept sorted by the global total order (lamport, actor, seq).
Ops arriving out of order are handled by restoring the nearest checkpoint
and refolding, so the folded DocState is always the fold of the sorted log
prefix — which is what makes replicas with equal op sets byte-identical.

Local mutations validate against current state, then mint ops that apply
locally and queue in the outbox for the transport to pick up.
"""

from __future__ import annotations

from bisect import bisect_left

from . import actionlog
from .document import (
    CODE,
    HEADING,
    PROMPT,
    Block,
    EmptySpanOnNonHeading,
    RangeOutOfBounds,
    UnknownBlock,
    UnknownVersion,
    check_range_edits,
)
from .links import (
    KINDS,
    LINK,
    REFER,
    REQUEST,
    SHARE,
    AlreadyDecided,
    InvalidTarget,
    NotRecipient,
    OrphanedAnchor,
    SelfLink,
    UnknownLink,
    WrongKind,
)
from .actionlog import UnknownMessage
from .ops import (
    CREATE_ANCHOR,
    DELETE_BLOCK,
    EXEC_RESULT,
    INSERT_BLOCK,
    LINK_EVENT,
    PRESENCE,
    SyncOp,
    TEXT_EDIT,
)
from .positions import key_between
from .state import DocState
from .textcore import alloc_run, encode_run


def id_to_obj(elem_id):
    return [list(t) for t in elem_id]


def minimal_replace_edits(old: str, new: str) -> list[tuple[int, int, str]]:
    """Single middle splice covering the difference (common affixes kept).

    Keeping the unchanged affixes intact preserves anchors outside the
    changed region across propagation rewrites.
    """
    if old == new:
        return []
    p = 0
    limit = min(len(old), len(new))
    while p < limit and old[p] == new[p]:
        p += 1
    s = 0
    while s < limit - p and old[len(old) - 1 - s] == new[len(new) - 1 - s]:
        s += 1
    return [(p, len(old) - s, new[p : len(new) - s])]


class Replica:
    def __init__(self, doc_id: str, actor: str, checkpoint_every: int = 16):
        self.doc_id = doc_id
        self.actor = actor
        self.state = DocState()
        self.log: list[SyncOp] = []
        self._keys: list[tuple] = []
        self.known: set[tuple[str, int]] = set()
        self.buffered: dict[tuple[str, int], SyncOp] = {}
        self.clock = 0
        self.seq = 0
        self.char_ctr = 0
        self.vv: dict[str, int] = {}
        self.checkpoint_every = checkpoint_every
        self.checkpoints: list[tuple[int, DocState]] = [(0, DocState())]
        self.presence: dict[str, dict] = {}
        self.outbox: list[SyncOp] = []
        # set while materializing a thin client's intent: ops carry the
        # acting user so attribution and recipient checks stay theirs
        self.on_behalf_of: str | None = None

    def _acting(self) -> str:
        return self.on_behalf_of or self.actor

    # -- sync ----------------------------------------------------------------

    def frontier(self) -> dict[str, int]:
        return dict(self.vv)

    def ops_since(self, frontier: dict[str, int]) -> list[SyncOp]:
        return [op for op in self.log if op.seq > frontier.get(op.actor, 0)]

    def take_outbox(self) -> list[SyncOp]:
        out = self.outbox
        self.outbox = []
        return out

    def integrate(self, ops) -> list[SyncOp]:
        """Buffer, order, and fold remote ops; returns the newly applied ones."""
        for op in ops:
            if op.kind == PRESENCE:
                self.presence[op.actor] = dict(op.payload)
                continue
            key = (op.actor, op.seq)
            if key in self.known or key in self.buffered:
                continue
            self.buffered[key] = op

        ready: list[SyncOp] = []
        tmp = dict(self.vv)
        progress = True
        while progress:
            progress = False
            for key in list(self.buffered):
                op = self.buffered[key]
                if tmp.get(op.actor, 0) == op.seq - 1 and all(
                    tmp.get(a, 0) >= s for a, s in op.deps
                ):
                    ready.append(op)
                    tmp[op.actor] = op.seq
                    del self.buffered[key]
                    progress = True
        if not ready:
            return []
        ready.sort(key=lambda o: o.sort_key)
        self._insert_batch(ready)
        return ready

    def _insert_batch(self, ops: list[SyncOp]) -> None:
        first_key = ops[0].sort_key
        if not self._keys or first_key > self._keys[-1]:
            for op in ops:
                self._apply_tail(op)
            return
        # out-of-order: merge into the log and refold from a checkpoint
        merged: list[SyncOp] = []
        i = j = 0
        while i < len(self.log) and j < len(ops):
            if self.log[i].sort_key <= ops[j].sort_key:
                merged.append(self.log[i])
                i += 1
            else:
                merged.append(ops[j])
                j += 1
        merged.extend(self.log[i:])
        merged.extend(ops[j:])
        pos = bisect_left(self._keys, first_key)
        ck_idx, ck_state = self.checkpoints[0]
        for idx, st in self.checkpoints:
            if idx <= pos and idx >= ck_idx:
                ck_idx, ck_state = idx, st
        self.checkpoints = [(i_, s_) for i_, s_ in self.checkpoints if i_ <= ck_idx]
        self.log = []
        self._keys = []
        self.state = ck_state.clone()
        self.vv = dict(self.state.applied)
        # replay prefix bookkeeping without re-applying
        for op in merged[:ck_idx]:
            self.log.append(op)
            self._keys.append(op.sort_key)
        for op in merged[ck_idx:]:
            self._apply_tail(op)

    def _apply_tail(self, op: SyncOp) -> None:
        self.clock = max(self.clock, op.lamport)
        self.log.append(op)
        self._keys.append(op.sort_key)
        self.known.add((op.actor, op.seq))
        self.state.apply(op)
        self.vv[op.actor] = max(self.vv.get(op.actor, 0), op.seq)
        if len(self.log) % self.checkpoint_every == 0:
            self.checkpoints.append((len(self.log), self.state.clone()))
            if len(self.checkpoints) > 9:
                del self.checkpoints[1]  # keep genesis, trim the oldest middle

    def _mint(self, kind: str, payload: dict) -> SyncOp:
        if self.on_behalf_of is not None:
            payload = dict(payload)
            payload["onBehalfOf"] = self.on_behalf_of
        self.clock += 1
        self.seq += 1
        deps = tuple(sorted((a, s) for a, s in self.vv.items() if a != self.actor))
        op = SyncOp(self.actor, self.seq, self.clock, kind, payload, deps)
        self._apply_tail(op)
        self.outbox.append(op)
        return op

    def _next_id(self) -> str:
        return f"{self.actor}:{self.seq + 1}"

    @staticmethod
    def _next_distinct_pos(order, idx, left_pos):
        """First position key strictly greater than left_pos, or None.

        Concurrent inserts into one gap can collide on the key (ties break
        by block id), and no key fits strictly between two equal keys — so
        an insert lands after the whole equal-key run instead.
        """
        for j in range(idx + 1, len(order)):
            if order[j].pos > left_pos:
                return order[j].pos
        return None

    # -- document intents ------------------------------------------------------

    def _live_block(self, block_id: str) -> Block:
        b = self.state.blocks.get(block_id)
        if b is None or b.deleted:
            raise UnknownBlock(block_id)
        return b

    def insert_block(
        self,
        kind: str,
        content: str = "",
        after_block_id: str | None = None,
        before_block_id: str | None = None,
        level: int = 1,
        source_prompt_id: str | None = None,
        cause: dict | None = None,
        adopt_code_block_id: str | None = None,
    ) -> str:
        order = self.state.order()
        if after_block_id is not None:
            anchor_block = self._live_block(after_block_id)
            idx = next(i for i, b in enumerate(order) if b.id == anchor_block.id)
            left = order[idx].pos
            right = self._next_distinct_pos(order, idx, left)
        elif before_block_id is not None:
            anchor_block = self._live_block(before_block_id)
            idx = next(i for i, b in enumerate(order) if b.id == anchor_block.id)
            right = order[idx].pos
            left = None
            for j in range(idx - 1, -1, -1):
                if order[j].pos < right:
                    left = order[j].pos
                    break
        else:
            left = order[-1].pos if order else None
            right = None
        pos = key_between(left, right)
        block_id = self._next_id()
        run = None
        if content:
            ids = alloc_run(None, None, len(content), self.actor, self.char_ctr)
            self.char_ctr += len(content)
            run = encode_run(ids, content)
        payload = {
            "blockId": block_id,
            "kind": kind,
            "level": level,
            "pos": pos,
            "run": run,
            "sourcePromptId": source_prompt_id,
            "adoptCodeBlockId": adopt_code_block_id,
            "cause": cause,
        }
        self._mint(INSERT_BLOCK, payload)
        return block_id

    def delete_block(self, block_id: str) -> None:
        self._live_block(block_id)
        self._mint(DELETE_BLOCK, {"blockId": block_id})

    def _make_parts(self, block: Block, range_edits) -> list[dict]:
        vis = block.body.visible_full_indices()
        parts = []
        for start, end, text in sorted(range_edits, key=lambda r: (-r[0], -r[1])):
            dels = [id_to_obj(block.body.id_at_full(vis[i])) for i in range(start, end)]
            ins = None
            if text:
                left_full = vis[start - 1] if start > 0 else -1
                left, right = block.body.neighbor_ids(left_full)
                ids = alloc_run(left, right, len(text), self.actor, self.char_ctr)
                self.char_ctr += len(text)
                ins = encode_run(ids, text)
            parts.append({"del": dels, "ins": ins})
        return parts

    def edit_block_text(self, block_id: str, range_edits, cause: dict | None = None) -> str:
        block = self._live_block(block_id)
        check_range_edits(block.body.visible_len(), range_edits)
        parts = self._make_parts(block, range_edits)
        self._mint(
            TEXT_EDIT,
            {"edits": [{"blockId": block_id, "parts": parts}], "cause": cause},
        )
        return self.state.blocks[block_id].content

    def create_anchor(self, block_id: str, start: int, end: int) -> str:
        block = self._live_block(block_id)
        n = block.body.visible_len()
        if not (0 <= start <= end <= n):
            raise RangeOutOfBounds(f"span [{start},{end}) on length {n}")
        if start == end and block.kind != HEADING:
            raise EmptySpanOnNonHeading(block_id)
        anchor_id = self._next_id()
        self._mint(
            CREATE_ANCHOR,
            {
                "anchorId": anchor_id,
                "blockId": block_id,
                "start": start,
                "end": end,
                "snapshot": block.content[start:end],
                "wholeSection": block.kind == HEADING and start == end,
            },
        )
        return anchor_id

    # -- link intents -----------------------------------------------------------

    def _anchor(self, anchor_id: str):
        a = self.state.anchors.get(anchor_id)
        if a is None:
            raise UnknownLink(f"unknown anchor {anchor_id}")
        return a

    def create_link(self, kind: str, source_anchor: str, target_anchor: str,
                    message: str | None = None) -> str:
        if kind not in KINDS:
            raise WrongKind(kind)
        sa = self._anchor(source_anchor)
        ta = self._anchor(target_anchor)
        if "orphaned" in (sa.status, ta.status):
            raise OrphanedAnchor(f"{source_anchor}/{target_anchor}")
        if sa.id == ta.id:
            raise SelfLink(sa.id)
        sb = self._live_block(sa.block_id)
        tb = self._live_block(ta.block_id)
        if kind == LINK:
            if sa.block_id == ta.block_id:
                raise SelfLink(sa.block_id)
            if sb.kind != PROMPT or tb.kind != PROMPT:
                raise InvalidTarget("link endpoints must be prompt blocks")
        if kind == REFER and tb.kind != PROMPT:
            raise InvalidTarget("refer target must be a prompt block")
        if kind in (SHARE, REQUEST) and tb.kind not in (PROMPT, HEADING):
            raise InvalidTarget(f"{kind} target must be a prompt or heading")
        link_id = self._next_id()
        self._mint(
            LINK_EVENT,
            {
                "event": "create",
                "linkId": link_id,
                "kind": kind,
                "source": source_anchor,
                "target": target_anchor,
                "message": message,
            },
        )
        return link_id

    def _link(self, link_id: str):
        link = self.state.links.get(link_id)
        if link is None:
            raise UnknownLink(link_id)
        return link

    def accept_share(self, link_id: str) -> None:
        link = self._link(link_id)
        if link.kind != SHARE:
            raise WrongKind(link.kind)
        if link.state != "pending":
            raise AlreadyDecided(link.state)
        if self.state.share_recipient(link) != self._acting():
            raise NotRecipient(self._acting())
        self._mint(LINK_EVENT, {"event": "accept-share", "linkId": link_id})

    def decline_share(self, link_id: str) -> None:
        link = self._link(link_id)
        if link.kind != SHARE:
            raise WrongKind(link.kind)
        if link.state != "pending":
            raise AlreadyDecided(link.state)
        if self.state.share_recipient(link) != self._acting():
            raise NotRecipient(self._acting())
        self._mint(LINK_EVENT, {"event": "decline-share", "linkId": link_id})

    def unlink(self, link_id: str) -> None:
        link = self._link(link_id)
        if link.kind != LINK:
            raise WrongKind(link.kind)
        if link.state not in ("active", "propagating"):
            raise AlreadyDecided(link.state)
        self._mint(LINK_EVENT, {"event": "unlink", "linkId": link_id})

    def cancel_request(self, link_id: str) -> None:
        link = self._link(link_id)
        if link.kind != REQUEST:
            raise WrongKind(link.kind)
        if link.state != "pending":
            raise AlreadyDecided(link.state)
        self._mint(LINK_EVENT, {"event": "cancel-request", "linkId": link_id})

    def resolve_message(self, message_id: str) -> None:
        if message_id not in self.state.messages:
            raise UnknownMessage(message_id)
        self._mint(LINK_EVENT, {"event": "resolve-message", "messageId": message_id})

    def request_regenerate(self, block_id: str) -> None:
        block = self._live_block(block_id)
        if block.kind != PROMPT:
            raise WrongKind(f"regenerate needs a prompt block, got {block.kind}")
        self._mint(LINK_EVENT, {"event": "regenerate", "blockId": block_id})

    def request_prompt_from_code(self, block_id: str) -> None:
        block = self._live_block(block_id)
        if block.kind != CODE:
            raise WrongKind(f"prompt-from-code needs a code block, got {block.kind}")
        self._mint(LINK_EVENT, {"event": "prompt-from-code", "blockId": block_id})

    # -- history intents ----------------------------------------------------------

    def rollback(self, block_id: str, to_version: int) -> SyncOp | None:
        block = self._live_block(block_id)
        chain = self.state.history.get(block_id, [])
        if not (1 <= to_version <= len(chain)):
            raise UnknownVersion(f"{block_id}@{to_version}")
        rec = chain[to_version - 1]
        edits = []
        own_text = rec.prompt_text if block.kind == PROMPT else rec.code_text
        if block.content != own_text:
            edits.append(
                {
                    "blockId": block_id,
                    "parts": self._make_parts(
                        block, minimal_replace_edits(block.content, own_text)
                    ),
                }
            )
        if block.kind == PROMPT:
            code = self.state.code_block_of(block_id)
            if code is not None and code.content != rec.code_text:
                edits.append(
                    {
                        "blockId": code.id,
                        "parts": self._make_parts(
                            code, minimal_replace_edits(code.content, rec.code_text)
                        ),
                    }
                )
        if not edits:
            return None
        return self._mint(
            TEXT_EDIT,
            {
                "edits": edits,
                "cause": {"kind": "rollback", "toVersion": to_version, "blockId": block_id},
            },
        )

    # -- engine-facing mints --------------------------------------------------------

    def auto_text_edit(self, cause: dict, edits_by_block: list[tuple[str, str]]) -> SyncOp:
        """Propagation result: full content replacements per block."""
        edits = []
        for block_id, new_text in edits_by_block:
            block = self.state.blocks.get(block_id)
            if block is None or block.deleted:
                continue
            redits = minimal_replace_edits(block.content, new_text)
            edits.append(
                {"blockId": block_id, "parts": self._make_parts(block, redits)}
            )
        return self._mint(TEXT_EDIT, {"edits": edits, "cause": cause})

    def noop_audit(self, link_id: str, origin: str, demand_epoch: int, target_block: str) -> SyncOp:
        return self._mint(
            LINK_EVENT,
            {
                "event": "noop-audit",
                "linkId": link_id,
                "origin": origin,
                "demandEpoch": demand_epoch,
                "targetBlock": target_block,
            },
        )

    def resolve_request(self, link_id: str) -> SyncOp:
        return self._mint(LINK_EVENT, {"event": "resolve-request", "linkId": link_id})

    def generation_failed(self, link_id: str, job_key: str, reason: str) -> SyncOp:
        return self._mint(
            LINK_EVENT,
            {"event": "generation-failed", "linkId": link_id,
             "jobKey": job_key, "reason": reason},
        )

    def record_exec_result(self, block_id: str, result: dict) -> SyncOp:
        payload = {"blockId": block_id}
        payload.update(result)
        return self._mint(EXEC_RESULT, payload)


def catchup_bundle(replica: Replica, frontier: dict[str, int], for_actor: str) -> dict:
    """Everything a reconnecting client missed, plus its share pop-ups.

    Pop-ups are the still-pending shares addressed to the actor, in creation
    order; highlights mark blocks whose latest version the actor has not
    seen (their creating op lies beyond the actor's frontier).
    """
    state = replica.state
    ops = [op.to_obj() for op in replica.ops_since(frontier)]
    popups = []
    for link in state.links.values():
        if link.kind == SHARE and link.state == "pending":
            if state.share_recipient(link) == for_actor:
                popups.append(
                    {
                        "linkId": link.id,
                        "from": link.creator,
                        "message": link.message,
                        "createdAt": link.created_at,
                    }
                )
    highlights = []
    for block_id, chain in sorted(state.history.items()):
        head = chain[-1]
        actor, _, seq = head.op_id.rpartition(":")
        if int(seq) > frontier.get(actor, 0) and actor != for_actor:
            highlights.append(
                {
                    "blockId": block_id,
                    "versionNo": head.version_no,
                    "cause": head.cause,
                    "actor": head.actor,
                }
            )
    return {"ops": ops, "popups": popups, "highlights": highlights}
