"""The propagation scheduler: runs demanded jobs against the oracle.

Jobs live in DocState (derived deterministically by the fold); the engine
is the single host that acts on them — it generates content and re-enters
the results as ordinary ops through its replica, which consumes the job.
A request check that comes back negative emits nothing; the engine memoizes
the checked origin so only a fresh edit re-triggers the oracle.

Oracle failures retry up to `max_attempts` (the server sleeps exponential
backoff between pumps; the synchronous pump just recounts), then surface as
a generation-failed op and an unprocessed action message.
"""

from __future__ import annotations

import logging

from .document import CODE, PROMPT, anchor_text
from .genai import (
    ADD,
    EDIT,
    EXPLAIN,
    GenRequest,
    LINK_CHECK,
    OracleUnavailable,
    REQUEST_CHECK,
    assemble_context,
    tracked_identifier,
)
from .links import (
    LINK_PROPAGATE,
    PROMPT_FROM_CODE,
    PropagationJob,
    REFER_FIRE,
    REGENERATE,
    REQUEST_CHECK as JOB_REQUEST_CHECK,
    SHARE_APPLY,
)
from .ops import parse_op_id
from .replica import Replica

logger = logging.getLogger(__name__)

PUMP_GUARD = 10_000


class PropagationRunaway(Exception):
    pass


class Engine:
    def __init__(self, replica: Replica, oracle, max_attempts: int = 3,
                 backoff_base_ms: int = 50):
        self.replica = replica
        self.oracle = oracle
        self.max_attempts = max_attempts
        self.backoff_base_ms = backoff_base_ms
        self.attempts: dict[str, int] = {}
        self.negative_checks: set[tuple[str, str]] = set()
        self.auto_edit_count = 0

    # -- scheduling -------------------------------------------------------

    def _next_job(self) -> PropagationJob | None:
        for job in self.replica.state.jobs.values():
            if job.kind == JOB_REQUEST_CHECK and (job.link_id, job.origin) in self.negative_checks:
                continue
            return job
        return None

    def retry_delay_ms(self, job_key: str) -> int:
        n = self.attempts.get(job_key, 0)
        return self.backoff_base_ms * (2 ** max(0, n - 1))

    def pump(self, limit: int | None = None) -> int:
        """Run jobs to fixpoint (or `limit`); returns the number processed."""
        done = 0
        while True:
            if limit is not None and done >= limit:
                break
            job = self._next_job()
            if job is None:
                break
            self.run_job(job)
            done += 1
            if done > PUMP_GUARD:
                raise PropagationRunaway(f"{done} jobs without reaching fixpoint")
        return done

    def run_job(self, job: PropagationJob) -> None:
        handler = {
            LINK_PROPAGATE: self._run_link_propagate,
            REFER_FIRE: self._run_refer,
            JOB_REQUEST_CHECK: self._run_request_check,
            SHARE_APPLY: self._run_share_apply,
            REGENERATE: self._run_regenerate,
            PROMPT_FROM_CODE: self._run_prompt_from_code,
        }[job.kind]
        try:
            handler(job)
        except OracleUnavailable as exc:
            n = self.attempts.get(job.key, 0) + 1
            self.attempts[job.key] = n
            if n >= self.max_attempts:
                logger.warning("job %s failed after %d attempts: %s", job.key, n, exc)
                self.replica.generation_failed(job.link_id or "", job.key, str(exc))
            elif job.kind == JOB_REQUEST_CHECK:
                # re-queued, state unchanged: leave the job for the next pump
                pass

    # -- helpers ----------------------------------------------------------

    def _attribution(self, creator: str) -> str:
        return f"system via {creator}"

    def _auto_cause(self, cause_kind: str, job: PropagationJob, attribution: str) -> dict:
        return {
            "kind": "auto",
            "causeKind": cause_kind,
            "linkId": job.link_id,
            "origin": job.origin,
            "demandEpoch": job.demand_epoch,
            "attribution": attribution,
            "jobKey": job.key,
        }

    def _emit_pair(self, job: PropagationJob, cause_kind: str, attribution: str,
                   prompt_block_id: str, new_prompt: str, new_code: str) -> None:
        """Apply generated prompt/code to the pair, creating the code block
        if the prompt never had one."""
        state = self.replica.state
        cause = self._auto_cause(cause_kind, job, attribution)
        code_block = state.code_block_of(prompt_block_id)
        if code_block is None and new_code:
            self.replica.insert_block(
                kind=CODE,
                content=new_code,
                after_block_id=prompt_block_id,
                source_prompt_id=prompt_block_id,
                cause=cause,
            )
            edits = [(prompt_block_id, new_prompt)]
        else:
            edits = [(prompt_block_id, new_prompt)]
            if code_block is not None:
                edits.append((code_block.id, new_code))
        self.replica.auto_text_edit(cause, edits)
        self.auto_edit_count += 1

    # -- job handlers ------------------------------------------------------

    def _run_link_propagate(self, job: PropagationJob) -> None:
        state = self.replica.state
        link = state.links[job.link_id]
        sa = state.anchors[link.source]
        ta = state.anchors[link.target]
        edit_anchor, from_anchor = (sa, ta) if sa.block_id == job.target_block else (ta, sa)
        source_ident = tracked_identifier(state, from_anchor.id)
        target_ident = tracked_identifier(state, edit_anchor.id)
        directive = {"sourceIdent": source_ident, "targetIdent": target_ident}
        bundle = assemble_context(state, job.target_block, directive=directive)
        check = self.oracle.generate(GenRequest(LINK_CHECK, job.target_block, bundle))
        if not check.verdict:
            self.replica.noop_audit(link.id, job.origin, job.demand_epoch, job.target_block)
            return
        gen_bundle = assemble_context(
            state, job.target_block,
            directive={"substitute": [target_ident, source_ident]},
        )
        result = self.oracle.generate(GenRequest(EDIT, job.target_block, gen_bundle))
        self._emit_pair(job, "sync-propagate", self._attribution(link.creator),
                        job.target_block, result.prompt_text, result.code_text)

    def _run_refer(self, job: PropagationJob) -> None:
        state = self.replica.state
        link = state.links[job.link_id]
        bundle = assemble_context(state, job.target_block, message=link.message)
        result = self.oracle.generate(GenRequest(EDIT, job.target_block, bundle))
        self._emit_pair(job, "refer", self._attribution(link.creator),
                        job.target_block, result.prompt_text, result.code_text)

    def _run_request_check(self, job: PropagationJob) -> None:
        state = self.replica.state
        link = state.links[job.link_id]
        sa = state.anchors[link.source]
        src_block = state.blocks.get(sa.block_id)
        if src_block is None or src_block.deleted:
            self.negative_checks.add((link.id, job.origin))
            return
        expected = sa.snapshot
        bundle = assemble_context(
            state, job.target_block, message=link.message or "", expected=expected
        )
        check = self.oracle.generate(
            GenRequest(REQUEST_CHECK, job.target_block, bundle, expected=expected)
        )
        if not check.verdict:
            self.negative_checks.add((link.id, job.origin))
            return
        self.replica.resolve_request(link.id)
        # regenerate the requester's block with the fulfilled placeholder
        value = tracked_identifier(state, link.target)
        gen_bundle = assemble_context(
            state, sa.block_id, message=link.message,
            directive={"fulfilled": {"placeholder": sa.snapshot, "value": value}},
        )
        result = self.oracle.generate(GenRequest(EDIT, sa.block_id, gen_bundle))
        self._emit_pair(job, "request-resolve", self._attribution(link.creator),
                        sa.block_id, result.prompt_text, result.code_text)

    def _run_share_apply(self, job: PropagationJob) -> None:
        state = self.replica.state
        link = state.links[job.link_id]
        sa = state.anchors[link.source]
        sb = state.blocks.get(sa.block_id)
        shared = anchor_text(sa, sb) if sb is not None else ""
        bundle = assemble_context(
            state, job.target_block, message=link.message,
            directive={"shared": shared},
        )
        result = self.oracle.generate(GenRequest(EDIT, job.target_block, bundle))
        self._emit_pair(job, "share-accept", self._attribution(link.creator),
                        job.target_block, result.prompt_text, result.code_text)

    def _run_regenerate(self, job: PropagationJob) -> None:
        state = self.replica.state
        requester = job.requester or parse_op_id(job.origin)[0]
        has_code = state.code_block_of(job.target_block) is not None
        bundle = assemble_context(state, job.target_block)
        kind = EDIT if has_code else ADD
        result = self.oracle.generate(GenRequest(kind, job.target_block, bundle))
        self._emit_pair(job, "regenerate", self._attribution(requester),
                        job.target_block, result.prompt_text, result.code_text)

    def _run_prompt_from_code(self, job: PropagationJob) -> None:
        state = self.replica.state
        requester = job.requester or parse_op_id(job.origin)[0]
        code_block = state.blocks.get(job.target_block)
        cause = self._auto_cause("regenerate", job, self._attribution(requester))
        if code_block is None or code_block.deleted:
            return
        comments = [
            line.strip()[1:].strip()
            for line in code_block.content.split("\n")
            if line.strip().startswith("#")
        ]
        prompt_text = "\n".join(c for c in comments if c)
        self.replica.insert_block(
            kind=PROMPT,
            content=prompt_text,
            before_block_id=code_block.id,
            adopt_code_block_id=code_block.id,
            cause=cause,
        )

    # -- on-demand views ----------------------------------------------------

    def request_check_queue(self) -> list[str]:
        """Link ids of pending detection checks, FIFO (coalesced per link)."""
        return [
            j.link_id
            for j in self.replica.state.jobs.values()
            if j.kind == JOB_REQUEST_CHECK
        ]

    def queue_position(self, link_id: str) -> int | None:
        """0-based position of a link's pending check, None if absent."""
        queue = self.request_check_queue()
        return queue.index(link_id) if link_id in queue else None

    def explain(self, block_id: str):
        state = self.replica.state
        block = state.blocks.get(block_id)
        if block is None or block.deleted or block.kind != PROMPT:
            raise ValueError(f"explain needs a prompt block, got {block_id}")
        bundle = assemble_context(state, block_id)
        return self.oracle.generate(GenRequest(EXPLAIN, block_id, bundle))
