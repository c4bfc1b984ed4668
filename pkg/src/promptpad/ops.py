"""Replication operations and the canonical serialization used everywhere.

Every mutation is a SyncOp keyed (actor, seq) with a Lamport stamp. Replicas
fold ops in the total order (lamport, actor, seq) — a deterministic linear
extension of causality — so all derived state (links, history, panels) is a
pure function of the op set.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

INSERT_BLOCK = "insert-block"
DELETE_BLOCK = "delete-block"
TEXT_EDIT = "text-edit"
CREATE_ANCHOR = "create-anchor"
LINK_EVENT = "link-event"
EXEC_RESULT = "exec-result"
PRESENCE = "presence"

OP_KINDS = (
    INSERT_BLOCK,
    DELETE_BLOCK,
    TEXT_EDIT,
    CREATE_ANCHOR,
    LINK_EVENT,
    EXEC_RESULT,
    PRESENCE,
)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SyncOp:
    actor: str
    seq: int
    lamport: int
    kind: str
    payload: dict = field(compare=False)
    # version vector of causal context: all ops of `a` up to seq `s`
    deps: tuple = ()

    @property
    def op_id(self) -> str:
        return f"{self.actor}:{self.seq}"

    @property
    def sort_key(self):
        return (self.lamport, self.actor, self.seq)

    def to_obj(self) -> dict:
        return {
            "actor": self.actor,
            "seq": self.seq,
            "lamport": self.lamport,
            "kind": self.kind,
            "payload": self.payload,
            "deps": [[a, s] for a, s in self.deps],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "SyncOp":
        if obj["kind"] not in OP_KINDS:
            raise ValueError(f"unknown op kind: {obj['kind']!r}")
        return cls(
            actor=obj["actor"],
            seq=int(obj["seq"]),
            lamport=int(obj["lamport"]),
            kind=obj["kind"],
            payload=obj["payload"],
            deps=tuple((a, int(s)) for a, s in obj.get("deps", ())),
        )


def parse_op_id(op_id: str) -> tuple[str, int]:
    actor, _, seq = op_id.rpartition(":")
    return actor, int(seq)
