"""Message panel backend: one message per action, processed/unprocessed.

Messages are derived from the replicated op stream by every replica, so all
collaborators see the same panel. Canonical ordering puts unprocessed
messages first, newest first within each group.
"""

from __future__ import annotations

from dataclasses import dataclass

LINK_CREATED = "link-created"
REQUEST_PENDING = "request-pending"
REQUEST_RESOLVED = "request-resolved"
REQUEST_CANCELLED = "request-cancelled"
SHARE_OFFERED = "share-offered"
SHARE_ACCEPTED = "share-accepted"
SHARE_DECLINED = "share-declined"
AUTO_UPDATED = "auto-updated"
GENERATION_FAILED = "generation-failed"
UNLINKED = "unlinked"
ROLLBACK = "rollback"

ACTION_TYPES = (
    LINK_CREATED,
    REQUEST_PENDING,
    REQUEST_RESOLVED,
    REQUEST_CANCELLED,
    SHARE_OFFERED,
    SHARE_ACCEPTED,
    SHARE_DECLINED,
    AUTO_UPDATED,
    GENERATION_FAILED,
    UNLINKED,
    ROLLBACK,
)

# message types that demand attention: they stay unprocessed until their
# action resolves (or the user acknowledges them)
ATTENTION_TYPES = {REQUEST_PENDING, SHARE_OFFERED, AUTO_UPDATED, GENERATION_FAILED}


class UnknownMessage(Exception):
    pass


@dataclass
class ActionMessage:
    id: str
    action_type: str
    actor: str
    link_id: str | None
    block_id: str | None
    lamport: int
    seq: int  # emission index, unique per document
    processed: bool

    def clone(self) -> "ActionMessage":
        return ActionMessage(**self.__dict__)

    def to_obj(self) -> dict:
        return {
            "id": self.id,
            "actionType": self.action_type,
            "actor": self.actor,
            "linkId": self.link_id,
            "blockId": self.block_id,
            "lamport": self.lamport,
            "seq": self.seq,
            "processed": self.processed,
        }


def canonical_order(messages) -> list[ActionMessage]:
    """Unprocessed first; chronologically newest first within each group."""
    return sorted(messages, key=lambda m: (m.processed, -m.lamport, -m.seq))


def list_for(
    messages,
    link_id: str | None = None,
    block_id: str | None = None,
    action_type: str | None = None,
) -> list[ActionMessage]:
    out = [
        m
        for m in messages
        if (link_id is None or m.link_id == link_id)
        and (block_id is None or m.block_id == block_id)
        and (action_type is None or m.action_type == action_type)
    ]
    return canonical_order(out)
