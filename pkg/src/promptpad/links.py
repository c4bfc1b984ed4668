"""The four cross-prompt mechanisms as lifecycle state machines.

Refer:   created -> resolved | failed           (one-shot regeneration)
Request: pending -> resolved | cancelled        (detector-driven)
Share:   pending -> accepted -> applied,
         pending -> declined                    (recipient decides)
Link:    active <-> propagating, -> unlinked    (bidirectional sync)

Reducers never perform an illegal transition: an event that is not legal in
the current state is dropped. Loop suppression is origin-scoped: every
propagation cascade carries the op id of the manual change that started it,
and a link fires at most once per origin, which bounds auto-edits per manual
edit by the number of active links even on cyclic graphs.
"""

from __future__ import annotations

from dataclasses import dataclass

REFER = "refer"
REQUEST = "request"
SHARE = "share"
LINK = "link"
KINDS = (REFER, REQUEST, SHARE, LINK)

INITIAL_STATE = {
    REFER: "created",
    REQUEST: "pending",
    SHARE: "pending",
    LINK: "active",
}

LEGAL_TRANSITIONS = {
    (REFER, "created", "resolved"),
    (REFER, "created", "failed"),
    (REQUEST, "pending", "resolved"),
    (REQUEST, "pending", "cancelled"),
    (SHARE, "pending", "accepted"),
    (SHARE, "pending", "declined"),
    (SHARE, "accepted", "applied"),
    (LINK, "active", "propagating"),
    (LINK, "propagating", "active"),
    (LINK, "active", "unlinked"),
    (LINK, "propagating", "unlinked"),
}

TERMINAL_STATES = {"resolved", "failed", "cancelled", "declined", "applied", "unlinked"}

# states in which a Link-kind edge still propagates
LIVE_LINK_STATES = ("active", "propagating")


class LinkError(Exception):
    pass


class OrphanedAnchor(LinkError):
    pass


class SelfLink(LinkError):
    pass


class InvalidTarget(LinkError):
    pass


class WrongKind(LinkError):
    pass


class NotRecipient(LinkError):
    pass


class AlreadyDecided(LinkError):
    pass


class UnknownLink(LinkError):
    pass


@dataclass
class MechanismLink:
    id: str
    kind: str
    source: str  # anchor id
    target: str  # anchor id
    message: str | None
    creator: str
    state: str
    created_at: int
    resolved_at: int | None = None
    epoch: int = 0
    last_origin: str | None = None

    def clone(self) -> "MechanismLink":
        return MechanismLink(**self.__dict__)

    def to_obj(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "source": self.source,
            "target": self.target,
            "message": self.message,
            "creator": self.creator,
            "state": self.state,
            "createdAt": self.created_at,
            "resolvedAt": self.resolved_at,
            "epoch": self.epoch,
            "lastOrigin": self.last_origin,
        }


def transition(link: MechanismLink, new_state: str) -> bool:
    """Apply a lifecycle transition if legal; returns whether it applied."""
    if (link.kind, link.state, new_state) not in LEGAL_TRANSITIONS:
        return False
    link.state = new_state
    return True


# -- propagation jobs -------------------------------------------------------

LINK_PROPAGATE = "link-propagate"
REFER_FIRE = "refer-fire"
REQUEST_CHECK = "request-check"
SHARE_APPLY = "share-apply"
REGENERATE = "regenerate"
PROMPT_FROM_CODE = "prompt-from-code"


@dataclass(frozen=True)
class PropagationJob:
    key: str
    kind: str
    link_id: str | None
    target_block: str
    origin: str  # op id of the manual change driving this cascade
    demand_epoch: int
    lamport: int
    requester: str = ""  # acting user behind explicit regeneration demands

    def to_obj(self) -> dict:
        return {
            "key": self.key,
            "kind": self.kind,
            "linkId": self.link_id,
            "targetBlock": self.target_block,
            "origin": self.origin,
            "demandEpoch": self.demand_epoch,
            "lamport": self.lamport,
            "requester": self.requester,
        }


def job_key(kind: str, link_id: str | None, block_id: str | None = None) -> str:
    """Coalescing identity: one outstanding job per link (or per block)."""
    if link_id is not None:
        return f"{kind}:{link_id}"
    return f"{kind}@{block_id}"
