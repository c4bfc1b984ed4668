"""Block document model: ordered blocks, node anchors, span transforms.

Blocks hold their text in a sequence CRDT (textcore); anchors are offset
spans with a snapshot of the text they covered at creation. Anchors survive
edits by offset transformation; a span whose current text no longer equals
the snapshot is *drifted* (propagation then treats it as a whole-block
reference), and an anchor on a deleted block is *orphaned*, terminally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .textcore import TextCore

HEADING = "heading"
TEXT = "text"
PROMPT = "prompt"
CODE = "code"
BLOCK_KINDS = (HEADING, TEXT, PROMPT, CODE)

VALID = "valid"
DRIFTED = "drifted"
ORPHANED = "orphaned"


class DocumentError(Exception):
    pass


class UnknownBlock(DocumentError):
    pass


class RangeOutOfBounds(DocumentError):
    pass


class EmptySpanOnNonHeading(DocumentError):
    pass


class UnknownVersion(DocumentError):
    pass


@dataclass
class Block:
    id: str
    kind: str
    level: int
    pos: str
    created_by: str
    author_last: str
    created_at: int
    updated_at: int
    source_prompt_id: str | None = None
    deleted: bool = False
    body: TextCore = field(default_factory=TextCore)

    @property
    def content(self) -> str:
        return self.body.text()

    def clone(self) -> "Block":
        b = Block(
            id=self.id,
            kind=self.kind,
            level=self.level,
            pos=self.pos,
            created_by=self.created_by,
            author_last=self.author_last,
            created_at=self.created_at,
            updated_at=self.updated_at,
            source_prompt_id=self.source_prompt_id,
            deleted=self.deleted,
            body=self.body.clone(),
        )
        return b


@dataclass
class Anchor:
    id: str
    block_id: str
    start: int
    end: int
    snapshot: str
    owner: str
    whole_section: bool = False
    status: str = VALID

    def clone(self) -> "Anchor":
        return Anchor(**self.__dict__)


def transform_span(
    start: int, end: int, pos: int, ndel: int, nins: int
) -> tuple[int, int]:
    """Carry a [start, end) span through one splice at pos.

    Deletions clamp the span; an insertion at the left boundary (or before)
    shifts it, at the right boundary it does not extend it. One exception:
    a span that has collapsed (a replacement deleted its text) stays put
    when text arrives exactly at its position instead of shifting past it —
    that keeps the drift-recovery check anchored where the original text
    was, so restoring the snapshot there re-validates the anchor.
    """
    lo, hi = pos, pos + ndel
    s = start - (min(start, hi) - min(start, lo))
    e = end - (min(end, hi) - min(end, lo))
    if nins and not (s == e == pos):
        if pos <= s:
            s += nins
        if pos < e:
            e += nins
    if e < s:
        e = s
    return s, e


def reanchor(anchor: Anchor, block: Block, splices) -> Anchor:
    """Update one anchor in place after `splices` were applied to its block.

    splices: iterable of (pos, ndel, nins), each relative to the text as it
    stood when that splice applied. Orphaned anchors pass through unchanged.
    """
    if anchor.status == ORPHANED:
        return anchor
    if block.deleted:
        anchor.status = ORPHANED
        return anchor
    if not anchor.whole_section:
        s, e = anchor.start, anchor.end
        for pos, ndel, nins in splices:
            s, e = transform_span(s, e, pos, ndel, nins)
        n = block.body.visible_len()
        s = min(s, n)
        e = min(max(e, s), n)
        anchor.start, anchor.end = s, e
    refresh_anchor_status(anchor, block)
    return anchor


def refresh_anchor_status(anchor: Anchor, block: Block) -> None:
    if anchor.status == ORPHANED:
        return
    if block.deleted:
        anchor.status = ORPHANED
        return
    if anchor.whole_section:
        anchor.status = VALID
        return
    content = block.content
    spanned = content[anchor.start : anchor.end]
    if spanned == anchor.snapshot:
        anchor.status = VALID
        return
    # recovery: a later edit restored the snapshot at the transformed span
    probe = content[anchor.start : anchor.start + len(anchor.snapshot)]
    if anchor.snapshot and probe == anchor.snapshot:
        anchor.end = anchor.start + len(anchor.snapshot)
        anchor.status = VALID
        return
    anchor.status = DRIFTED


def anchor_text(anchor: Anchor, block: Block) -> str:
    """Text a mechanism should read through this anchor right now.

    Drifted anchors resolve to the whole block (never silently re-target);
    whole-section anchors resolve to the heading line.
    """
    if anchor.status == DRIFTED:
        return block.content
    if anchor.whole_section:
        return block.content
    return block.content[anchor.start : anchor.end]


def document_order(blocks: dict[str, Block]) -> list[Block]:
    live = [b for b in blocks.values() if not b.deleted]
    live.sort(key=lambda b: (b.pos, b.id))
    return live


def snapshot_records(blocks: dict[str, Block]) -> list[dict]:
    """One structured record per live block, in document order."""
    out = []
    for b in document_order(blocks):
        out.append(
            {
                "id": b.id,
                "kind": b.kind,
                "level": b.level if b.kind == HEADING else 0,
                "pos": b.pos,
                "content": b.content,
                "sourcePromptId": b.source_prompt_id,
            }
        )
    return out


def check_range_edits(content_len: int, range_edits) -> None:
    """Ranges must lie within the text and must not overlap."""
    spans = []
    for start, end, _ in range_edits:
        if not (0 <= start <= end <= content_len):
            raise RangeOutOfBounds(f"range [{start},{end}) on length {content_len}")
        spans.append((start, end))
    spans.sort()
    for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
        if e1 > s2:
            raise RangeOutOfBounds(f"overlapping ranges [{s1},{e1}) and [{s2},{e2})")
