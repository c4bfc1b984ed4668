"""Generation context assembly.

A context bundle is an ordered list of named segments: the wiki outline
first (never truncated), then the target block's prompt and code, then the
material referenced through links in link-creation order, then the user
message and any mechanism directive. The whole bundle is capped; when over
budget the oldest referenced material is truncated first, with a marker.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..document import CODE, PROMPT, UnknownBlock, anchor_text
from ..ops import canonical_json, digest
from ..wiki import outline_text

BUNDLE_CAP = 8000
TRUNCATION_MARKER = "[truncated]"

# link states whose material still informs generation
_CONTRIBUTING_STATES = ("created", "pending", "accepted", "active", "propagating")


@dataclass
class ContextBundle:
    segments: list = field(default_factory=list)  # (name, text) pairs
    truncated: bool = False

    def get(self, name: str) -> str:
        for n, t in self.segments:
            if n == name:
                return t
        return ""

    def refs(self) -> list:
        return [(n, t) for n, t in self.segments if n.startswith("ref:")]

    def text(self) -> str:
        return "\n\n".join(f"[{n}]\n{t}" for n, t in self.segments)

    def digest(self) -> str:
        return digest(self.segments)

    def size(self) -> int:
        return sum(len(t) for _, t in self.segments)


def expand_identifier(content: str, start: int, end: int) -> str:
    """Word containing the span, grown to identifier boundaries.

    Tracks renames that spill past the original span (df -> df2). Falls back
    to the raw span when no word characters neighbour it.
    """

    def is_word(c: str) -> bool:
        return c.isalnum() or c == "_"

    s, e = start, max(end, start)
    while s > 0 and is_word(content[s - 1]):
        s -= 1
    while e < len(content) and is_word(content[e]):
        e += 1
    got = content[s:e]
    return got if got else content[start:end]


def tracked_identifier(state, anchor_id: str) -> str:
    """The identifier a mechanism endpoint currently denotes."""
    a = state.anchors.get(anchor_id)
    if a is None:
        return ""
    b = state.blocks.get(a.block_id)
    if b is None or b.deleted:
        return ""
    if a.status == "drifted" or a.whole_section:
        return anchor_text(a, b)
    return expand_identifier(b.content, a.start, a.end)


def _exec_summary(state, block_id: str) -> str:
    code = state.code_block_of(block_id)
    if code is None:
        return ""
    res = state.exec_results.get(code.id)
    if not res:
        return ""
    val = res.get("valueRepr") or ""
    out = (res.get("stdout") or "").split("\n", 1)[0]
    bits = [x for x in (val, out) if x]
    return " ".join(bits)


def _link_material(state, link, target_block_id: str) -> str | None:
    sa = state.anchors.get(link.source)
    ta = state.anchors.get(link.target)
    if sa is None or ta is None:
        return None
    if sa.block_id == target_block_id:
        other = ta
    elif ta.block_id == target_block_id:
        other = sa
    else:
        return None
    ob = state.blocks.get(other.block_id)
    if ob is None or ob.deleted:
        return None
    lines = [f"{link.kind} node: {anchor_text(other, ob)}"]
    if ob.kind == PROMPT:
        lines.append(f"prompt: {ob.content}")
        code = state.code_block_of(ob.id)
        if code is not None:
            lines.append(f"code: {code.content}")
        run = _exec_summary(state, ob.id)
        if run:
            lines.append(f"result: {run}")
    elif ob.kind == CODE:
        lines.append(f"code: {ob.content}")
    return "\n".join(lines)


def assemble_context(
    state,
    target_block_id: str,
    message: str | None = None,
    expected: str | None = None,
    directive: dict | None = None,
    cap: int = BUNDLE_CAP,
) -> ContextBundle:
    block = state.blocks.get(target_block_id)
    if block is None or block.deleted:
        raise UnknownBlock(target_block_id)
    prompt_text, code_text = state._pair_texts(target_block_id)

    segments: list = [("outline", outline_text(state.wiki.tree))]
    segments.append(("prompt", prompt_text))
    segments.append(("code", code_text))
    for link in state.links.values():  # creation order
        if link.state not in _CONTRIBUTING_STATES:
            continue
        material = _link_material(state, link, target_block_id)
        if material is not None:
            segments.append((f"ref:{link.id}", material))
    if expected:
        segments.append(("expected", expected))
    if message:
        segments.append(("message", message))
    if directive is not None:
        segments.append(("directive", canonical_json(directive)))

    bundle = ContextBundle(segments=segments)
    if bundle.size() > cap:
        # oldest referenced material goes first; the outline never does
        for i, (name, _) in enumerate(bundle.segments):
            if bundle.size() <= cap:
                break
            if name.startswith("ref:"):
                bundle.segments[i] = (name, TRUNCATION_MARKER)
                bundle.truncated = True
    return bundle
