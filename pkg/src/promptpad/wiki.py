"""Task/prompt outline derived from heading structure, with link badges.

The tree is a pure function of (blocks, anchors, links): headings open task
nodes (a level-L heading closes every open section of level >= L), prompt
blocks attach to the nearest preceding heading or to a synthetic root task,
and each prompt entry lists badges for the live links anchored in it, in
link-creation order.

`WikiIndex` maintains the same tree incrementally: prompt-level ops patch
the affected entry, heading-structure ops rebuild the spine. Equality with
`derive_wiki` from scratch is the correctness oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .document import Block, HEADING, PROMPT, document_order

# link states whose badges still show on the wiki (non-terminal lifecycles)
BADGED_STATES = ("created", "pending", "accepted", "active", "propagating")


@dataclass
class Badge:
    anchor_id: str
    kind: str
    creator: str

    def to_obj(self):
        return [self.anchor_id, self.kind, self.creator]


@dataclass
class PromptEntry:
    block_id: str
    label: str
    badges: list[Badge] = field(default_factory=list)

    def to_obj(self):
        return {
            "block": self.block_id,
            "label": self.label,
            "badges": [b.to_obj() for b in self.badges],
        }

    def clone(self):
        return PromptEntry(self.block_id, self.label, [Badge(*b.to_obj()) for b in self.badges])


@dataclass
class TaskNode:
    block_id: str | None  # None = synthetic root task
    level: int
    label: str
    children: list["TaskNode"] = field(default_factory=list)
    prompts: list[PromptEntry] = field(default_factory=list)

    def to_obj(self):
        return {
            "block": self.block_id,
            "level": self.level,
            "label": self.label,
            "prompts": [p.to_obj() for p in self.prompts],
            "children": [c.to_obj() for c in self.children],
        }

    def clone(self):
        return TaskNode(
            self.block_id,
            self.level,
            self.label,
            [c.clone() for c in self.children],
            [p.clone() for p in self.prompts],
        )


@dataclass
class WikiTree:
    roots: list[TaskNode] = field(default_factory=list)

    def to_obj(self):
        return [r.to_obj() for r in self.roots]

    def clone(self):
        return WikiTree([r.clone() for r in self.roots])


def _label(block: Block) -> str:
    return block.content.split("\n", 1)[0].strip()


def _badges_for(block_id: str, anchors, links) -> list[Badge]:
    out = []
    for link in links.values():  # insertion order == creation order
        if link.state not in BADGED_STATES:
            continue
        for anchor_id in (link.source, link.target):
            a = anchors.get(anchor_id)
            if a is not None and a.block_id == block_id:
                out.append(Badge(anchor_id, link.kind, link.creator))
    return out


def derive_wiki(blocks: dict[str, Block], anchors, links) -> WikiTree:
    """Scratch recomputation; the oracle the incremental index must equal."""
    tree = WikiTree()
    stack: list[TaskNode] = []
    synthetic: TaskNode | None = None
    for b in document_order(blocks):
        if b.kind == HEADING:
            node = TaskNode(b.id, b.level, _label(b))
            while stack and stack[-1].level >= b.level:
                stack.pop()
            if stack:
                stack[-1].children.append(node)
            else:
                tree.roots.append(node)
            stack.append(node)
        elif b.kind == PROMPT:
            entry = PromptEntry(b.id, _label(b), _badges_for(b.id, anchors, links))
            if stack:
                stack[-1].prompts.append(entry)
            else:
                if synthetic is None:
                    synthetic = TaskNode(None, 0, "")
                    tree.roots.insert(0, synthetic)
                synthetic.prompts.append(entry)
    return tree


class WikiIndex:
    """Incrementally maintained wiki tree.

    Strategy: prompt inserts/removals and label/badge changes are patched in
    place; heading structure changes (insert/delete of a heading) rebuild
    the tree, since a heading can reparent everything after it.
    """

    def __init__(self, tree: WikiTree | None = None):
        self.tree = tree if tree is not None else WikiTree()
        self._entries: dict[str, PromptEntry] = {}
        self._reindex()

    def clone(self) -> "WikiIndex":
        return WikiIndex(self.tree.clone())

    def _reindex(self):
        self._entries = {}

        def walk(node: TaskNode):
            for p in node.prompts:
                self._entries[p.block_id] = p
            for c in node.children:
                walk(c)

        for r in self.tree.roots:
            walk(r)

    def rebuild(self, blocks, anchors, links):
        self.tree = derive_wiki(blocks, anchors, links)
        self._reindex()

    # -- targeted updates -------------------------------------------------

    def on_block_inserted(self, block: Block, blocks, anchors, links):
        if block.kind == HEADING:
            self.rebuild(blocks, anchors, links)
        elif block.kind == PROMPT:
            self._insert_prompt(block, blocks, anchors, links)

    def _insert_prompt(self, block: Block, blocks, anchors, links):
        order = document_order(blocks)
        host = None
        for b in order:
            if b.id == block.id:
                break
            if b.kind == HEADING:
                host = b
        if host is None:
            root = self.tree.roots[0] if self.tree.roots and self.tree.roots[0].block_id is None else None
            if root is None:
                root = TaskNode(None, 0, "")
                self.tree.roots.insert(0, root)
            target = root
        else:
            target = self._find_task(host.id)
            if target is None:
                self.rebuild(blocks, anchors, links)
                return
        entry = PromptEntry(block.id, _label(block), _badges_for(block.id, anchors, links))
        idx = self._sibling_index(target, block, blocks)
        target.prompts.insert(idx, entry)
        self._entries[block.id] = entry

    def _sibling_index(self, task: TaskNode, block: Block, blocks) -> int:
        sib = [e.block_id for e in task.prompts]
        order_pos = {b.id: i for i, b in enumerate(document_order(blocks))}
        mine = order_pos.get(block.id, len(order_pos))
        idx = 0
        for bid in sib:
            if order_pos.get(bid, -1) < mine:
                idx += 1
        return idx

    def _find_task(self, block_id: str) -> TaskNode | None:
        def walk(node: TaskNode):
            if node.block_id == block_id:
                return node
            for c in node.children:
                got = walk(c)
                if got is not None:
                    return got
            return None

        for r in self.tree.roots:
            got = walk(r)
            if got is not None:
                return got
        return None

    def on_block_deleted(self, block: Block, blocks, anchors, links):
        if block.kind == HEADING:
            self.rebuild(blocks, anchors, links)
        elif block.kind == PROMPT:
            entry = self._entries.pop(block.id, None)
            if entry is None:
                return

            def strip(node: TaskNode):
                node.prompts = [p for p in node.prompts if p.block_id != block.id]
                for c in node.children:
                    strip(c)

            for r in self.tree.roots:
                strip(r)
            self.tree.roots = [
                r for r in self.tree.roots if r.block_id is not None or r.prompts
            ]

    def on_label_changed(self, block: Block):
        if block.kind == PROMPT:
            e = self._entries.get(block.id)
            if e is not None:
                e.label = _label(block)
        elif block.kind == HEADING:
            node = self._find_task(block.id)
            if node is not None:
                node.label = _label(block)

    def on_links_changed(self, block_ids, anchors, links):
        for bid in block_ids:
            e = self._entries.get(bid)
            if e is not None:
                e.badges = _badges_for(bid, anchors, links)


def outline_text(tree: WikiTree) -> str:
    """Plain-text rendering used as the generation context outline."""
    lines: list[str] = []

    def walk(node: TaskNode, depth: int):
        if node.block_id is not None or node.label:
            lines.append("  " * depth + "- " + (node.label or "(task)"))
        for p in node.prompts:
            lines.append("  " * (depth + 1) + "* " + p.label)
        for c in node.children:
            walk(c, depth + 1)

    for r in tree.roots:
        walk(r, 0)
    return "\n".join(lines)
