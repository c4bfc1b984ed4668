"""Wiki derivation and incremental maintenance against the scratch oracle."""

import random

from promptpad.replica import Replica
from promptpad.state import scratch_wiki
from promptpad.wiki import derive_wiki


def test_empty_doc_empty_tree(replica):
    assert replica.state.wiki.tree.to_obj() == []
    assert derive_wiki({}, {}, {}).to_obj() == []


def test_heading_nesting_example(replica):
    """[H1, P1, H2, P2, H1, P3] -> Task1{P1, Sub{P2}}, Task2{P3}."""
    replica.insert_block("heading", "Task 1", level=1)
    replica.insert_block("prompt", "P1")
    replica.insert_block("heading", "Sub", level=2)
    replica.insert_block("prompt", "P2")
    replica.insert_block("heading", "Task 2", level=1)
    replica.insert_block("prompt", "P3")
    tree = replica.state.wiki.tree.to_obj()
    assert [t["label"] for t in tree] == ["Task 1", "Task 2"]
    assert [p["label"] for p in tree[0]["prompts"]] == ["P1"]
    assert [c["label"] for c in tree[0]["children"]] == ["Sub"]
    assert [p["label"] for p in tree[0]["children"][0]["prompts"]] == ["P2"]
    assert [p["label"] for p in tree[1]["prompts"]] == ["P3"]
    assert tree == scratch_wiki(replica.state).to_obj()


def test_prompt_before_any_heading_gets_synthetic_root(replica):
    replica.insert_block("prompt", "orphan prompt")
    tree = replica.state.wiki.tree.to_obj()
    assert tree[0]["block"] is None
    assert tree[0]["prompts"][0]["label"] == "orphan prompt"
    assert tree == scratch_wiki(replica.state).to_obj()


def test_badge_appears_after_link_created(replica):
    h = replica.insert_block("heading", "T", level=1)
    p1 = replica.insert_block("prompt", "alpha df")
    p2 = replica.insert_block("prompt", "beta df")
    a1 = replica.create_anchor(p1, 6, 8)
    a2 = replica.create_anchor(p2, 5, 7)
    link = replica.create_link("link", a1, a2)
    tree = replica.state.wiki.tree.to_obj()
    badges = tree[0]["prompts"][0]["badges"]
    assert badges == [[a1, "link", "alice"]]
    assert tree == scratch_wiki(replica.state).to_obj()
    # terminal state drops the badge
    replica.unlink(link)
    tree = replica.state.wiki.tree.to_obj()
    assert tree[0]["prompts"][0]["badges"] == []
    assert tree == scratch_wiki(replica.state).to_obj()


def test_heading_label_edit_updates_tree(replica):
    h = replica.insert_block("heading", "Old name", level=1)
    replica.edit_block_text(h, [(0, 3, "New")])
    tree = replica.state.wiki.tree.to_obj()
    assert tree[0]["label"] == "New name"
    assert tree == scratch_wiki(replica.state).to_obj()


def test_incremental_equals_scratch_under_random_ops():
    """Oracle equality over a random operation soup."""
    rng = random.Random(99)
    r = Replica("doc", "fuzzer")
    blocks = []
    for step in range(160):
        roll = rng.random()
        if roll < 0.3 or not blocks:
            kind = rng.choice(["heading", "prompt", "text", "prompt"])
            level = rng.randrange(1, 4)
            live = [b for b in blocks if b in r.state.blocks and not r.state.blocks[b].deleted]
            after = rng.choice(live) if live and rng.random() < 0.7 else None
            blocks.append(
                r.insert_block(kind, f"content {step}", after_block_id=after, level=level)
            )
        elif roll < 0.75:
            bid = rng.choice(blocks)
            blk = r.state.blocks.get(bid)
            if blk is None or blk.deleted:
                continue
            n = blk.body.visible_len()
            p = rng.randrange(n + 1)
            r.edit_block_text(bid, [(p, min(n, p + rng.randrange(0, 3)), "zz")])
        else:
            bid = rng.choice(blocks)
            blk = r.state.blocks.get(bid)
            if blk is not None and not blk.deleted:
                r.delete_block(bid)
        assert r.state.wiki.tree.to_obj() == scratch_wiki(r.state).to_obj(), step
