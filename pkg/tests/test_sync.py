"""Replication: convergence, causality, buffering, reconnect bundles."""

import random

from promptpad.ops import SyncOp
from promptpad.replica import Replica, catchup_bundle
from promptpad.simulator import Session


def test_sequential_replay_identical():
    a = Replica("d", "a")
    b = Replica("d", "b")
    a.insert_block("prompt", "hello world")
    b.integrate(a.take_outbox())
    assert a.state.canonical_bytes() == b.state.canonical_bytes()


def test_concurrent_inserts_same_gap_converge():
    a = Replica("d", "a")
    b = Replica("d", "b")
    seed = a.insert_block("text", "seed")
    b.integrate(a.take_outbox())
    a.insert_block("prompt", "from a", after_block_id=seed)
    b.insert_block("prompt", "from b", after_block_id=seed)
    ops_a, ops_b = a.take_outbox(), b.take_outbox()
    a.integrate(ops_b)
    b.integrate(ops_a)
    assert [x.content for x in a.state.order()] == [x.content for x in b.state.order()]
    assert a.state.canonical_bytes() == b.state.canonical_bytes()


def test_concurrent_disjoint_text_edits_both_survive():
    a = Replica("d", "a")
    b = Replica("d", "b")
    blk = a.insert_block("text", "aaaa bbbb")
    b.integrate(a.take_outbox())
    a.edit_block_text(blk, [(0, 4, "AAAA")])
    b.edit_block_text(blk, [(5, 9, "BBBB")])
    ops_a, ops_b = a.take_outbox(), b.take_outbox()
    a.integrate(ops_b)
    b.integrate(ops_a)
    assert a.state.blocks[blk].content == "AAAA BBBB"
    assert b.state.blocks[blk].content == "AAAA BBBB"


def test_duplicate_delivery_is_noop():
    a = Replica("d", "a")
    b = Replica("d", "b")
    a.insert_block("text", "x")
    ops = a.take_outbox()
    b.integrate(ops)
    before = b.state.canonical_bytes()
    b.integrate(ops)
    assert b.state.canonical_bytes() == before


def test_op_held_until_dependency_arrives():
    a = Replica("d", "a")
    b = Replica("d", "b")
    blk = a.insert_block("text", "abc")
    a.edit_block_text(blk, [(0, 1, "X")])
    op1, op2 = a.take_outbox()
    b.integrate([op2])  # edit before its insert
    assert not b.state.blocks
    assert (op2.actor, op2.seq) in b.buffered
    b.integrate([op1])
    assert b.state.blocks[blk].content == "Xbc"
    assert not b.buffered


def test_three_replicas_random_order_converge():
    rng = random.Random(31)
    reps = [Replica("d", f"r{i}") for i in range(3)]
    blocks: list[str] = []
    all_ops: list[SyncOp] = []
    # everyone edits locally in rounds, exchanging with random delivery
    for rounds in range(30):
        r = rng.choice(reps)
        live = [b for b in blocks if b in r.state.blocks and not r.state.blocks[b].deleted]
        if live and rng.random() < 0.6:
            bid = rng.choice(live)
            n = r.state.blocks[bid].body.visible_len()
            p = rng.randrange(n + 1)
            r.edit_block_text(bid, [(p, min(n, p + rng.randrange(2)), "ab")])
        else:
            blocks.append(r.insert_block("prompt", f"block {rounds}"))
        all_ops.extend(r.take_outbox())
        if rng.random() < 0.4:
            batch = list(all_ops)
            rng.shuffle(batch)
            for rep in reps:
                rep.integrate(batch)
    final = list(all_ops)
    rng.shuffle(final)
    for rep in reps:
        rep.integrate(final)
    states = {rep.state.canonical_bytes() for rep in reps}
    assert len(states) == 1


def test_presence_is_ephemeral():
    session = Session("d", ["a", "b"], seed=0)
    session.server.handle_presence("a", {"cursor": ["blk", 3], "online": True})
    assert "a" in session.server.replica.presence
    obj = session.server.replica.state.canonical_obj()
    assert "presence" not in obj
    # presence never contributes ops to the log
    assert all(op.kind != "presence" for op in session.server.replica.log)


class TestReconnect:
    def _setup_offline_shares(self, n_shares):
        session = Session("d", ["alice", "bob"], seed=3)
        alice, bob = session.clients["alice"], session.clients["bob"]
        ha = alice.replica.insert_block("heading", "Alice section", level=1)
        session.sync()
        pa = alice.replica.insert_block("prompt", "alice prompt", after_block_id=ha)
        session.sync()
        session.go_offline("alice")
        links = []
        for i in range(n_shares):
            pb = bob.replica.insert_block("prompt", f"share source {i}")
            session.sync()
            src = bob.replica.create_anchor(pb, 0, 5)
            tgt = bob.replica.create_anchor(pa, 0, 5)
            session.sync()
            links.append(
                bob.replica.create_link("share", src, tgt, f"take {i}")
            )
            session.sync()
        return session, links

    def test_missed_shares_arrive_in_creation_order(self):
        session, links = self._setup_offline_shares(2)
        alice = session.clients["alice"]
        assert alice.popups == []
        session.go_online("alice")
        assert [p["linkId"] for p in alice.popups] == links

    def test_nothing_missed_empty_bundle(self):
        session = Session("d", ["alice", "bob"], seed=4)
        session.sync()
        session.go_offline("alice")
        session.go_online("alice")
        alice = session.clients["alice"]
        assert alice.popups == [] and alice.highlights == []

    def test_offline_auto_update_is_highlighted(self):
        session = Session("d", ["alice", "bob"], seed=5)
        alice, bob = session.clients["alice"], session.clients["bob"]
        p1 = alice.replica.insert_block("prompt", "alice df here")
        session.sync()
        p2 = bob.replica.insert_block("prompt", "bob df there")
        session.sync()
        a1 = alice.replica.create_anchor(p1, 6, 8)
        session.sync()
        a2 = alice.replica.create_anchor(p2, 4, 6)
        session.sync()
        alice.replica.create_link("link", a1, a2)
        session.sync()
        session.go_offline("bob")
        alice.replica.edit_block_text(p1, [(8, 8, "2")])
        session.sync()
        session.go_online("bob")
        highlighted = {h["blockId"] for h in bob.highlights}
        assert p2 in highlighted
        causes = {h["blockId"]: h["cause"] for h in bob.highlights}
        assert causes[p2] == "sync-propagate"
        assert "df2" in bob.replica.state.blocks[p2].content


def test_catchup_bundle_shape():
    a = Replica("d", "server")
    a.insert_block("prompt", "content")
    bundle = catchup_bundle(a, {}, "someone")
    assert set(bundle) == {"ops", "popups", "highlights"}
    assert len(bundle["ops"]) == 1
    # frontier already covering the ops yields nothing
    bundle2 = catchup_bundle(a, a.frontier(), "someone")
    assert bundle2["ops"] == []
