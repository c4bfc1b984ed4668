"""Acceptance gate: one test per criterion, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -v` (add -s to see the lines as
they print). Tolerances and budgets are pinned here, not configurable.
"""

import itertools
import json
import random
import time
from pathlib import Path

import pytest

import promptpad.state as state_mod
from promptpad.engine import Engine, PropagationRunaway
from promptpad.genai import MockOracle
from promptpad.history import LINKED_CAUSES, apply_line_diff, diff_records
from promptpad.links import LEGAL_TRANSITIONS
from promptpad.ops import SyncOp
from promptpad.persist import DocStore, recover_replica
from promptpad.replica import Replica
from promptpad.simulator import Session, load_script, render_report, run_script
from promptpad.state import scratch_wiki

SCENARIO = Path(__file__).parent.parent / "src/promptpad/scenarios/alice_bob.yaml"

WORDS = ("df", "mean", "encode", "clean", "frame", "col", "x", "rows", "skew")


def _line(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance] {name}: {status}{(' — ' + detail) if detail else ''}")
    assert ok, f"{name}: {detail}"


def _rand_text(rng, lo=2, hi=6):
    return " ".join(rng.choice(WORDS) for _ in range(rng.randrange(lo, hi)))


# ---------------------------------------------------------------------------
# criterion: convergence fuzz (+ wiki oracle equality riding on every op)
# ---------------------------------------------------------------------------


def _fuzz_actions(session: Session, rng: random.Random, actor: str) -> None:
    rep = session.clients[actor].replica
    st = rep.state
    live = [b for b in st.blocks.values() if not b.deleted]
    roll = rng.random()

    if roll < 0.24 or not live:
        kind = rng.choices(("prompt", "heading", "text", "code"), (5, 2, 2, 1))[0]
        after = rng.choice(live).id if live and rng.random() < 0.8 else None
        rep.insert_block(
            kind, _rand_text(rng), after_block_id=after, level=rng.randrange(1, 4)
        )
    elif roll < 0.55:
        blk = rng.choice(live)
        n = blk.body.visible_len()
        start = rng.randrange(n + 1)
        end = min(n, start + rng.randrange(0, 5))
        rep.edit_block_text(blk.id, [(start, end, _rand_text(rng, 1, 3))])
    elif roll < 0.64:
        blk = rng.choice(live)
        n = blk.body.visible_len()
        if blk.kind == "heading":
            rep.create_anchor(blk.id, 0, 0)
        elif n > 0:
            start = rng.randrange(n)
            rep.create_anchor(blk.id, start, rng.randrange(start + 1, n + 1))
    elif roll < 0.72:
        anchors = [
            a
            for a in st.anchors.values()
            if a.status != "orphaned" and a.block_id in st.blocks
            and not st.blocks[a.block_id].deleted
        ]
        rng.shuffle(anchors)
        kind = rng.choice(("refer", "request", "share", "link"))
        for sa, ta in itertools.permutations(anchors, 2):
            sb, tb = st.blocks[sa.block_id], st.blocks[ta.block_id]
            if kind == "link" and (
                sa.block_id == ta.block_id or sb.kind != "prompt" or tb.kind != "prompt"
            ):
                continue
            if kind == "refer" and tb.kind != "prompt":
                continue
            if kind in ("share", "request") and tb.kind not in ("prompt", "heading"):
                continue
            if sa.id == ta.id:
                continue
            rep.create_link(kind, sa.id, ta.id, _rand_text(rng, 1, 3))
            break
    elif roll < 0.78:
        pending = [
            l
            for l in st.links.values()
            if l.kind == "share" and l.state == "pending"
            and st.share_recipient(l) == actor
        ]
        if pending:
            link = rng.choice(pending)
            if rng.random() < 0.7:
                rep.accept_share(link.id)
            else:
                rep.decline_share(link.id)
    elif roll < 0.82:
        lives = [l for l in st.links.values()
                 if l.kind == "link" and l.state in ("active", "propagating")]
        cancels = [l for l in st.links.values()
                   if l.kind == "request" and l.state == "pending"]
        if lives and rng.random() < 0.5:
            rep.unlink(rng.choice(lives).id)
        elif cancels:
            rep.cancel_request(rng.choice(cancels).id)
    elif roll < 0.86:
        candidates = [
            (bid, len(chain))
            for bid, chain in st.history.items()
            if len(chain) >= 2 and bid in st.blocks and not st.blocks[bid].deleted
        ]
        if candidates:
            bid, n = rng.choice(candidates)
            rep.rollback(bid, rng.randrange(1, n + 1))
    elif roll < 0.89:
        prompts = [b for b in live if b.kind == "prompt"]
        if prompts:
            rep.request_regenerate(rng.choice(prompts).id)
    elif roll < 0.92:
        if st.messages:
            rep.resolve_message(rng.choice(list(st.messages)))
    elif roll < 0.94 and len(live) > 2:
        rep.delete_block(rng.choice(live).id)


def run_fuzz_session(seed: int) -> int:
    rng = random.Random(seed)
    n_clients = rng.randrange(2, 5)
    names = [f"c{i}" for i in range(n_clients)]
    session = Session(f"fuzz{seed}", names, seed=seed)
    budget = rng.randrange(60, 220)
    off_client = rng.choice(names)
    off_at = rng.randrange(5, max(6, budget // 2))
    on_at = rng.randrange(off_at + 2, budget + 2)

    for step in range(budget):
        if step == off_at:
            session.go_offline(off_client)
        elif step == on_at:
            session.go_online(off_client)
        actor = rng.choice(names)
        _fuzz_actions(session, rng, actor)
        if rng.random() < 0.3:
            session.deliver_from(actor)
        if rng.random() < 0.08:
            session.sync()

    if not session.clients[off_client].online:
        session.go_online(off_client)
    session.sync()

    baseline = session.server.replica.state
    base_bytes = baseline.canonical_bytes()
    base_snapshot = baseline.snapshot_text()
    for name, client in session.clients.items():
        st = client.replica.state
        assert st.snapshot_text() == base_snapshot, f"{name} snapshot diverged"
        assert st.canonical_bytes() == base_bytes, f"{name} state diverged"
    return len(session.server.replica.log)


def test_convergence_fuzz_with_wiki_oracle():
    """200 seeded sessions, 2-4 clients, shuffled delivery, one offline
    window; all replicas byte-identical; incremental wiki == scratch after
    every folded op; under 60 s total."""

    failures = []

    def wiki_hook(state, op):
        got = state.wiki.tree.to_obj()
        want = scratch_wiki(state).to_obj()
        if got != want:
            failures.append((op.op_id, got, want))

    state_mod.AFTER_APPLY_HOOK = wiki_hook
    started = time.monotonic()
    total_ops = 0
    try:
        for seed in range(200):
            total_ops += run_fuzz_session(seed)
    finally:
        state_mod.AFTER_APPLY_HOOK = None
    elapsed = time.monotonic() - started
    _line(
        "convergence fuzz (200 sessions)",
        True,
        f"{total_ops} ops, {elapsed:.1f}s",
    )
    _line("wiki oracle equality (every op)", not failures,
          f"{len(failures)} mismatches")
    _line("convergence fuzz runtime < 60s", elapsed < 60.0, f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# criterion: propagation termination on exhaustive small link graphs
# ---------------------------------------------------------------------------


def _build_graph(n_blocks: int, edges) -> tuple[Replica, Engine, list, list]:
    server = Replica("graph", "server")
    engine = Engine(server, MockOracle())
    blocks = []
    token = "sharedtok"
    for i in range(n_blocks):
        blocks.append(server.insert_block("prompt", f"p{i} uses {token} here"))
    links = []
    for a, b in edges:
        pa = server.state.blocks[blocks[a]].content
        start = pa.index(token)
        sa = server.create_anchor(blocks[a], start, start + len(token))
        pb = server.state.blocks[blocks[b]].content
        start_b = pb.index(token)
        ta = server.create_anchor(blocks[b], start_b, start_b + len(token))
        links.append(server.create_link("link", sa, ta))
    engine.pump()
    return server, engine, blocks, links


def test_propagation_termination_exhaustive():
    configs = 0
    worst = 0
    for n_blocks in (2, 3, 4):
        pairs = list(itertools.combinations(range(n_blocks), 2))
        for n_edges in (1, 2, 3, 4):
            for edges in itertools.combinations_with_replacement(pairs, n_edges):
                for origin in range(n_blocks):
                    server, engine, blocks, links = _build_graph(n_blocks, edges)
                    content = server.state.blocks[blocks[origin]].content
                    at = content.index("sharedtok") + len("sharedtok")
                    server.edit_block_text(blocks[origin], [(at, at, "2")])
                    try:
                        engine.pump()
                    except PropagationRunaway as exc:
                        _line("propagation termination", False, str(exc))
                    active_links = len(links)
                    assert engine.auto_edit_count <= active_links, (
                        n_blocks, edges, origin, engine.auto_edit_count,
                    )
                    lp_jobs = [
                        j for j in server.state.jobs.values()
                        if j.kind == "link-propagate"
                    ]
                    assert not lp_jobs, "no fixpoint reached"
                    worst = max(worst, engine.auto_edit_count)
                    configs += 1
    _line(
        "propagation termination (exhaustive <=4 blocks, <=4 edges)",
        True,
        f"{configs} configurations, worst cascade {worst} auto-edits",
    )


# ---------------------------------------------------------------------------
# criterion: mechanism state machines under event fuzzing
# ---------------------------------------------------------------------------


def test_state_machine_fuzz_10k_events():
    rng = random.Random(777)
    server = Replica("fa", "server")
    p1 = server.insert_block("prompt", "aaa bbb ccc")
    p2 = server.insert_block("prompt", "ddd eee fff")
    h = server.insert_block("heading", "T", level=1)
    anchors = [
        server.create_anchor(p1, 0, 3),
        server.create_anchor(p1, 4, 7),
        server.create_anchor(p2, 0, 3),
        server.create_anchor(p2, 4, 7),
        server.create_anchor(h, 0, 0),
    ]
    events = (
        "accept-share", "decline-share", "unlink", "cancel-request",
        "resolve-request",
    )
    links: list[str] = []
    prev: dict[str, str] = {}
    illegal = 0
    for i in range(10_000):
        if rng.random() < 0.2 or not links:
            payload = {
                "event": "create",
                "linkId": f"L{i}",
                "kind": rng.choice(("refer", "request", "share", "link")),
                "source": rng.choice(anchors),
                "target": rng.choice(anchors),
                "message": "m",
            }
            links.append(f"L{i}")
        elif rng.random() < 0.12:
            payload = {
                "event": "noop-audit",
                "linkId": rng.choice(links),
                "origin": "x:1",
                "demandEpoch": rng.randrange(0, 3),
                "targetBlock": rng.choice((p1, p2)),
            }
        elif rng.random() < 0.1:
            payload = {"event": "generation-failed",
                       "linkId": rng.choice(links), "jobKey": "", "reason": "r"}
        else:
            payload = {"event": rng.choice(events), "linkId": rng.choice(links)}
        server._mint("link-event", payload)
        for lid, link in server.state.links.items():
            old = prev.get(lid)
            if old is not None and old != link.state:
                if (link.kind, old, link.state) not in LEGAL_TRANSITIONS:
                    illegal += 1
            prev[lid] = link.state
    _line("mechanism state machines (10^4 events)", illegal == 0,
          f"{illegal} illegal transitions")


# ---------------------------------------------------------------------------
# criterion: the narrative scenario, three seeds, deterministic
# ---------------------------------------------------------------------------


def test_scenario_golden_three_seeds():
    script = load_script(SCENARIO)
    digests = set()
    for seed in (1, 2, 3):
        report = run_script(script, seed=seed)
        again = run_script(script, seed=seed)
        assert render_report(report) == render_report(again), "not deterministic"
        bad = [a for a in report["assertions"] if not a["ok"]]
        assert not bad and report["converged"], (seed, bad)
        digests.add(report["finalDigest"])
    _line("scenario golden test (3 seeds)", len(digests) == 1,
          f"digest {digests.pop()[:12]}")


# ---------------------------------------------------------------------------
# criterion: history integrity
# ---------------------------------------------------------------------------


def test_history_integrity_random_chains():
    rng = random.Random(42)
    bad_roundtrip = 0
    for chain_no in range(4):
        r = Replica("h", "u")
        p = r.insert_block("prompt", _rand_text(rng))
        while len(r.state.history[p]) < 50:
            blk = r.state.blocks[p]
            n = blk.body.visible_len()
            start = rng.randrange(n + 1)
            r.edit_block_text(
                p, [(start, min(n, start + rng.randrange(0, 4)),
                     _rand_text(rng, 1, 3) + ("\n" if rng.random() < 0.3 else ""))]
            )
        chain = r.state.history[p]
        assert len(chain) == 50
        assert [rec.version_no for rec in chain] == list(range(1, 51))
        for a in chain:
            for b in chain:
                script = diff_records(a, b)
                if apply_line_diff(a.prompt_text, script["prompt"]) != b.prompt_text:
                    bad_roundtrip += 1
        assert chain[-1].prompt_text == r.state.blocks[p].content
    _line("history diff/apply round-trips (50-version chains)",
          bad_roundtrip == 0, f"{bad_roundtrip} failures over 4x2500 pairs")

    # every auto-update record carries its link across the scenario run
    report_session = Session("hlink", ["alice", "bob"], seed=1)
    del report_session
    script = load_script(SCENARIO)
    session = Session("hl", script["clients"], seed=1, with_sandbox=False)
    from promptpad.simulator import _run_action, _run_assert

    ids: dict = {}
    for step in script["steps"]:
        if "do" in step and step["do"] != "execute":
            _run_action(session, ids, step)
    missing = [
        rec.to_obj()
        for chain in session.server.replica.state.history.values()
        for rec in chain
        if rec.cause in LINKED_CAUSES and not rec.link_id
    ]
    _line("auto-update records carry linkId", not missing, f"{len(missing)} missing")


# ---------------------------------------------------------------------------
# criterion: offline share replay
# ---------------------------------------------------------------------------


def test_offline_share_replay_50_runs():
    losses = 0
    disorders = 0
    for seed in range(50):
        rng = random.Random(1000 + seed)
        session = Session(f"os{seed}", ["alice", "bob"], seed=seed)
        alice, bob = session.clients["alice"], session.clients["bob"]
        ha = alice.replica.insert_block("heading", "Alice work", level=1)
        session.sync()
        pa = alice.replica.insert_block("prompt", "alice prompt text", after_block_id=ha)
        session.sync()
        session.go_offline("alice")
        links = []
        for i in range(3):
            pb = bob.replica.insert_block("prompt", f"gift {i} " + _rand_text(rng))
            session.sync()
            src = bob.replica.create_anchor(pb, 0, 4)
            tgt = (
                bob.replica.create_anchor(pa, 0, 5)
                if rng.random() < 0.5
                else bob.replica.create_anchor(ha, 0, 0)
            )
            session.sync()
            links.append(bob.replica.create_link("share", src, tgt, f"take {i}"))
            session.sync()
        assert alice.popups == []
        session.go_online("alice")
        got = [p["linkId"] for p in alice.popups]
        if len(got) != 3:
            losses += 1
        elif got != links:
            disorders += 1
    _line("offline share replay (50 runs, 3 shares)",
          losses == 0 and disorders == 0,
          f"{losses} losses, {disorders} misorders")


# ---------------------------------------------------------------------------
# criterion: kernel isolation
# ---------------------------------------------------------------------------


def test_kernel_isolation_across_scenario():
    script = load_script(SCENARIO)
    session = Session("iso", script["clients"], seed=1, with_sandbox=True)
    from promptpad.simulator import _run_action

    oracle = session.server.oracle
    sandbox = session.server.sandbox
    violations = []
    ids: dict = {}
    for i, step in enumerate(script["steps"]):
        if "do" not in step:
            continue
        if step["do"] == "execute":
            before = oracle.fingerprint()
            _run_action(session, ids, step)
            if oracle.fingerprint() != before:
                violations.append((i, "execute touched the generation cache"))
        elif step["do"] in ("regenerate", "explain", "link", "accept", "edit"):
            before = sandbox.fingerprint()
            _run_action(session, ids, step)
            if sandbox.fingerprint() != before:
                violations.append((i, f"{step['do']} touched the exec store"))
        else:
            _run_action(session, ids, step)
    _line("kernel isolation (exec store vs generation cache)",
          not violations, f"{violations}")


# ---------------------------------------------------------------------------
# criterion: crash recovery
# ---------------------------------------------------------------------------


def test_crash_recovery_after_every_event(tmp_path):
    rng = random.Random(7)
    src_dir = tmp_path / "origin"
    store = DocStore(src_dir, "doc", fsync_every=1)
    r = Replica("doc", "server")
    offsets = [0]
    expected_digests = [r.state.digest()]
    blocks = []
    for i in range(100):
        if not blocks or rng.random() < 0.3:
            blocks.append(r.insert_block("prompt", _rand_text(rng)))
        else:
            bid = rng.choice(blocks)
            n = r.state.blocks[bid].body.visible_len()
            p = rng.randrange(n + 1)
            r.edit_block_text(bid, [(p, min(n, p + rng.randrange(0, 3)), "zz")])
        for op in r.take_outbox():
            offsets.append(store.append_op(op))
            store.flush()
            expected_digests.append(r.state.digest())
    store.close()
    log = (src_dir / "doc" / "ops.log").read_bytes()

    mismatches = 0
    for k in range(0, 101, 1):
        crash_dir = tmp_path / f"crash{k}"
        (crash_dir / "doc").mkdir(parents=True)
        # killed after event k: disk holds exactly the first k records,
        # possibly plus a torn tail from the write in flight
        torn = b"" if k == 100 else log[offsets[k] : offsets[k] + rng.randrange(0, 7)]
        (crash_dir / "doc" / "ops.log").write_bytes(log[: offsets[k]] + torn)
        recovered, _, ok = recover_replica(crash_dir, "doc")
        if recovered.state.digest() != expected_digests[k]:
            mismatches += 1
    _line("crash recovery (kill after each of 100 events)",
          mismatches == 0, f"{mismatches} mismatches")
