"""Compare the compiled text kernel against the pure-Python fallback.

Two workloads:
  * kernel-only: random insert/delete runs on one block, the inner loop of
    op application;
  * fold: a two-replica editing session folded end to end with each kernel
    (selector forced via monkeypatching), which shows the end-to-end share
    of the kernel in replication cost.

Run:  python benchmarks/bench_textcore.py [--ops 20000]
"""

from __future__ import annotations

import argparse
import random
import time

from promptpad.textcore import KERNEL, PyTextCore, alloc_run

try:
    from promptpad.textcore._speed import TextCore as SpeedTextCore
except ImportError:
    SpeedTextCore = None


def make_workload(n_ops: int, seed: int = 7):
    """Pre-generate a deterministic op tape against a scratch kernel."""
    rng = random.Random(seed)
    tape = []
    core = PyTextCore()
    ctr = 0
    for _ in range(n_ops):
        if rng.random() < 0.72 or core.visible_len() == 0:
            vis = core.visible_full_indices()
            p = rng.randrange(core.visible_len() + 1)
            left_full = vis[p - 1] if p > 0 else -1
            left, right = core.neighbor_ids(left_full)
            text = "".join(rng.choice("abcdefgh ") for _ in range(rng.randrange(1, 9)))
            ids = alloc_run(left, right, len(text), "u", ctr)
            ctr += len(text)
            tape.append(("i", ids, text))
            core.apply_insert(ids, text)
        else:
            vis = core.visible_full_indices()
            idx = vis[rng.randrange(len(vis))]
            dead = [core.id_at_full(idx)]
            tape.append(("d", dead, None))
            core.apply_delete(dead)
    return tape


def run_kernel(cls, tape) -> float:
    core = cls()
    t0 = time.perf_counter()
    for i, (op, ids, text) in enumerate(tape):
        if op == "i":
            core.apply_insert(ids, text)
        else:
            core.apply_delete(ids)
        if i % 32 == 0:
            core.text()
    return time.perf_counter() - t0


def run_fold(kernel_cls, n_actions: int = 400, seed: int = 11) -> float:
    import promptpad.textcore as tc
    import promptpad.document as doc
    import promptpad.state as state_mod

    saved = (tc.TextCore, doc.TextCore, state_mod.TextCore)
    tc.TextCore = doc.TextCore = state_mod.TextCore = kernel_cls
    try:
        from promptpad.replica import Replica

        rng = random.Random(seed)
        a = Replica("bench", "a")
        b = Replica("bench", "b")
        blocks = [a.insert_block("prompt", "seed text for the benchmark")]
        b.integrate(a.take_outbox())
        t0 = time.perf_counter()
        for i in range(n_actions):
            src = a if i % 2 == 0 else b
            if rng.random() < 0.25:
                blocks.append(src.insert_block("prompt", "another block %d" % i))
            else:
                known = [x for x in blocks if x in src.state.blocks]
                bid = rng.choice(known)
                blk = src.state.blocks[bid]
                n = blk.body.visible_len()
                p = rng.randrange(n + 1)
                src.edit_block_text(bid, [(p, min(n, p + rng.randrange(0, 3)), "xy")])
            if i % 10 == 9:
                ops_a, ops_b = a.take_outbox(), b.take_outbox()
                a.integrate(ops_b)
                b.integrate(ops_a)
        ops_a, ops_b = a.take_outbox(), b.take_outbox()
        a.integrate(ops_b)
        b.integrate(ops_a)
        assert a.state.canonical_bytes() == b.state.canonical_bytes()
        return time.perf_counter() - t0
    finally:
        tc.TextCore, doc.TextCore, state_mod.TextCore = saved


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--ops", type=int, default=20_000)
    args = parser.parse_args()

    print(f"active kernel: {KERNEL}")
    tape = make_workload(args.ops)
    pure = run_kernel(PyTextCore, tape)
    print(f"kernel pure     : {args.ops / pure:12.0f} ops/s  ({pure:.3f}s)")
    if SpeedTextCore is not None:
        fast = run_kernel(SpeedTextCore, tape)
        print(f"kernel compiled : {args.ops / fast:12.0f} ops/s  ({fast:.3f}s)")
        print(f"kernel speedup  : {pure / fast:12.2f}x")
    else:
        print("kernel compiled : not built")

    fold_pure = run_fold(PyTextCore)
    print(f"fold pure       : {fold_pure:12.3f}s")
    if SpeedTextCore is not None:
        fold_fast = run_fold(SpeedTextCore)
        print(f"fold compiled   : {fold_fast:12.3f}s")
        print(f"fold speedup    : {fold_pure / fold_fast:12.2f}x")


if __name__ == "__main__":
    main()
