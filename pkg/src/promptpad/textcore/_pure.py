"""Sequence CRDT for block text, pure-Python reference implementation.

Every character carries a position identifier: a tuple of (digit, actor,
counter) triples, compared lexicographically. Applying an insert is a sorted
splice, so integration is order-free and two replicas that have seen the same
operations hold identical sequences. Deletion tombstones the character (the
id stays, so concurrent inserts can still address it).

Characters produced by one local edit form a *run*: they share the id path
and digit and take consecutive per-actor counters. Runs from different
actors therefore never interleave character-by-character, even when both
were allocated into the same gap.
"""

from __future__ import annotations

from bisect import bisect_left
from itertools import compress

# Digit space per path level. Left-biased allocation (+64 steps) keeps
# sequential appends at depth 1 for ~16k runs.
BASE = 1 << 20

# An id is tuple[(digit, actor, counter), ...]; ids sort lexicographically.
Id = tuple

_FLOOR = (0, "", 0)


def alloc_run(left, right, k, actor, ctr0):
    """Allocate k fresh ids strictly between left and right (None = edge).

    The ids share one path: path + (digit, actor, ctr0 + i). Uniqueness
    rests on the per-actor counter being never reused.
    """
    path = []
    d = 0
    while True:
        lt = left[d] if left is not None and d < len(left) else None
        rt = right[d] if right is not None and d < len(right) else None
        le = lt if lt is not None else _FLOOR
        if rt is not None and le == rt:
            # shared triple on both bounds: keep walking down both
            path.append(le)
            d += 1
            continue
        ln = le[0]
        rn = rt[0] if rt is not None else BASE
        if rn - ln > 1:
            v = ln + max(1, min(64, (rn - ln) // 2))
            pre = tuple(path)
            return [pre + ((v, actor, ctr0 + i),) for i in range(k)]
        # adjacent (or equal-digit, different triple): descend into the
        # left bound's subtree; everything там sorts below right already.
        path.append(le)
        d += 1
        right = None


def encode_run(ids, text):
    """Compact wire form of a freshly allocated run."""
    head = ids[0]
    v, actor, ctr = head[-1]
    return {
        "path": [list(t) for t in head[:-1]],
        "v": v,
        "actor": actor,
        "ctr": ctr,
        "text": text,
    }


def decode_run(obj):
    path = tuple(tuple(t) for t in obj["path"])
    v = obj["v"]
    actor = obj["actor"]
    ctr = obj["ctr"]
    text = obj["text"]
    ids = [path + ((v, actor, ctr + i),) for i in range(len(text))]
    return ids, text


class TextCore:
    """One block's character sequence (visible text + tombstones)."""

    __slots__ = ("_ids", "_chars", "_alive", "_nalive", "_cache")

    def __init__(self):
        self._ids = []
        self._chars = []
        self._alive = bytearray()
        self._nalive = 0
        self._cache = ""

    def clone(self):
        t = TextCore.__new__(TextCore)
        t._ids = self._ids.copy()
        t._chars = self._chars.copy()
        t._alive = bytearray(self._alive)
        t._nalive = self._nalive
        t._cache = self._cache
        return t

    # -- queries ---------------------------------------------------------

    def text(self):
        if self._cache is None:
            self._cache = "".join(compress(self._chars, self._alive))
        return self._cache

    def visible_len(self):
        return self._nalive

    def total_len(self):
        return len(self._ids)

    def _vis_before(self, idx):
        return self._alive[:idx].count(1) if idx else 0

    def visible_full_indices(self):
        """Full-sequence indices of the visible characters, in order."""
        return [i for i, a in enumerate(self._alive) if a]

    def id_at_full(self, idx):
        return self._ids[idx]

    def neighbor_ids(self, full_idx_left):
        """(left, right) ids around the gap after full index (or -1 = start)."""
        left = self._ids[full_idx_left] if full_idx_left >= 0 else None
        right = (
            self._ids[full_idx_left + 1]
            if full_idx_left + 1 < len(self._ids)
            else None
        )
        return left, right

    # -- application (idempotent, order-free) ----------------------------

    def apply_insert(self, ids, text):
        """Integrate a run; returns visible splices [(pos, n), ...] or None
        if the run is already present.

        Fast path: nothing sorts inside the run's id interval (always true
        under causal delivery, since an element between two run characters
        must have seen the run), so the whole run splices in at once. The
        general path integrates per character, so application stays correct
        under arbitrary delivery orders too.
        """
        idx = bisect_left(self._ids, ids[0])
        n = len(self._ids)
        if idx < n and self._ids[idx] == ids[0]:
            return None
        k = len(text)
        if idx == n or self._ids[idx] > ids[-1]:
            self._ids[idx:idx] = ids
            self._chars[idx:idx] = list(text)
            self._alive[idx:idx] = b"\x01" * k
            self._nalive += k
            self._cache = None
            return [(self._vis_before(idx), k)]
        splices = []
        at = idx
        for i in range(k):
            at = bisect_left(self._ids, ids[i], at)
            self._ids.insert(at, ids[i])
            self._chars.insert(at, text[i])
            self._alive.insert(at, 1)
            self._nalive += 1
            pos = self._vis_before(at)
            if splices and splices[-1][0] + splices[-1][1] == pos:
                splices[-1] = (splices[-1][0], splices[-1][1] + 1)
            else:
                splices.append((pos, 1))
            at += 1
        self._cache = None
        return splices

    def apply_delete(self, dead_ids):
        """Tombstone ids; returns visible positions, one splice per char.

        Positions are relative to the text as it shrinks, in order, so the
        caller can feed them to anchor transforms sequentially.
        """
        out = []
        ids = self._ids
        alive = self._alive
        for did in dead_ids:
            idx = bisect_left(ids, did)
            if idx < len(ids) and ids[idx] == did and alive[idx]:
                out.append(self._vis_before(idx))
                alive[idx] = 0
                self._nalive -= 1
        if out:
            self._cache = None
        return out

    # -- persistence ------------------------------------------------------

    def dump(self):
        return [
            [[list(t) for t in i], c, int(a)]
            for i, c, a in zip(self._ids, self._chars, self._alive)
        ]

    @classmethod
    def load(cls, obj):
        t = cls()
        for id_obj, ch, a in obj:
            t._ids.append(tuple(tuple(x) for x in id_obj))
            t._chars.append(ch)
            t._alive.append(1 if a else 0)
        t._nalive = t._alive.count(1)
        t._cache = None
        return t
