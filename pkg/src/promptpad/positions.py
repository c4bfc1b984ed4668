"""Fractional ordering keys for block positions.

Keys are base-62 digit strings read as fractions in (0, 1); lexicographic
order equals numeric order because keys never end in the zero digit.
Concurrent allocations into the same gap may collide, so document order
sorts by (key, block id) — the id carries the creating actor.
"""

from __future__ import annotations

DIGITS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"
_IDX = {c: i for i, c in enumerate(DIGITS)}
BASE = len(DIGITS)


def validate(key: str) -> None:
    if not key or any(c not in _IDX for c in key) or key.endswith(DIGITS[0]):
        raise ValueError(f"bad position key: {key!r}")


def _midpoint(a: str, b: str) -> str:
    """Digit string strictly between a and b (b == '' means the top bound)."""
    if b:
        n = 0
        while n < len(b) and (a[n] if n < len(a) else DIGITS[0]) == b[n]:
            n += 1
        if n > 0:
            return b[:n] + _midpoint(a[n:] if len(a) > n else "", b[n:])
    da = _IDX[a[0]] if a else 0
    db = _IDX[b[0]] if b else BASE
    if db - da > 1:
        return DIGITS[(da + db) // 2]
    # adjacent leading digits: extend on the a side
    if len(a) > 1:
        return a[0] + _midpoint(a[1:], "")
    return DIGITS[da] + _midpoint("", b[1:] if b else "")


def key_between(a: str | None, b: str | None) -> str:
    """New key with a < key < b; None bounds mean document start/end."""
    lo = a or ""
    hi = b or ""
    if a is not None:
        validate(a)
    if b is not None:
        validate(b)
    if a is not None and b is not None and a >= b:
        raise ValueError(f"bounds out of order: {a!r} >= {b!r}")
    key = _midpoint(lo, hi)
    assert (a is None or a < key) and (b is None or key < b)
    return key
