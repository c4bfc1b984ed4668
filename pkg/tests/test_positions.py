import pytest
from hypothesis import given, strategies as st

from promptpad.positions import DIGITS, key_between, validate


def test_first_key():
    k = key_between(None, None)
    validate(k)


def test_between_two():
    a = key_between(None, None)
    b = key_between(a, None)
    assert a < b
    mid = key_between(a, b)
    assert a < mid < b


def test_bad_order_rejected():
    with pytest.raises(ValueError):
        key_between("X", "B")
    with pytest.raises(ValueError):
        key_between("X", "X")


def test_trailing_zero_rejected():
    with pytest.raises(ValueError):
        key_between("A0", None)


@given(st.lists(st.integers(0, 10_000), min_size=1, max_size=120))
def test_random_insert_sequences_stay_ordered(choices):
    """Insert at arbitrary gaps; keys must stay strictly ordered and valid."""
    keys: list[str] = []
    for c in choices:
        if not keys:
            keys.append(key_between(None, None))
            continue
        gap = c % (len(keys) + 1)
        left = keys[gap - 1] if gap > 0 else None
        right = keys[gap] if gap < len(keys) else None
        k = key_between(left, right)
        validate(k)
        keys.insert(gap, k)
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


@given(st.integers(0, 61), st.integers(0, 61))
def test_single_digit_bounds(i, j):
    a, b = DIGITS[min(i, j)], DIGITS[max(i, j)]
    if a == b or b.endswith(DIGITS[0]) or a.endswith(DIGITS[0]):
        return
    k = key_between(a, b)
    assert a < k < b
