# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of the pure-Python text kernel.

Same data model and algorithm as ``_pure.TextCore`` (position-identifier
sequence CRDT); the hot paths — sorted integration, tombstoning, visible
prefix counts, snapshot assembly — run as typed C loops. Parity with the
pure kernel is property-tested; either implementation can fold the same op
log to the same state.
"""

from cpython.bytearray cimport PyByteArray_AS_STRING
from cpython.list cimport PyList_GET_ITEM, PyList_GET_SIZE
from cpython.object cimport PyObject_RichCompareBool, Py_LT

cdef Py_ssize_t _bisect_left_from(list ids, object key, Py_ssize_t lo):
    cdef Py_ssize_t hi = PyList_GET_SIZE(ids)
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if PyObject_RichCompareBool(<object>PyList_GET_ITEM(ids, mid), key, Py_LT):
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _bisect_left(list ids, object key):
    return _bisect_left_from(ids, key, 0)


cdef Py_ssize_t _count_alive(bytearray alive, Py_ssize_t stop):
    cdef const char* buf = PyByteArray_AS_STRING(alive)
    cdef Py_ssize_t i, n = 0
    for i in range(stop):
        if buf[i]:
            n += 1
    return n


cdef class TextCore:
    cdef public list _ids
    cdef public list _chars
    cdef public bytearray _alive
    cdef Py_ssize_t _nalive
    cdef object _cache

    def __init__(self):
        self._ids = []
        self._chars = []
        self._alive = bytearray()
        self._nalive = 0
        self._cache = ""

    def clone(self):
        cdef TextCore t = TextCore.__new__(TextCore)
        t._ids = self._ids.copy()
        t._chars = self._chars.copy()
        t._alive = bytearray(self._alive)
        t._nalive = self._nalive
        t._cache = self._cache
        return t

    # -- queries ---------------------------------------------------------

    def text(self):
        cdef Py_ssize_t i, n
        cdef const char* buf
        if self._cache is None:
            n = PyList_GET_SIZE(self._chars)
            buf = PyByteArray_AS_STRING(self._alive)
            parts = []
            for i in range(n):
                if buf[i]:
                    parts.append(<object>PyList_GET_ITEM(self._chars, i))
            self._cache = "".join(parts)
        return self._cache

    def visible_len(self):
        return self._nalive

    def total_len(self):
        return len(self._ids)

    def _vis_before(self, idx):
        return _count_alive(self._alive, idx)

    def visible_full_indices(self):
        cdef Py_ssize_t i, n = len(self._alive)
        cdef const char* buf = PyByteArray_AS_STRING(self._alive)
        out = []
        for i in range(n):
            if buf[i]:
                out.append(i)
        return out

    def id_at_full(self, idx):
        return self._ids[idx]

    def neighbor_ids(self, full_idx_left):
        left = self._ids[full_idx_left] if full_idx_left >= 0 else None
        right = (
            self._ids[full_idx_left + 1]
            if full_idx_left + 1 < len(self._ids)
            else None
        )
        return left, right

    # -- application -------------------------------------------------------

    def apply_insert(self, list ids, str text):
        cdef Py_ssize_t idx = _bisect_left(self._ids, ids[0])
        cdef Py_ssize_t n = PyList_GET_SIZE(self._ids)
        cdef Py_ssize_t k = len(text)
        cdef Py_ssize_t i, at, pos
        if idx < n and self._ids[idx] == ids[0]:
            return None
        if idx == n or self._ids[idx] > ids[k - 1]:
            # fast path: the run interval is free (causal delivery case)
            self._ids[idx:idx] = ids
            self._chars[idx:idx] = list(text)
            self._alive[idx:idx] = b"\x01" * k
            self._nalive += k
            self._cache = None
            return [(_count_alive(self._alive, idx), k)]
        cdef list splices = []
        cdef Py_ssize_t last
        at = idx
        for i in range(k):
            at = _bisect_left_from(self._ids, ids[i], at)
            self._ids.insert(at, ids[i])
            self._chars.insert(at, text[i])
            self._alive.insert(at, 1)
            self._nalive += 1
            pos = _count_alive(self._alive, at)
            last = PyList_GET_SIZE(splices) - 1
            if last >= 0 and splices[last][0] + splices[last][1] == pos:
                splices[last] = (splices[last][0], splices[last][1] + 1)
            else:
                splices.append((pos, 1))
            at += 1
        self._cache = None
        return splices

    def apply_delete(self, dead_ids):
        cdef Py_ssize_t idx
        cdef list out = []
        cdef char* buf
        for did in dead_ids:
            idx = _bisect_left(self._ids, did)
            if idx < PyList_GET_SIZE(self._ids) and self._ids[idx] == did:
                buf = PyByteArray_AS_STRING(self._alive)
                if buf[idx]:
                    out.append(_count_alive(self._alive, idx))
                    buf[idx] = 0
                    self._nalive -= 1
        if out:
            self._cache = None
        return out

    # -- persistence ---------------------------------------------------------

    def dump(self):
        return [
            [[list(t) for t in i], c, int(a)]
            for i, c, a in zip(self._ids, self._chars, self._alive)
        ]

    @classmethod
    def load(cls, obj):
        cdef TextCore t = cls()
        for id_obj, ch, a in obj:
            t._ids.append(tuple(tuple(x) for x in id_obj))
            t._chars.append(ch)
            t._alive.append(1 if a else 0)
        t._nalive = t._alive.count(1)
        t._cache = None
        return t
