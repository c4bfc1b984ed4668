"""Per-block version records, line diffs, and rollback support.

History is linear per block: every content change appends one record (a
rollback appends a new head rather than rewriting), version numbers are
gap-free, and each record snapshots the prompt/code pair so the history
view can show both sides of any iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

MANUAL_EDIT = "manual-edit"
REFER = "refer"
REQUEST_RESOLVE = "request-resolve"
SHARE_ACCEPT = "share-accept"
SYNC_PROPAGATE = "sync-propagate"
REGENERATE = "regenerate"
ROLLBACK = "rollback"
UNLINK_AUDIT = "unlink-audit"
NOOP_AUDIT = "no-op-audit"

CAUSES = (
    MANUAL_EDIT,
    REFER,
    REQUEST_RESOLVE,
    SHARE_ACCEPT,
    SYNC_PROPAGATE,
    REGENERATE,
    ROLLBACK,
    UNLINK_AUDIT,
    NOOP_AUDIT,
)

AUDIT_CAUSES = (UNLINK_AUDIT, NOOP_AUDIT)

# causes produced by link propagation; their records must carry the link id
LINKED_CAUSES = (REFER, REQUEST_RESOLVE, SHARE_ACCEPT, SYNC_PROPAGATE)


@dataclass(frozen=True)
class VersionRecord:
    block_id: str
    version_no: int
    prompt_text: str
    code_text: str
    cause: str
    actor: str
    link_id: str | None
    lamport: int
    parent_version_no: int
    op_id: str

    def to_obj(self) -> dict:
        return {
            "blockId": self.block_id,
            "versionNo": self.version_no,
            "promptText": self.prompt_text,
            "codeText": self.code_text,
            "cause": self.cause,
            "actor": self.actor,
            "linkId": self.link_id,
            "lamport": self.lamport,
            "parentVersionNo": self.parent_version_no,
            "opId": self.op_id,
        }

    @classmethod
    def from_obj(cls, o: dict) -> "VersionRecord":
        return cls(
            block_id=o["blockId"],
            version_no=o["versionNo"],
            prompt_text=o["promptText"],
            code_text=o["codeText"],
            cause=o["cause"],
            actor=o["actor"],
            link_id=o["linkId"],
            lamport=o["lamport"],
            parent_version_no=o["parentVersionNo"],
            op_id=o["opId"],
        )


def export_records(records) -> str:
    """Newline-delimited structured-text export, stable field order."""
    import json

    return "\n".join(
        json.dumps(r.to_obj(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        for r in records
    )


# -- line diff ------------------------------------------------------------
#
# Myers O(ND) shortest edit script over lines. The script is a list of runs:
# ["keep", n] | ["del", n] | ["ins", [lines...]]. Applying it to the `from`
# text reproduces the `to` text byte-exactly (texts are "\n".join of their
# line split, which is lossless).


def _myers_lcs_script(a: list[str], b: list[str]) -> list[tuple[str, object]]:
    n, m = len(a), len(b)
    if n == 0 and m == 0:
        return []
    maxd = n + m
    v = {1: 0}
    trace = []
    for d in range(maxd + 1):
        trace.append(dict(v))
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v.get(k - 1, -1) < v.get(k + 1, -1)):
                x = v.get(k + 1, 0)
            else:
                x = v.get(k - 1, 0) + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[k] = x
            if x >= n and y >= m:
                return _backtrack(trace, a, b, d, k)
    raise AssertionError("unreachable")


def _backtrack(trace, a, b, d, k) -> list[tuple[str, object]]:
    ops: list[tuple[str, object]] = []  # reversed atomic ops
    x, y = len(a), len(b)
    for depth in range(d, 0, -1):
        # trace[depth] is the V the forward pass read during round `depth`
        v = trace[depth]
        k = x - y
        if k == -depth or (k != depth and v.get(k - 1, -1) < v.get(k + 1, -1)):
            prev_k = k + 1  # came from a down move (insertion)
        else:
            prev_k = k - 1  # came from a right move (deletion)
        prev_x = v.get(prev_k, 0)
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            ops.append(("keep", a[x - 1]))
            x -= 1
            y -= 1
        if prev_k == k + 1:
            ops.append(("ins", b[y - 1]))
            y -= 1
        else:
            ops.append(("del", a[x - 1]))
            x -= 1
    while x > 0 and y > 0:
        ops.append(("keep", a[x - 1]))
        x -= 1
        y -= 1
    ops.reverse()
    return ops


def line_diff(from_text: str, to_text: str) -> list[list]:
    """Minimal line edit script from from_text to to_text."""
    if from_text == to_text:
        return []
    a = from_text.split("\n")
    b = to_text.split("\n")
    atomic = _myers_lcs_script(a, b)
    runs: list[list] = []
    for op, payload in atomic:
        if op == "keep":
            if runs and runs[-1][0] == "keep":
                runs[-1][1] += 1
            else:
                runs.append(["keep", 1])
        elif op == "del":
            if runs and runs[-1][0] == "del":
                runs[-1][1] += 1
            else:
                runs.append(["del", 1])
        else:
            if runs and runs[-1][0] == "ins":
                runs[-1][1].append(payload)
            else:
                runs.append(["ins", [payload]])
    return runs


def apply_line_diff(from_text: str, script: list[list]) -> str:
    if not script:
        return from_text
    a = from_text.split("\n")
    out: list[str] = []
    i = 0
    for run in script:
        op = run[0]
        if op == "keep":
            out.extend(a[i : i + run[1]])
            i += run[1]
        elif op == "del":
            i += run[1]
        elif op == "ins":
            out.extend(run[1])
        else:
            raise ValueError(f"bad diff run: {run!r}")
    if i != len(a):
        raise ValueError("diff script does not consume source")
    return "\n".join(out)


def diff_records(from_rec: VersionRecord, to_rec: VersionRecord) -> dict:
    """Prompt and code diffed separately."""
    return {
        "prompt": line_diff(from_rec.prompt_text, to_rec.prompt_text),
        "code": line_diff(from_rec.code_text, to_rec.code_text),
    }
