"""Code-block execution: one interpreter session per document.

The session is an out-of-process worker (promptpad.execworker) speaking the
framed line protocol, so an infinite loop or crash in user code never takes
the host down: the parent enforces a wall-clock deadline and kills the
worker, keeping whatever output already streamed. Variables persist across
executions within a document, notebook style; resetSession discards the
worker (fresh namespace) and touches nothing else.

Execution state is disjoint from generation caches by construction — this
module never sees the oracle, and the isolation tests assert both stores'
fingerprints across each other's activity.
"""

from __future__ import annotations

import json
import os
import select
import subprocess
import sys
import time
from dataclasses import dataclass


class RunnerUnavailable(Exception):
    pass


@dataclass(frozen=True)
class ExecResult:
    block_id: str
    status: str  # ok | error | timeout
    stdout: str
    stderr: str
    value_repr: str | None
    duration_ms: int
    executed_version_no: int

    def to_obj(self) -> dict:
        return {
            "blockId": self.block_id,
            "status": self.status,
            "stdout": self.stdout,
            "stderr": self.stderr,
            "valueRepr": self.value_repr,
            "durationMs": self.duration_ms,
            "executedVersionNo": self.executed_version_no,
        }


class ExecSession:
    """One worker process; serialized execution within it."""

    def __init__(self, python: str | None = None):
        self._python = python or sys.executable
        self._proc: subprocess.Popen | None = None
        self._buf = b""
        self._next_id = 0

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    [self._python, "-m", "promptpad.execworker"],
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL,
                    bufsize=0,
                )
            except OSError as exc:
                raise RunnerUnavailable(str(exc)) from exc
            self._buf = b""
        return self._proc

    def _kill(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except Exception:
                pass
            self._proc = None
            self._buf = b""

    def close(self) -> None:
        self._kill()

    def reset(self) -> None:
        # fresh namespace == fresh worker; cheapest correct reset
        self._kill()

    def _read_frame(self, deadline: float) -> dict | None:
        proc = self._proc
        assert proc is not None and proc.stdout is not None
        fd = proc.stdout.fileno()
        while True:
            nl = self._buf.find(b"\n")
            if nl >= 0:
                line = self._buf[:nl]
                self._buf = self._buf[nl + 1 :]
                if line.strip():
                    return json.loads(line.decode("utf-8"))
                continue
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                return None
            data = os.read(fd, 65536)
            if not data:
                raise RunnerUnavailable("worker closed its pipe")
            self._buf += data

    def run(self, code: str, timeout_ms: int) -> tuple[str, str, str, str | None, int]:
        """Returns (status, stdout, stderr, value_repr, duration_ms)."""
        proc = self._ensure()
        self._next_id += 1
        eid = self._next_id
        started = time.monotonic()
        try:
            assert proc.stdin is not None
            proc.stdin.write(
                (json.dumps({"op": "exec", "id": eid, "code": code}) + "\n").encode()
            )
            proc.stdin.flush()
        except (OSError, BrokenPipeError) as exc:
            self._kill()
            raise RunnerUnavailable(str(exc)) from exc

        deadline = started + timeout_ms / 1000.0
        out_parts: list[str] = []
        err_parts: list[str] = []
        while True:
            try:
                frame = self._read_frame(deadline)
            except RunnerUnavailable:
                self._kill()
                return (
                    "error",
                    "".join(out_parts),
                    "".join(err_parts) + "\n[worker crashed]",
                    None,
                    int((time.monotonic() - started) * 1000),
                )
            if frame is None:
                # wall clock exceeded: kill, keep partial output
                self._kill()
                return (
                    "timeout",
                    "".join(out_parts),
                    "".join(err_parts),
                    None,
                    int((time.monotonic() - started) * 1000),
                )
            if frame.get("id") != eid:
                continue
            if "stream" in frame:
                (out_parts if frame["stream"] == "out" else err_parts).append(
                    frame.get("chunk", "")
                )
                continue
            return (
                frame.get("status", "error"),
                "".join(out_parts),
                "".join(err_parts),
                frame.get("valueRepr"),
                int(frame.get("durationMs", 0)),
            )


class SandboxManager:
    """Sessions keyed by document; executions serialized per document."""

    def __init__(self, python: str | None = None):
        self._python = python
        self._sessions: dict[str, ExecSession] = {}
        self.executions = 0

    def fingerprint(self) -> tuple:
        return (self.executions, tuple(sorted(self._sessions)))

    def session(self, doc_id: str) -> ExecSession:
        sess = self._sessions.get(doc_id)
        if sess is None:
            sess = ExecSession(self._python)
            self._sessions[doc_id] = sess
        return sess

    def execute(
        self,
        doc_id: str,
        block_id: str,
        code: str,
        executed_version_no: int,
        timeout_ms: int = 10_000,
    ) -> ExecResult:
        status, out, err, value, duration = self.session(doc_id).run(code, timeout_ms)
        self.executions += 1
        return ExecResult(
            block_id=block_id,
            status=status,
            stdout=out,
            stderr=err,
            value_repr=value,
            duration_ms=duration,
            executed_version_no=executed_version_no,
        )

    def reset_session(self, doc_id: str) -> None:
        sess = self._sessions.get(doc_id)
        if sess is not None:
            sess.reset()

    def close(self) -> None:
        for sess in self._sessions.values():
            sess.close()
        self._sessions.clear()
