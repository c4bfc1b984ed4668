"""Crash-safe persistence: append-only op log + state snapshots.

Log records are length-prefixed and CRC-guarded; replay stops at the first
torn or corrupt record and truncates the file there, so recovery is exact
up to the last synced offset. Snapshots store the full folded state with a
digest; recovery refolds the log and cross-checks the digest when a
snapshot is present.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from pathlib import Path

from .ops import SyncOp, canonical_json
from .replica import Replica

_LEN = struct.Struct("<I")


class EventLog:
    def __init__(self, path: str | Path, fsync_every: int = 8):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "ab")
        self.fsync_every = max(1, fsync_every)
        self._since_sync = 0
        self.synced_offset = self._fh.tell()

    def append(self, payload: bytes) -> int:
        rec = _LEN.pack(len(payload)) + payload + _LEN.pack(zlib.crc32(payload))
        self._fh.write(rec)
        self._since_sync += 1
        if self._since_sync >= self.fsync_every:
            self.flush()
        return self._fh.tell()

    def flush(self) -> int:
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._since_sync = 0
        self.synced_offset = self._fh.tell()
        return self.synced_offset

    def close(self) -> None:
        try:
            self.flush()
        finally:
            self._fh.close()

    @staticmethod
    def replay(path: str | Path) -> tuple[list[bytes], int]:
        """All intact payloads plus the offset where the intact prefix ends."""
        payloads: list[bytes] = []
        good_end = 0
        p = Path(path)
        if not p.exists():
            return payloads, 0
        data = p.read_bytes()
        at = 0
        n = len(data)
        while at + 4 <= n:
            (length,) = _LEN.unpack_from(data, at)
            end = at + 4 + length + 4
            if end > n:
                break  # torn tail
            payload = data[at + 4 : at + 4 + length]
            (crc,) = _LEN.unpack_from(data, at + 4 + length)
            if crc != zlib.crc32(payload):
                break  # corrupt record: ignore it and everything after
            payloads.append(payload)
            at = end
            good_end = at
        return payloads, good_end

    @staticmethod
    def truncate_to(path: str | Path, offset: int) -> None:
        with open(path, "r+b") as fh:
            fh.truncate(offset)


class DocStore:
    """Per-document directory: ops.log + snapshot.json."""

    def __init__(self, root: str | Path, doc_id: str, fsync_every: int = 8):
        self.doc_id = doc_id
        self.dir = Path(root) / doc_id
        self.dir.mkdir(parents=True, exist_ok=True)
        self.log = EventLog(self.dir / "ops.log", fsync_every=fsync_every)

    @property
    def snapshot_path(self) -> Path:
        return self.dir / "snapshot.json"

    def append_op(self, op: SyncOp) -> int:
        return self.log.append(canonical_json(op.to_obj()).encode("utf-8"))

    def flush(self) -> int:
        return self.log.flush()

    def write_snapshot(self, replica: Replica) -> None:
        offset = self.log.flush()
        body = canonical_json(
            {
                "uptoOffset": offset,
                "frontier": replica.frontier(),
                "digest": replica.state.digest(),
                "state": replica.state.dump_full(),
            }
        )
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_text(body, encoding="utf-8")
        os.replace(tmp, self.snapshot_path)

    def read_snapshot(self) -> dict | None:
        if not self.snapshot_path.exists():
            return None
        try:
            return json.loads(self.snapshot_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None

    def close(self) -> None:
        self.log.close()


def restore_actor_counters(replica: Replica) -> None:
    """Resume the replica's own seq and element counters past the log.

    Without this a recovered server would mint (actor, seq) and element ids
    it already used before the crash.
    """
    me = replica.actor
    replica.seq = replica.vv.get(me, 0)
    top = 0

    def scan_run(run) -> int:
        if not run or run.get("actor") != me:
            return 0
        return int(run.get("ctr", 0)) + len(run.get("text", ""))

    for op in replica.log:
        if op.kind == "insert-block":
            top = max(top, scan_run(op.payload.get("run")))
        elif op.kind == "text-edit":
            for entry in op.payload.get("edits", ()):
                for part in entry.get("parts", ()):
                    top = max(top, scan_run(part.get("ins")))
    replica.char_ctr = max(replica.char_ctr, top)


def recover_replica(root: str | Path, doc_id: str, actor: str = "server") -> tuple[Replica, int, bool]:
    """Rebuild a replica by refolding the intact log prefix.

    Returns (replica, good_end_offset, digest_ok). digest_ok is False only
    when a snapshot exists, covers the replayed prefix, and disagrees with
    the refolded state — which would indicate corruption.
    """
    log_path = Path(root) / doc_id / "ops.log"
    payloads, good_end = EventLog.replay(log_path)
    if log_path.exists():
        size = log_path.stat().st_size
        if good_end < size:
            EventLog.truncate_to(log_path, good_end)
    replica = Replica(doc_id, actor)
    ops = [SyncOp.from_obj(json.loads(p.decode("utf-8"))) for p in payloads]
    replica.integrate(ops)
    replica.take_outbox()
    restore_actor_counters(replica)

    digest_ok = True
    snap_path = Path(root) / doc_id / "snapshot.json"
    if snap_path.exists():
        try:
            snap = json.loads(snap_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            snap = None
        if snap and snap.get("uptoOffset", 0) == good_end:
            digest_ok = snap.get("digest") == replica.state.digest()
    return replica, good_end, digest_ok
