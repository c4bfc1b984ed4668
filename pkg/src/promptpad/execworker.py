"""Interpreter worker child process. Stdlib only.

Protocol (one JSON object per line, both directions):
  parent -> {"op": "exec", "id": n, "code": "..."}
          | {"op": "reset", "id": n}
  child  -> {"id": n, "stream": "out"|"err", "chunk": "..."}   (repeated)
          | {"id": n, "status": "ok"|"error", "durationMs": m, "valueRepr": r|null}

Output chunks are flushed immediately so the parent keeps partial output
when it kills the worker on timeout. Session state persists in one shared
namespace across exec requests, notebook style.
"""

import ast
import io
import json
import sys
import time
import traceback


def main() -> None:
    real_out = sys.stdout
    ns: dict = {"__name__": "__main__"}

    def send(obj) -> None:
        real_out.write(json.dumps(obj) + "\n")
        real_out.flush()

    class _Stream(io.TextIOBase):
        def __init__(self, name: str, eid) -> None:
            self._name = name
            self._eid = eid

        def writable(self) -> bool:
            return True

        def write(self, s: str) -> int:
            if s:
                send({"id": self._eid, "stream": self._name, "chunk": s})
            return len(s)

    for raw in sys.stdin:
        raw = raw.strip()
        if not raw:
            continue
        msg = json.loads(raw)
        eid = msg.get("id")
        if msg.get("op") == "reset":
            ns = {"__name__": "__main__"}
            send({"id": eid, "status": "ok", "durationMs": 0, "valueRepr": None})
            continue
        if msg.get("op") != "exec":
            send({"id": eid, "status": "error", "durationMs": 0, "valueRepr": None})
            continue

        code = msg.get("code", "")
        started = time.monotonic()
        status = "ok"
        value_repr = None
        saved = (sys.stdout, sys.stderr)
        try:
            tree = ast.parse(code)
            last_expr = None
            if tree.body and isinstance(tree.body[-1], ast.Expr):
                last_expr = ast.Expression(tree.body[-1].value)
                tree.body = tree.body[:-1]
            sys.stdout = _Stream("out", eid)
            sys.stderr = _Stream("err", eid)
            try:
                exec(compile(tree, "<block>", "exec"), ns)
                if last_expr is not None:
                    value = eval(compile(last_expr, "<block>", "eval"), ns)
                    if value is not None:
                        value_repr = repr(value)
            finally:
                sys.stdout, sys.stderr = saved
        except BaseException:
            status = "error"
            send({"id": eid, "stream": "err", "chunk": traceback.format_exc()})
        duration = int((time.monotonic() - started) * 1000)
        send({"id": eid, "status": status, "durationMs": duration, "valueRepr": value_repr})


if __name__ == "__main__":
    main()
