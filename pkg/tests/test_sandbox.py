"""Execution sessions: capture, timeout, reset, store isolation."""

import pytest

from promptpad.sandbox import SandboxManager


@pytest.fixture(scope="module")
def sandbox():
    sb = SandboxManager()
    yield sb
    sb.close()


def test_print_captured(sandbox):
    res = sandbox.execute("d", "b1", "print(1+1)", 1)
    assert res.status == "ok"
    assert res.stdout == "2\n"
    assert res.executed_version_no == 1


def test_infinite_loop_times_out_with_partial_output(sandbox):
    res = sandbox.execute(
        "d", "b2", "import time\nprint('started')\nwhile True: time.sleep(0.02)",
        2, timeout_ms=500,
    )
    assert res.status == "timeout"
    assert res.stdout == "started\n"


def test_session_state_shared_across_blocks(sandbox):
    assert sandbox.execute("d", "b3", "x = 3", 3).status == "ok"
    res = sandbox.execute("d", "b4", "print(x)", 4)
    assert res.status == "ok" and res.stdout == "3\n"


def test_reset_clears_session(sandbox):
    sandbox.execute("d", "b5", "y = 9", 5)
    sandbox.reset_session("d")
    res = sandbox.execute("d", "b6", "print(y)", 6)
    assert res.status == "error"
    assert "NameError" in res.stderr


def test_reset_fresh_doc_is_noop(sandbox):
    sandbox.reset_session("never-used")


def test_value_repr_of_last_expression(sandbox):
    res = sandbox.execute("d", "b7", "a = 40\na + 2", 7)
    assert res.status == "ok"
    assert res.value_repr == "42"


def test_error_produces_traceback(sandbox):
    res = sandbox.execute("d", "b8", "1/0", 8)
    assert res.status == "error"
    assert "ZeroDivisionError" in res.stderr


def test_determinism_same_code_same_prefix(sandbox):
    sandbox.reset_session("d2")
    first = sandbox.execute("d2", "c1", "v = 5\nprint(v * 3)", 1)
    sandbox.reset_session("d2")
    second = sandbox.execute("d2", "c1", "v = 5\nprint(v * 3)", 1)
    assert first.stdout == second.stdout == "15\n"


def test_sessions_are_per_document(sandbox):
    sandbox.execute("doc-a", "b", "q = 'a'", 1)
    res = sandbox.execute("doc-b", "b", "print(q)", 1)
    assert res.status == "error"


def test_execution_never_touches_document_or_oracle():
    from promptpad.genai import MockOracle
    from promptpad.server.service import DocSession

    session = DocSession("iso", MockOracle(), sandbox=SandboxManager())
    p = session.replica.state  # build a doc with a code block
    proxy = session.handle_intent(
        "u", {"reqId": 1, "intent": "insertBlock",
              "args": {"kind": "code", "content": "print('hi')"}},
    )
    block_id = next(
        f.payload["result"]["blockId"]
        for _, f in proxy
        if f.type == "intent-result"
    )
    doc_before = session.replica.state.snapshot_text()
    links_before = {k: l.state for k, l in session.replica.state.links.items()}
    oracle_before = session.oracle.fingerprint()
    session.handle_intent("u", {"reqId": 2, "intent": "execute",
                                "args": {"blockId": block_id}})
    assert session.replica.state.snapshot_text() == doc_before
    assert {k: l.state for k, l in session.replica.state.links.items()} == links_before
    assert session.oracle.fingerprint() == oracle_before
    assert session.replica.state.exec_results[block_id]["stdout"] == "hi\n"
    session.sandbox.close()


def test_reset_changes_no_version_records():
    from promptpad.genai import MockOracle
    from promptpad.server.service import DocSession

    session = DocSession("iso2", MockOracle(), sandbox=SandboxManager())
    out = session.handle_intent(
        "u", {"reqId": 1, "intent": "insertBlock",
              "args": {"kind": "code", "content": "z = 1"}},
    )
    history_before = {
        k: [r.to_obj() for r in v] for k, v in session.replica.state.history.items()
    }
    session.handle_intent("u", {"reqId": 2, "intent": "resetSession", "args": {}})
    history_after = {
        k: [r.to_obj() for r in v] for k, v in session.replica.state.history.items()
    }
    assert history_before == history_after
    session.sandbox.close()
