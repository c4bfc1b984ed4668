"""Message panel: emission, auto-processing, canonical ordering."""

import pytest

from promptpad.actionlog import UnknownMessage, canonical_order, list_for
from promptpad.engine import Engine
from promptpad.genai import MockOracle
from promptpad.replica import Replica


def build_request_flow():
    server = Replica("doc", "server")
    engine = Engine(server, MockOracle())
    tgt = server.insert_block("prompt", "target body")
    src = server.insert_block("prompt", "needs [thing]")
    at = server.create_anchor(tgt, 0, 6)
    asrc = server.create_anchor(src, 6, 13)
    link = server.create_link("request", asrc, at, "special keyword")
    engine.pump()
    return server, engine, link, tgt


def test_one_message_per_event(replica):
    p1 = replica.insert_block("prompt", "aaa bbb")
    p2 = replica.insert_block("prompt", "ccc ddd")
    a1 = replica.create_anchor(p1, 0, 3)
    a2 = replica.create_anchor(p2, 0, 3)
    replica.create_link("link", a1, a2)
    types = [m.action_type for m in replica.state.messages.values()]
    assert types == ["link-created"]


def test_duplicate_event_id_no_second_message(replica):
    p1 = replica.insert_block("prompt", "aaa bbb")
    p2 = replica.insert_block("prompt", "ccc ddd")
    a1 = replica.create_anchor(p1, 0, 3)
    a2 = replica.create_anchor(p2, 0, 3)
    replica.create_link("link", a1, a2)
    op = replica.log[-1]
    before = len(replica.state.messages)
    replica.state.apply(op)  # idempotent re-apply of the same event
    assert len(replica.state.messages) == before


def test_request_resolution_auto_processes_pending():
    server, engine, link, tgt = build_request_flow()
    pending = [m for m in server.state.messages.values()
               if m.action_type == "request-pending"]
    assert len(pending) == 1 and not pending[0].processed
    server.edit_block_text(tgt, [(0, 6, "special keyword added")])
    engine.pump()
    assert pending[0].processed
    resolved = [m for m in server.state.messages.values()
                if m.action_type == "request-resolved"]
    assert len(resolved) == 1


def test_manual_resolve_idempotent_and_unknown_rejected():
    server, engine, link, tgt = build_request_flow()
    msg = next(iter(server.state.messages.values()))
    server.resolve_message(msg.id)
    server.resolve_message(msg.id)
    assert server.state.messages[msg.id].processed
    with pytest.raises(UnknownMessage):
        server.resolve_message("nope/0")


def test_canonical_ordering_unprocessed_first():
    server, engine, link, tgt = build_request_flow()
    server.edit_block_text(tgt, [(0, 6, "special keyword done")])
    engine.pump()  # resolves request + emits auto-update (unprocessed)
    ordered = canonical_order(server.state.messages.values())
    flags = [m.processed for m in ordered]
    assert flags == sorted(flags)  # unprocessed block strictly first
    unprocessed = [m for m in ordered if not m.processed]
    assert unprocessed == sorted(unprocessed, key=lambda m: (-m.lamport, -m.seq))


def test_empty_log_lists_empty(replica):
    assert list_for(replica.state.messages.values()) == []


def test_filter_by_link():
    server, engine, link, tgt = build_request_flow()
    only = list_for(server.state.messages.values(), link_id=link)
    assert only and all(m.link_id == link for m in only)
    assert list_for(server.state.messages.values(), link_id="other") == []


def test_messages_tie_to_blocks_for_navigation():
    server, engine, link, tgt = build_request_flow()
    pending = list_for(server.state.messages.values(), action_type="request-pending")
    assert pending[0].block_id in server.state.blocks
