import random

import pytest

from promptpad.engine import Engine
from promptpad.genai import MockOracle
from promptpad.replica import Replica


@pytest.fixture
def replica():
    return Replica("doc", "alice")


@pytest.fixture
def engine_replica():
    r = Replica("doc", "server")
    return Engine(r, MockOracle()), r


def make_pair(doc_id="doc"):
    """Server replica with engine plus two user replicas, star-routed."""
    server = Replica(doc_id, "server")
    engine = Engine(server, MockOracle())
    users = {"alice": Replica(doc_id, "alice"), "bob": Replica(doc_id, "bob")}

    def sync():
        for rep in users.values():
            server.integrate(rep.take_outbox())
        engine.pump()
        for rep in users.values():
            rep.integrate(
                [op for op in server.log if (op.actor, op.seq) not in rep.known]
            )
        server.take_outbox()

    return server, engine, users, sync


def seeded_shuffle(items, seed):
    out = list(items)
    random.Random(seed).shuffle(out)
    return out
