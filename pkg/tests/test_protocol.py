"""Frame codec, stream framing, gesture translation."""

import pytest

from promptpad.client import GESTURE_TO_INTENT, gesture_to_intent
from promptpad.protocol import Frame, ProtocolError, StreamDecoder, encode_stream


def test_frame_round_trip():
    f = Frame("hello", "doc-1", {"x": 1}, actor="a", frontier={"a": 3})
    decoded = Frame.decode(f.encode())
    assert decoded == f


def test_unknown_type_rejected():
    with pytest.raises(ProtocolError):
        Frame.decode('{"type": "bogus", "docId": "d", "payload": {}}')
    with pytest.raises(ProtocolError):
        Frame.decode("not json")


def test_canonical_encoding_is_stable():
    f = Frame("op", "d", {"b": 2, "a": 1})
    assert f.encode() == Frame.decode(f.encode()).encode()
    assert '"a":1' in f.encode()


def test_stream_framing_round_trip():
    frames = [
        Frame("hello", "d", {}, actor="u", frontier={}),
        Frame("op", "d", {"ops": []}),
        Frame("popup", "d", {"linkId": "x"}),
    ]
    blob = b"".join(encode_stream(f) for f in frames)
    dec = StreamDecoder()
    out = []
    # feed in awkward chunk sizes
    for i in range(0, len(blob), 7):
        out.extend(dec.feed(blob[i : i + 7]))
    assert out == frames


def test_stream_decoder_rejects_garbage_length():
    dec = StreamDecoder()
    with pytest.raises(ProtocolError):
        dec.feed(b"xyz\n{}")


class TestGestureTranslation:
    def test_every_gesture_has_args_schema(self):
        from promptpad.client import _GESTURE_ARGS

        assert set(GESTURE_TO_INTENT) == set(_GESTURE_ARGS)

    def test_select_then_mechanism_sequence(self):
        g1 = gesture_to_intent(
            {"gesture": "selectNode", "blockId": "b1", "start": 0, "end": 4}, 1
        )
        g2 = gesture_to_intent(
            {"gesture": "mechanismIcon", "kind": "refer", "source": "a1",
             "target": "a2", "message": "ctx"},
            2,
        )
        assert g1 == {"reqId": 1, "intent": "createAnchor",
                      "args": {"blockId": "b1", "start": 0, "end": 4}}
        assert g2["intent"] == "createLink"
        assert g2["args"]["message"] == "ctx"

    def test_absent_optionals_omitted(self):
        g = gesture_to_intent(
            {"gesture": "addBlock", "kind": "prompt", "content": "x"}, 3
        )
        assert "afterBlockId" not in g["args"]

    def test_popup_actions(self):
        assert gesture_to_intent({"gesture": "popupAccept", "linkId": "l"}, 1)[
            "intent"
        ] == "acceptShare"
        assert gesture_to_intent({"gesture": "popupDecline", "linkId": "l"}, 2)[
            "intent"
        ] == "declineShare"
        assert gesture_to_intent({"gesture": "dehighlightLink", "linkId": "l"}, 3)[
            "intent"
        ] == "unlink"

    def test_unknown_gesture_raises(self):
        with pytest.raises(KeyError):
            gesture_to_intent({"gesture": "wave"}, 1)
