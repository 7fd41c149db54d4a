"""Wire codec: canonical bytes, strict decoding, totality under garbage."""

import json
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from tpo.protocol import (
    PROTOCOL_VERSION,
    ButtonPress,
    ExternalCommand,
    FeedbackCommand,
    Handshake,
    HandshakeReply,
    MissionBlock,
    MissionEvent,
    OperatorInput,
    ProtocolError,
    RobotState,
    SceneInfo,
    SceneObject,
    decode_message,
    encode_message,
    evaluate_handshake,
    message_type,
)

finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e9, max_value=1e9)
stamps = st.floats(min_value=0.0, max_value=1e6)
vec3 = st.tuples(finite, finite, finite)
names = st.text(st.characters(codec="ascii", min_codepoint=33, max_codepoint=126),
                min_size=1, max_size=12)

buttons = st.builds(
    ButtonPress,
    side=st.sampled_from(["right", "left"]),
    button=st.sampled_from([1, 2]),
    pressed=st.booleans(),
)

operator_inputs = st.builds(
    OperatorInput,
    t=stamps,
    right_wrist=vec3,
    left_wrist=vec3,
    buttons=st.lists(buttons, max_size=4).map(tuple),
)

external_commands = st.builds(ExternalCommand, t=stamps, token=names)

feedback_commands = st.builds(
    FeedbackCommand,
    t=stamps,
    device=st.sampled_from(["right_forearm", "right_finger", "left_forearm",
                            "left_finger"]),
    level=st.floats(0.0, 1.0),
    pulses=st.integers(0, 5),
)

mission_blocks = st.builds(
    MissionBlock,
    phase=st.sampled_from(["PickBottle", "PlaceInBox", "PressButton", "Done"]),
    failures=st.lists(st.sampled_from(["BottleDropped", "Collision"]),
                      max_size=2, unique=True).map(tuple),
    t_start=st.none() | stamps,
    t_end=st.none() | stamps,
)

points = st.lists(vec3, min_size=1, max_size=8).map(tuple)

robot_states = st.builds(
    RobotState,
    t=stamps,
    q_right=st.lists(finite, min_size=6, max_size=6).map(tuple),
    q_left=st.lists(finite, min_size=6, max_size=6).map(tuple),
    base_pos=vec3,
    base_heading=st.floats(-math.pi, math.pi),
    gripper_aperture=st.floats(0.0, 0.12),
    grasp_force=st.floats(0.0, 10.0),
    left_ee_force=st.floats(0.0, 50.0),
    right_active=st.booleans(),
    left_active=st.booleans(),
    control_point=st.sampled_from(["left_ee", "base"]),
    force_right=vec3,
    force_left=vec3,
    right_points=points,
    left_points=points,
    bottle_pos=vec3,
    mission=mission_blocks,
)

mission_events = st.builds(MissionEvent, t=stamps, kind=names)

handshakes = st.builds(
    Handshake,
    version=st.integers(0, 5),
    role=st.sampled_from(["operator", "ui-viewer", "command-channel"]),
)

handshake_replies = st.builds(
    HandshakeReply,
    accepted=st.booleans(),
    version=st.integers(0, 5),
    reason=st.text(max_size=40),
)

scene_objects = st.builds(
    SceneObject,
    id=names,
    role=names,
    shape=st.sampled_from(["sphere", "box"]),
    size=st.lists(st.floats(0.01, 2.0), min_size=1, max_size=3).map(tuple),
    position=vec3,
    heading=st.floats(-math.pi, math.pi),
)

scene_infos = st.builds(
    SceneInfo,
    condition=st.sampled_from(["A", "B", "C"]),
    objects=st.lists(scene_objects, max_size=6).map(tuple),
    footprint_radius=st.floats(0.05, 1.0),
    ee_radius=st.floats(0.01, 0.2),
    f_max=st.floats(1.0, 50.0),
)

messages = st.one_of(
    operator_inputs, external_commands, feedback_commands, robot_states,
    mission_events, handshakes, handshake_replies, scene_infos,
)


@given(messages)
def test_round_trip_identity(message):
    assert decode_message(encode_message(message)) == message


@given(messages)
def test_encoding_is_canonical(message):
    wire = encode_message(message)
    assert wire.endswith(b"\n")
    again = encode_message(decode_message(wire))
    assert again == wire
    obj = json.loads(wire)
    assert list(obj) == sorted(obj)
    compact = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode() + b"\n"
    assert wire == compact


def test_type_tags_are_distinct_per_class():
    seen = {
        message_type(OperatorInput(0.0, (0, 0, 0), (0, 0, 0))),
        message_type(ExternalCommand(0.0, "RIGHT")),
        message_type(Handshake(1, "operator")),
        message_type(MissionEvent(0.0, "started")),
    }
    assert len(seen) == 4


def test_unknown_type_is_structured():
    with pytest.raises(ProtocolError) as err:
        decode_message(b'{"type":"teleport","x":1}\n')
    assert err.value.kind == "unknown_type"


def test_unknown_field_is_structured():
    with pytest.raises(ProtocolError) as err:
        decode_message(b'{"type":"external_command","t":0.0,"token":"RIGHT","extra":1}\n')
    assert err.value.kind == "unknown_field"


def test_missing_field_is_structured():
    with pytest.raises(ProtocolError) as err:
        decode_message(b'{"type":"external_command","t":0.0}\n')
    assert err.value.kind == "missing_field"


def test_non_finite_numbers_rejected():
    with pytest.raises(ProtocolError) as err:
        decode_message(b'{"type":"mission_event","t":NaN,"kind":"x"}\n')
    assert err.value.kind == "bad_value"
    with pytest.raises(ProtocolError):
        decode_message(b'{"type":"mission_event","t":Infinity,"kind":"x"}\n')


def test_malformed_frames_rejected():
    for frame in (b"", b"\n", b"{", b"[1,2,3]\n", b"null\n", b'"hi"\n',
                  b"\xff\xfe junk", b'{"a":1}\n'):
        with pytest.raises(ProtocolError) as err:
            decode_message(frame)
        assert err.value.kind in ("malformed", "unknown_type")


def test_timestamps_round_to_microseconds():
    m = MissionEvent(t=1.23456789, kind="started")
    assert m.t == 1.234568
    assert b"1.234568" in encode_message(m)


def test_bool_is_not_a_number():
    with pytest.raises(ProtocolError):
        MissionEvent(t=True, kind="x")


@given(st.binary(max_size=300))
def test_decoder_is_total_over_bytes(blob):
    try:
        decode_message(blob)
    except ProtocolError:
        pass


@given(st.text(max_size=300))
def test_decoder_is_total_over_text(text):
    try:
        decode_message(text)
    except ProtocolError:
        pass


@settings(max_examples=30)
@given(st.recursive(
    st.none() | st.booleans() | st.integers() | st.floats(allow_nan=False) | st.text(max_size=8),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=8), inner, max_size=4),
    max_leaves=12,
))
def test_decoder_is_total_over_json_shapes(doc):
    try:
        decode_message(json.dumps(doc).encode())
    except ProtocolError:
        pass


def test_structured_fuzz_near_valid_frames():
    rng = random.Random(7)
    base = encode_message(ExternalCommand(1.0, "RIGHT"))
    for _ in range(2000):
        mutated = bytearray(base)
        for _ in range(rng.randint(1, 4)):
            mutated[rng.randrange(len(mutated))] = rng.randrange(256)
        try:
            decode_message(bytes(mutated))
        except ProtocolError:
            pass


def test_handshake_accepts_matching_version():
    reply = evaluate_handshake(Handshake(PROTOCOL_VERSION, "operator"), False)
    assert reply.accepted
    assert reply.version == PROTOCOL_VERSION


def test_handshake_rejects_version_mismatch():
    reply = evaluate_handshake(Handshake(PROTOCOL_VERSION + 1, "operator"), False)
    assert not reply.accepted
    assert "version" in reply.reason


def test_handshake_operator_role_is_exclusive():
    assert not evaluate_handshake(Handshake(PROTOCOL_VERSION, "operator"), True).accepted
    assert evaluate_handshake(Handshake(PROTOCOL_VERSION, "ui-viewer"), True).accepted
    assert evaluate_handshake(Handshake(PROTOCOL_VERSION, "command-channel"), True).accepted
