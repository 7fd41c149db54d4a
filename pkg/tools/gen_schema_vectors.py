"""Regenerate the shared wire-schema test vectors.

The browser console has its own codec, so both codecs are pinned to one
fixture file: every valid vector must decode and re-encode to the exact
frame bytes on both sides, and every invalid vector must fail with the
same structured error kind.  Frames are stored without the trailing
newline; transports add it.

The robot_state and feedback_command samples are lifted from a real run
of the bundled mission script, so they carry realistic float noise.  The
float zoo vectors pin the canonical number formatting in the zones where
naive formatters disagree (integral floats, negative zero, and the
exponent-notation cutovers).

Usage: python3 tools/gen_schema_vectors.py
"""

from __future__ import annotations

import json
from pathlib import Path

from tpo import protocol
from tpo.config import load_bundle
from tpo.server import scene_info
from tpo.session import Session, load_script_file, scripted_operator

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "schema_vectors.json"


def _live_samples() -> list[protocol.WireMessage]:
    """A robot_state, a pulsed feedback_command, and a mission_event from
    the first seconds of the demo mission."""
    bundle = load_bundle()
    script = load_script_file("scripts/paper_mission_demo")
    session = Session(bundle)
    ticks_per_input = max(1, round(1.0 / (script.input_hz * bundle.profile.dt)))
    state = pulsed = event = None
    for msg in scripted_operator(script):
        if msg.t > 3.0:
            break
        session.submit(msg)
        for _ in range(ticks_per_input):
            for frame in session.tick():
                if isinstance(frame, protocol.RobotState) and state is None:
                    state = frame
                if isinstance(frame, protocol.FeedbackCommand) and frame.pulses:
                    pulsed = pulsed or frame
                if isinstance(frame, protocol.MissionEvent):
                    event = event or frame
    assert state is not None and pulsed is not None and event is not None
    return [state, pulsed, event]


def _valid_messages() -> list[tuple[str, protocol.WireMessage]]:
    msgs: list[tuple[str, protocol.WireMessage]] = [
        ("operator_input_rest", protocol.OperatorInput(
            t=0.0, right_wrist=(0.0, 0.0, 0.0), left_wrist=(0.0, 0.0, 0.0))),
        ("operator_input_buttons", protocol.OperatorInput(
            t=12.345678, right_wrist=(0.15, -0.02, 0.003),
            left_wrist=(-0.3, 0.0, 0.1),
            buttons=(protocol.ButtonPress("right", 1, True),
                     protocol.ButtonPress("left", 2, False)))),
        # canonical float formatting: integral values keep a decimal point,
        # negative zero keeps its sign, exponents are signed and two digits
        ("operator_input_float_zoo_a", protocol.OperatorInput(
            t=1.0, right_wrist=(1e16, -0.0, 1e-05),
            left_wrist=(0.1 + 0.2, 123456.789, -7.0))),
        ("operator_input_float_zoo_b", protocol.OperatorInput(
            t=0.000001, right_wrist=(2.5e-08, 1e21, 1.5e-06),
            left_wrist=(3.141592653589793, -2.718281828459045e16, 1e-100))),
        ("external_command_gripper", protocol.ExternalCommand(
            t=4.2, token="GRIPPER")),
        ("feedback_command_levels", protocol.FeedbackCommand(
            t=0.5, device="left_finger", level=1.0, pulses=0)),
        ("mission_event_started", protocol.MissionEvent(t=0.73, kind="started")),
        ("handshake_operator", protocol.Handshake(version=1, role="operator")),
        ("handshake_reply_rejected", protocol.HandshakeReply(
            accepted=False, version=1, reason="an operator is already connected")),
        ("handshake_reply_ok", protocol.HandshakeReply(accepted=True, version=1)),
        ("scene_info_default", scene_info(load_bundle())),
    ]
    state, pulsed, event = _live_samples()
    msgs += [
        ("robot_state_live", state),
        ("feedback_command_live_pulse", pulsed),
        ("mission_event_live", event),
    ]
    return msgs


_INVALID = [
    ("garbage", "{]", "malformed"),
    ("not_an_object", "[1,2,3]", "malformed"),
    ("no_type_tag", '{"t":0.0}', "malformed"),
    ("bogus_type", '{"type":"telemetry","t":0.0}', "unknown_type"),
    ("extra_field", '{"type":"mission_event","t":0.0,"kind":"done","extra":1}',
     "unknown_field"),
    ("dropped_field", '{"type":"mission_event","t":0.0}', "missing_field"),
    ("wrist_too_short",
     '{"type":"operator_input","t":0.0,"right_wrist":[0,0],'
     '"left_wrist":[0,0,0],"buttons":[]}', "bad_value"),
    ("level_out_of_range",
     '{"type":"feedback_command","t":0.0,"device":"right_forearm",'
     '"level":1.5,"pulses":0}', "bad_value"),
    ("bool_as_number",
     '{"type":"handshake_reply","accepted":1,"version":1,"reason":""}',
     "bad_value"),
    ("string_timestamp", '{"type":"mission_event","t":"now","kind":"done"}',
     "bad_value"),
    ("bad_device",
     '{"type":"feedback_command","t":0.0,"device":"ankle","level":0.0,'
     '"pulses":0}', "bad_value"),
]


def main() -> None:
    valid = []
    for name, msg in _valid_messages():
        frame = protocol.encode_message(msg).decode().rstrip("\n")
        obj = msg.to_obj()
        obj["type"] = protocol.message_type(msg)
        valid.append({"name": name, "frame": frame, "obj": obj})

    invalid = [{"name": n, "frame": f, "kind": k} for n, f, k in _INVALID]

    # sanity: every invalid frame must fail with the declared kind
    for item in invalid:
        try:
            protocol.decode_message(item["frame"])
        except protocol.ProtocolError as exc:
            assert exc.kind == item["kind"], (item["name"], exc.kind)
        else:
            raise AssertionError(f"{item['name']} decoded but should not")

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"valid": valid, "invalid": invalid}, indent=2)
                   + "\n")
    print(f"wrote {OUT} ({len(valid)} valid, {len(invalid)} invalid)")


if __name__ == "__main__":
    main()
