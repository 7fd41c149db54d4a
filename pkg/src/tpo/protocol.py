"""Wire schema shared by the TCP stream, the WebSocket bridge, and trial logs.

Frames are newline-delimited JSON objects tagged with "type".  Encoding is
canonical (sorted keys, no whitespace, shortest float repr), so identical
messages serialize to identical bytes and logs can be compared bytewise.
Decoding is strict: unknown types, unknown fields, missing fields, and
non-finite numbers are all structured errors, never crashes.

Timestamps are session-relative seconds rounded to microsecond precision
at construction, which keeps them bit-stable across platforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

PROTOCOL_VERSION = 1

_ROLES = ("operator", "ui-viewer", "command-channel")
_SIDES = ("right", "left")
_DEVICES = ("right_forearm", "right_finger", "left_forearm", "left_finger")
_CONTROL_POINTS = ("left_ee", "base")


class ProtocolError(ValueError):
    """Structured decode/validation failure.

    kind is one of: malformed, unknown_type, unknown_field, missing_field,
    bad_value, version_mismatch, role_conflict.
    """

    def __init__(self, kind: str, detail: str):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail


def _malformed(detail: str) -> ProtocolError:
    return ProtocolError("malformed", detail)


def _bad(detail: str) -> ProtocolError:
    return ProtocolError("bad_value", detail)


def _finite(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _bad(f"{name} must be a number, got {type(value).__name__}")
    v = float(value)
    if not math.isfinite(v):
        raise _bad(f"{name} must be finite")
    return v


def _vec3(value, name: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise _bad(f"{name} must be a 3-element array")
    return tuple(_finite(v, name) for v in value)


def _string(value, name: str, allowed: tuple[str, ...] | None = None) -> str:
    if not isinstance(value, str):
        raise _bad(f"{name} must be a string")
    if allowed is not None and value not in allowed:
        raise _bad(f"{name} must be one of {allowed}, got {value!r}")
    return value


def _boolean(value, name: str) -> bool:
    if not isinstance(value, bool):
        raise _bad(f"{name} must be a boolean")
    return value


def _integer(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _bad(f"{name} must be an integer")
    return value


def _stamp(t: float) -> float:
    return round(_finite(t, "t"), 6)


@dataclass(frozen=True)
class ButtonPress:
    side: str     # "right" | "left"
    button: int   # 1 | 2
    pressed: bool

    def __post_init__(self):
        _string(self.side, "button side", _SIDES)
        if _integer(self.button, "button index") not in (1, 2):
            raise _bad("button index must be 1 or 2")
        _boolean(self.pressed, "pressed")

    def to_obj(self):
        return {"side": self.side, "button": self.button, "pressed": self.pressed}

    @classmethod
    def from_obj(cls, obj):
        if not isinstance(obj, dict):
            raise _bad("button event must be an object")
        _check_keys(obj, {"side", "button", "pressed"}, "button event")
        return cls(obj["side"], obj["button"], obj["pressed"])


@dataclass(frozen=True)
class OperatorInput:
    t: float
    right_wrist: tuple[float, float, float]
    left_wrist: tuple[float, float, float]
    buttons: tuple[ButtonPress, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "t", _stamp(self.t))
        object.__setattr__(self, "right_wrist", _vec3(self.right_wrist, "right_wrist"))
        object.__setattr__(self, "left_wrist", _vec3(self.left_wrist, "left_wrist"))
        object.__setattr__(self, "buttons", tuple(self.buttons))

    def to_obj(self):
        return {
            "t": self.t,
            "right_wrist": list(self.right_wrist),
            "left_wrist": list(self.left_wrist),
            "buttons": [b.to_obj() for b in self.buttons],
        }

    @classmethod
    def from_obj(cls, obj):
        _check_keys(obj, {"t", "right_wrist", "left_wrist", "buttons"}, "OperatorInput")
        if not isinstance(obj["buttons"], list):
            raise _bad("buttons must be an array")
        return cls(
            t=obj["t"],
            right_wrist=obj["right_wrist"],
            left_wrist=obj["left_wrist"],
            buttons=tuple(ButtonPress.from_obj(b) for b in obj["buttons"]),
        )


@dataclass(frozen=True)
class ExternalCommand:
    t: float
    token: str

    def __post_init__(self):
        object.__setattr__(self, "t", _stamp(self.t))
        if not _string(self.token, "token"):
            raise _bad("token must be non-empty")

    def to_obj(self):
        return {"t": self.t, "token": self.token}

    @classmethod
    def from_obj(cls, obj):
        _check_keys(obj, {"t", "token"}, "ExternalCommand")
        return cls(t=obj["t"], token=obj["token"])


@dataclass(frozen=True)
class FeedbackCommand:
    t: float
    device: str   # one of the four wearable channels
    level: float  # squeeze level in [0, 1]
    pulses: int   # vibration pulses newly triggered at this instant

    def __post_init__(self):
        object.__setattr__(self, "t", _stamp(self.t))
        _string(self.device, "device", _DEVICES)
        level = _finite(self.level, "level")
        if not 0.0 <= level <= 1.0:
            raise _bad("level must lie in [0, 1]")
        object.__setattr__(self, "level", level)
        if _integer(self.pulses, "pulses") < 0:
            raise _bad("pulses must be nonnegative")

    def to_obj(self):
        return {"t": self.t, "device": self.device, "level": self.level,
                "pulses": self.pulses}

    @classmethod
    def from_obj(cls, obj):
        _check_keys(obj, {"t", "device", "level", "pulses"}, "FeedbackCommand")
        return cls(t=obj["t"], device=obj["device"], level=obj["level"],
                   pulses=obj["pulses"])


@dataclass(frozen=True)
class MissionBlock:
    phase: str
    failures: tuple[str, ...]
    t_start: float | None
    t_end: float | None

    def __post_init__(self):
        _string(self.phase, "mission phase")
        object.__setattr__(self, "failures", tuple(
            _string(f, "failure") for f in self.failures
        ))
        for name in ("t_start", "t_end"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _stamp(v))

    def to_obj(self):
        return {"phase": self.phase, "failures": list(self.failures),
                "t_start": self.t_start, "t_end": self.t_end}

    @classmethod
    def from_obj(cls, obj):
        if not isinstance(obj, dict):
            raise _bad("mission block must be an object")
        _check_keys(obj, {"phase", "failures", "t_start", "t_end"}, "mission block")
        if not isinstance(obj["failures"], list):
            raise _bad("failures must be an array")
        return cls(obj["phase"], tuple(obj["failures"]), obj["t_start"], obj["t_end"])


@dataclass(frozen=True)
class RobotState:
    t: float
    q_right: tuple[float, ...]
    q_left: tuple[float, ...]
    base_pos: tuple[float, float, float]
    base_heading: float
    gripper_aperture: float
    grasp_force: float
    left_ee_force: float
    right_active: bool
    left_active: bool
    control_point: str  # target of the left rope: "left_ee" | "base"
    force_right: tuple[float, float, float]
    force_left: tuple[float, float, float]
    right_points: tuple[tuple[float, float, float], ...]
    left_points: tuple[tuple[float, float, float], ...]
    bottle_pos: tuple[float, float, float]
    mission: MissionBlock

    def __post_init__(self):
        object.__setattr__(self, "t", _stamp(self.t))
        for name in ("q_right", "q_left"):
            q = getattr(self, name)
            if not isinstance(q, (list, tuple)) or not q:
                raise _bad(f"{name} must be a non-empty array")
            object.__setattr__(self, name, tuple(_finite(v, name) for v in q))
        object.__setattr__(self, "base_pos", _vec3(self.base_pos, "base_pos"))
        object.__setattr__(self, "base_heading", _finite(self.base_heading, "base_heading"))
        object.__setattr__(self, "gripper_aperture", _finite(self.gripper_aperture, "gripper_aperture"))
        for name in ("grasp_force", "left_ee_force"):
            v = _finite(getattr(self, name), name)
            if v < 0:
                raise _bad(f"{name} cannot be negative")
            object.__setattr__(self, name, v)
        _boolean(self.right_active, "right_active")
        _boolean(self.left_active, "left_active")
        _string(self.control_point, "control_point", _CONTROL_POINTS)
        object.__setattr__(self, "force_right", _vec3(self.force_right, "force_right"))
        object.__setattr__(self, "force_left", _vec3(self.force_left, "force_left"))
        for name in ("right_points", "left_points"):
            pts = getattr(self, name)
            if not isinstance(pts, (list, tuple)):
                raise _bad(f"{name} must be an array")
            object.__setattr__(self, name, tuple(_vec3(p, name) for p in pts))
        object.__setattr__(self, "bottle_pos", _vec3(self.bottle_pos, "bottle_pos"))
        if not isinstance(self.mission, MissionBlock):
            raise _bad("mission must be a mission block")

    def to_obj(self):
        return {
            "t": self.t,
            "q_right": list(self.q_right),
            "q_left": list(self.q_left),
            "base_pos": list(self.base_pos),
            "base_heading": self.base_heading,
            "gripper_aperture": self.gripper_aperture,
            "grasp_force": self.grasp_force,
            "left_ee_force": self.left_ee_force,
            "right_active": self.right_active,
            "left_active": self.left_active,
            "control_point": self.control_point,
            "force_right": list(self.force_right),
            "force_left": list(self.force_left),
            "right_points": [list(p) for p in self.right_points],
            "left_points": [list(p) for p in self.left_points],
            "bottle_pos": list(self.bottle_pos),
            "mission": self.mission.to_obj(),
        }

    @classmethod
    def from_obj(cls, obj):
        keys = {f.name for f in fields(cls)}
        _check_keys(obj, keys, "RobotState")
        kwargs = {k: obj[k] for k in keys if k != "mission"}
        for name in ("right_points", "left_points"):
            if not isinstance(kwargs[name], list):
                raise _bad(f"{name} must be an array")
            kwargs[name] = tuple(tuple(p) if isinstance(p, list) else p
                                 for p in kwargs[name])
        return cls(mission=MissionBlock.from_obj(obj["mission"]), **kwargs)


@dataclass(frozen=True)
class MissionEvent:
    t: float
    kind: str  # "started", "phase:<Phase>", "failure:<Kind>", "done"

    def __post_init__(self):
        object.__setattr__(self, "t", _stamp(self.t))
        if not _string(self.kind, "kind"):
            raise _bad("kind must be non-empty")

    def to_obj(self):
        return {"t": self.t, "kind": self.kind}

    @classmethod
    def from_obj(cls, obj):
        _check_keys(obj, {"t", "kind"}, "MissionEvent")
        return cls(t=obj["t"], kind=obj["kind"])


@dataclass(frozen=True)
class Handshake:
    version: int
    role: str  # "operator" | "ui-viewer" | "command-channel"

    def __post_init__(self):
        _integer(self.version, "version")
        _string(self.role, "role", _ROLES)

    def to_obj(self):
        return {"version": self.version, "role": self.role}

    @classmethod
    def from_obj(cls, obj):
        _check_keys(obj, {"version", "role"}, "Handshake")
        return cls(version=obj["version"], role=obj["role"])


@dataclass(frozen=True)
class HandshakeReply:
    accepted: bool
    version: int
    reason: str = ""

    def __post_init__(self):
        _boolean(self.accepted, "accepted")
        _integer(self.version, "version")
        _string(self.reason, "reason")

    def to_obj(self):
        return {"accepted": self.accepted, "version": self.version,
                "reason": self.reason}

    @classmethod
    def from_obj(cls, obj):
        _check_keys(obj, {"accepted", "version", "reason"}, "HandshakeReply")
        return cls(accepted=obj["accepted"], version=obj["version"],
                   reason=obj["reason"])


@dataclass(frozen=True)
class SceneObject:
    id: str
    role: str
    shape: str                                 # "sphere" | "box"
    size: tuple[float, ...]                    # (r,) or half-extents
    position: tuple[float, float, float]
    heading: float

    def __post_init__(self):
        _string(self.id, "object id")
        _string(self.role, "object role")
        _string(self.shape, "shape", ("sphere", "box"))
        if not isinstance(self.size, (list, tuple)) or not self.size:
            raise _bad("size must be a non-empty array")
        object.__setattr__(self, "size", tuple(_finite(v, "size") for v in self.size))
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        object.__setattr__(self, "heading", _finite(self.heading, "heading"))

    def to_obj(self):
        return {"id": self.id, "role": self.role, "shape": self.shape,
                "size": list(self.size), "position": list(self.position),
                "heading": self.heading}

    @classmethod
    def from_obj(cls, obj):
        if not isinstance(obj, dict):
            raise _bad("scene object must be an object")
        _check_keys(obj, {"id", "role", "shape", "size", "position", "heading"},
                    "scene object")
        return cls(obj["id"], obj["role"], obj["shape"], tuple(obj["size"]),
                   obj["position"], obj["heading"])


@dataclass(frozen=True)
class SceneInfo:
    """Sent once after a successful handshake so the UI can draw the world."""

    condition: str  # "A" | "B" | "C"
    objects: tuple[SceneObject, ...]
    footprint_radius: float
    ee_radius: float
    f_max: float

    def __post_init__(self):
        _string(self.condition, "condition", ("A", "B", "C"))
        object.__setattr__(self, "objects", tuple(self.objects))
        for name in ("footprint_radius", "ee_radius", "f_max"):
            v = _finite(getattr(self, name), name)
            if v <= 0:
                raise _bad(f"{name} must be positive")
            object.__setattr__(self, name, v)

    def to_obj(self):
        return {"condition": self.condition,
                "objects": [o.to_obj() for o in self.objects],
                "footprint_radius": self.footprint_radius,
                "ee_radius": self.ee_radius,
                "f_max": self.f_max}

    @classmethod
    def from_obj(cls, obj):
        _check_keys(obj, {"condition", "objects", "footprint_radius",
                          "ee_radius", "f_max"}, "SceneInfo")
        if not isinstance(obj["objects"], list):
            raise _bad("objects must be an array")
        return cls(obj["condition"],
                   tuple(SceneObject.from_obj(o) for o in obj["objects"]),
                   obj["footprint_radius"], obj["ee_radius"], obj["f_max"])


WireMessage = (
    OperatorInput | ExternalCommand | FeedbackCommand | RobotState
    | MissionEvent | Handshake | HandshakeReply | SceneInfo
)

_REGISTRY = {
    "operator_input": OperatorInput,
    "external_command": ExternalCommand,
    "feedback_command": FeedbackCommand,
    "robot_state": RobotState,
    "mission_event": MissionEvent,
    "handshake": Handshake,
    "handshake_reply": HandshakeReply,
    "scene_info": SceneInfo,
}
_TYPE_TAG = {cls: tag for tag, cls in _REGISTRY.items()}


def _check_keys(obj, expected: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise _bad(f"{where} must be an object")
    got = set(obj)
    missing = expected - got
    if missing:
        raise ProtocolError("missing_field", f"{where} missing {sorted(missing)}")
    extra = got - expected
    if extra:
        raise ProtocolError("unknown_field", f"{where} has unknown {sorted(extra)}")


def message_type(m: WireMessage) -> str:
    return _TYPE_TAG[type(m)]


def encode_message(m: WireMessage) -> bytes:
    tag = _TYPE_TAG.get(type(m))
    if tag is None:
        raise TypeError(f"not a wire message: {type(m).__name__}")
    obj = m.to_obj()
    obj["type"] = tag
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode() + b"\n"


def _reject_constant(name):
    raise _bad(f"non-finite JSON constant {name}")


def decode_message(frame: bytes | str) -> WireMessage:
    if isinstance(frame, bytes):
        try:
            frame = frame.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise _malformed(f"frame is not UTF-8: {exc}") from exc
    text = frame.strip()
    if not text:
        raise _malformed("empty frame")
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except ProtocolError:
        raise
    except (json.JSONDecodeError, RecursionError, ValueError) as exc:
        raise _malformed(f"frame is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise _malformed("frame must be a JSON object")
    tag = obj.pop("type", None)
    if tag is None:
        raise _malformed("frame has no type tag")
    if not isinstance(tag, str) or tag not in _REGISTRY:
        raise ProtocolError("unknown_type", f"unknown frame type {tag!r}")
    try:
        return _REGISTRY[tag].from_obj(obj)
    except ProtocolError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise _bad(f"invalid {tag} frame: {exc}") from exc


def evaluate_handshake(
    hello: Handshake, operator_connected: bool
) -> HandshakeReply:
    """Decide whether a new client may join.

    The operator role is exclusive; viewers and command channels are not.
    """
    if hello.version != PROTOCOL_VERSION:
        return HandshakeReply(
            accepted=False, version=PROTOCOL_VERSION,
            reason=f"version mismatch: server speaks {PROTOCOL_VERSION}",
        )
    if hello.role == "operator" and operator_connected:
        return HandshakeReply(
            accepted=False, version=PROTOCOL_VERSION,
            reason="an operator is already connected",
        )
    return HandshakeReply(accepted=True, version=PROTOCOL_VERSION)
