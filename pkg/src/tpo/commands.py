"""Command input: wearable buttons and the external text command channel.

Button layout (one two-button device per operator arm):

  right button 1   toggle right-arm engagement
  left  button 1   toggle left-arm engagement
  right button 2   toggle gripper open/closed
  left  button 2   switch the left control point (left EE <-> base)

Every accepted state change also produces an acknowledgement request so
the haptics layer can pulse the matching wearable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from tpo.defs import (
    AckChannel,
    AckKind,
    Condition,
    ControlPoint,
    GripperTarget,
    Side,
)


class CommandError(ValueError):
    """Raised for unknown or malformed external command tokens."""


@dataclass(frozen=True)
class ButtonEvent:
    side: Side
    button: int  # 1 or 2
    pressed: bool
    t: float

    def __post_init__(self):
        if self.button not in (1, 2):
            raise ValueError("button index must be 1 or 2")


@dataclass(frozen=True)
class AckRequest:
    """A confirmation vibration owed to one wearable device."""

    channel: AckChannel
    kind: AckKind
    t: float


@dataclass
class CommandState:
    right_active: bool = False
    left_active: bool = False
    left_cp: ControlPoint = ControlPoint.LEFT_EE
    gripper: GripperTarget = GripperTarget.OPEN

    def copy(self) -> "CommandState":
        return CommandState(
            self.right_active, self.left_active, self.left_cp, self.gripper
        )


_ACK_CHANNEL = {
    (Side.RIGHT, 1): AckChannel.RIGHT_FOREARM,
    (Side.LEFT, 1): AckChannel.LEFT_FOREARM,
    (Side.RIGHT, 2): AckChannel.RIGHT_FINGER,
    (Side.LEFT, 2): AckChannel.LEFT_FINGER,
}


def apply_button_event(state: CommandState, event: ButtonEvent) -> list[AckRequest]:
    """Mutate state for one debounced press; releases are ignored.

    Returns the acknowledgement requests produced by the change.  The
    engage pattern is used when the toggle lands on the active/closed/base
    state, the disengage pattern when it lands back on the default.
    """
    if not event.pressed:
        return []
    channel = _ACK_CHANNEL[(event.side, event.button)]
    if event.button == 1:
        if event.side is Side.RIGHT:
            state.right_active = not state.right_active
            on = state.right_active
        else:
            state.left_active = not state.left_active
            on = state.left_active
    elif event.side is Side.RIGHT:
        state.gripper = (
            GripperTarget.CLOSED
            if state.gripper is GripperTarget.OPEN
            else GripperTarget.OPEN
        )
        on = state.gripper is GripperTarget.CLOSED
    else:
        state.left_cp = (
            ControlPoint.BASE
            if state.left_cp is ControlPoint.LEFT_EE
            else ControlPoint.LEFT_EE
        )
        on = state.left_cp is ControlPoint.BASE
    kind = AckKind.ENGAGE if on else AckKind.DISENGAGE
    return [AckRequest(channel, kind, event.t)]


_EXTERNAL = {
    "RIGHT": (Side.RIGHT, 1),
    "LEFT": (Side.LEFT, 1),
    "GRIPPER": (Side.RIGHT, 2),
    "CHANGE": (Side.LEFT, 2),
}


def apply_external_command(
    state: CommandState, token: str, t: float
) -> list[AckRequest]:
    """Apply one text token from the command channel.

    Tokens act exactly like the corresponding button press.  Unknown
    tokens raise CommandError; surrounding whitespace and case are
    forgiven.
    """
    if not isinstance(token, str):
        raise CommandError(f"command token must be a string, got {type(token).__name__}")
    key = token.strip().upper()
    if key not in _EXTERNAL:
        raise CommandError(f"unknown command token {token!r}")
    side, button = _EXTERNAL[key]
    return apply_button_event(state, ButtonEvent(side, button, True, t))


class Debouncer:
    """Per-button press debouncing with a refractory window.

    A press is accepted when at least `window` seconds have passed since
    the last accepted press of the same physical button.  Releases pass
    through untouched (they carry no action).
    """

    def __init__(self, window: float = 0.2):
        if window < 0:
            raise ValueError("debounce window must be nonnegative")
        self.window = window
        self._last_accept: dict[tuple[Side, int], float] = {}

    def filter(self, event: ButtonEvent) -> ButtonEvent | None:
        if not event.pressed:
            return event
        key = (event.side, event.button)
        last = self._last_accept.get(key)
        if last is not None and event.t - last < self.window:
            return None
        self._last_accept[key] = event.t
        return event


@dataclass
class CommandRouter:
    """Stateful front-end gluing raw events to a CommandState by condition.

    Buttons act only in the button conditions; external tokens act only
    in the token condition.  Inputs from the disabled source are dropped
    silently (they are logged upstream, not errors).
    """

    condition: Condition
    state: CommandState = field(default_factory=CommandState)
    debouncer: Debouncer = field(default_factory=Debouncer)

    def on_button(self, event: ButtonEvent) -> list[AckRequest]:
        if not self.condition.buttons_enabled:
            return []
        kept = self.debouncer.filter(event)
        if kept is None:
            return []
        return apply_button_event(self.state, kept)

    def on_external(self, token: str, t: float) -> list[AckRequest]:
        if not self.condition.external_commands_enabled:
            return []
        return apply_external_command(self.state, token, t)


def activation_edges(
    before: CommandState, after: CommandState
) -> list[tuple[str, bool]]:
    """Name the toggles that changed between two snapshots, for logging."""
    edges = []
    if before.right_active != after.right_active:
        edges.append(("right_active", after.right_active))
    if before.left_active != after.left_active:
        edges.append(("left_active", after.left_active))
    if before.left_cp != after.left_cp:
        edges.append(("left_cp_base", after.left_cp is ControlPoint.BASE))
    if before.gripper != after.gripper:
        edges.append(("gripper_closed", after.gripper is GripperTarget.CLOSED))
    return edges
