"""Shared enums and constants used across the control stack."""

import enum

PROTOCOL_VERSION = 1

TCP_PORT_DEFAULT = 7465
HTTP_PORT_DEFAULT = 7466


class Side(enum.Enum):
    RIGHT = "right"
    LEFT = "left"


class ControlPoint(enum.Enum):
    RIGHT_EE = "right_ee"
    LEFT_EE = "left_ee"
    BASE = "base"


class Condition(enum.Enum):
    """Input/feedback modality of a trial.

    A: external command channel only, no buttons, no haptics.
    B: buttons, no haptics.
    C: buttons plus haptic feedback.
    """

    A = "A"
    B = "B"
    C = "C"

    @property
    def buttons_enabled(self) -> bool:
        return self is not Condition.A

    @property
    def external_commands_enabled(self) -> bool:
        return self is Condition.A

    @property
    def haptics_enabled(self) -> bool:
        return self is Condition.C


class GripperTarget(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


class AckChannel(enum.Enum):
    RIGHT_FOREARM = "right_forearm"
    RIGHT_FINGER = "right_finger"
    LEFT_FOREARM = "left_forearm"
    LEFT_FINGER = "left_finger"


class AckKind(enum.Enum):
    ENGAGE = "engage"
    DISENGAGE = "disengage"


class MissionPhase(enum.Enum):
    PICK_BOTTLE = "PickBottle"
    PLACE_IN_BOX = "PlaceInBox"
    PRESS_BUTTON = "PressButton"
    DONE = "Done"

    @property
    def index(self) -> int:
        return _PHASE_ORDER[self]


_PHASE_ORDER = {
    MissionPhase.PICK_BOTTLE: 0,
    MissionPhase.PLACE_IN_BOX: 1,
    MissionPhase.PRESS_BUTTON: 2,
    MissionPhase.DONE: 3,
}


class Role(enum.Enum):
    OPERATOR = "operator"
    UI_VIEWER = "ui-viewer"
    COMMAND_CHANNEL = "command-channel"
