"""Wearable haptic feedback: proportional squeeze plus confirmation buzzes.

Four channels (forearm and finger band per operator arm) each carry a
squeeze level proportional to one robot-side force magnitude, and short
vibration pulse trains acknowledging accepted commands.  Devices accept
actuator commands in raw units mapped linearly from a per-device
calibration range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from tpo.defs import AckChannel, AckKind
from tpo.commands import AckRequest


def force_to_squeeze_level(magnitude: float, f_max: float) -> float:
    """Normalize a force magnitude into a squeeze level in [0, 1]."""
    if f_max <= 0:
        raise ValueError("f_max must be positive")
    if magnitude < 0:
        raise ValueError("force magnitude cannot be negative")
    level = magnitude / f_max
    return 1.0 if level > 1.0 else level


def level_to_actuator_command(level: float, cmd_min: float, cmd_max: float) -> float:
    """Map a level in [0, 1] linearly onto the device actuator range."""
    if not 0.0 <= level <= 1.0:
        raise ValueError("level must lie in [0, 1]")
    if cmd_max < cmd_min:
        raise ValueError("calibration range is inverted")
    return cmd_min + level * (cmd_max - cmd_min)


def build_ack_schedule(
    kind: AckKind, t0: float, pulse_s: float = 0.15, gap_s: float = 0.10
) -> list[tuple[float, float]]:
    """Vibration on intervals for a confirmation: one pulse for engage,
    two for disengage."""
    if pulse_s <= 0 or gap_s < 0:
        raise ValueError("pulse and gap durations must be positive")
    n = 1 if kind is AckKind.ENGAGE else 2
    out = []
    t = t0
    for _ in range(n):
        out.append((t, t + pulse_s))
        t += pulse_s + gap_s
    return out


@dataclass(frozen=True)
class DeviceCalibration:
    cmd_min: float
    cmd_max: float
    f_max: float

    def __post_init__(self):
        if self.cmd_max < self.cmd_min:
            raise ValueError("calibration range is inverted")
        if self.f_max <= 0:
            raise ValueError("f_max must be positive")


@dataclass(frozen=True)
class DeviceCommand:
    """What gets sent to one wearable each tick."""

    channel: AckChannel
    squeeze_level: float
    squeeze_cmd: float
    vibrating: bool


class WearableDevice:
    """One haptic band: slew-limited squeeze plus a vibration pulse queue."""

    def __init__(
        self,
        channel: AckChannel,
        calibration: DeviceCalibration,
        slew_per_s: float = 5.0,
    ):
        if slew_per_s <= 0:
            raise ValueError("slew limit must be positive")
        self.channel = channel
        self.calibration = calibration
        self.slew_per_s = slew_per_s
        self.level = 0.0
        self._pulses: list[tuple[float, float]] = []

    def schedule_ack(self, kind: AckKind, t: float, pulse_s: float, gap_s: float) -> None:
        # queue behind any pulses still playing so patterns stay countable
        if self._pulses and self._pulses[-1][1] > t:
            t = self._pulses[-1][1] + gap_s
        self._pulses.extend(build_ack_schedule(kind, t, pulse_s, gap_s))

    def _vibrating(self, t: float) -> bool:
        while self._pulses and self._pulses[0][1] <= t:
            self._pulses.pop(0)
        return bool(self._pulses) and self._pulses[0][0] <= t < self._pulses[0][1]

    def step(self, target_level: float, t: float, dt: float) -> DeviceCommand:
        """Advance one tick toward target_level and report the command."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        max_delta = self.slew_per_s * dt
        delta = target_level - self.level
        if delta > max_delta:
            delta = max_delta
        elif delta < -max_delta:
            delta = -max_delta
        self.level = min(1.0, max(0.0, self.level + delta))
        return DeviceCommand(
            channel=self.channel,
            squeeze_level=self.level,
            squeeze_cmd=level_to_actuator_command(
                self.level, self.calibration.cmd_min, self.calibration.cmd_max
            ),
            vibrating=self._vibrating(t),
        )


@dataclass(frozen=True)
class CalibrationProfile:
    devices: dict[AckChannel, DeviceCalibration]
    pulse_s: float = 0.15
    gap_s: float = 0.10
    slew_per_s: float = 5.0

    def __post_init__(self):
        missing = [c for c in AckChannel if c not in self.devices]
        if missing:
            raise ValueError(f"calibration missing channels: {missing}")


_CHANNEL_KEYS = {
    AckChannel.RIGHT_FOREARM: "right_forearm",
    AckChannel.RIGHT_FINGER: "right_finger",
    AckChannel.LEFT_FOREARM: "left_forearm",
    AckChannel.LEFT_FINGER: "left_finger",
}


def load_calibration(text: str) -> CalibrationProfile:
    doc = json.loads(text)
    devices = {}
    for channel, key in _CHANNEL_KEYS.items():
        dev = doc["devices"][key]
        devices[channel] = DeviceCalibration(
            cmd_min=float(dev["min"]),
            cmd_max=float(dev["max"]),
            f_max=float(doc["f_max"][key]),
        )
    return CalibrationProfile(
        devices=devices,
        pulse_s=float(doc.get("pulse_s", 0.15)),
        gap_s=float(doc.get("gap_s", 0.10)),
        slew_per_s=float(doc.get("slew_per_s", 5.0)),
    )


@dataclass(frozen=True)
class FeedbackForces:
    """Robot-side force magnitudes feeding the four squeeze channels."""

    rope_right: float = 0.0    # virtual rope tension, right arm
    rope_left: float = 0.0     # virtual rope tension, left arm
    grasp: float = 0.0         # gripper grasp force
    left_contact: float = 0.0  # contact force at the left end-effector


def route_feedback(forces: FeedbackForces) -> dict[AckChannel, float]:
    """Assign each force magnitude to its wearable channel."""
    return {
        AckChannel.RIGHT_FOREARM: forces.rope_right,
        AckChannel.RIGHT_FINGER: forces.grasp,
        AckChannel.LEFT_FOREARM: forces.rope_left,
        AckChannel.LEFT_FINGER: forces.left_contact,
    }


class HapticsEngine:
    """Drives all four wearables from forces and acknowledgement requests.

    When disabled (the no-feedback study conditions) it swallows acks and
    emits nothing, so callers never branch.
    """

    def __init__(self, calibration: CalibrationProfile, enabled: bool = True):
        self.calibration = calibration
        self.enabled = enabled
        self.devices = {
            channel: WearableDevice(channel, cal, calibration.slew_per_s)
            for channel, cal in calibration.devices.items()
        }

    def submit_acks(self, acks: list[AckRequest]) -> None:
        if not self.enabled:
            return
        for ack in acks:
            self.devices[ack.channel].schedule_ack(
                ack.kind, ack.t, self.calibration.pulse_s, self.calibration.gap_s
            )

    def tick(self, forces: FeedbackForces, t: float, dt: float) -> list[DeviceCommand]:
        if not self.enabled:
            return []
        levels = {
            channel: force_to_squeeze_level(mag, self.calibration.devices[channel].f_max)
            for channel, mag in route_feedback(forces).items()
        }
        return [
            self.devices[channel].step(levels[channel], t, dt)
            for channel in AckChannel
        ]
