"""One teleoperation session: the fixed-rate loop gluing all the parts.

Tick i consumes the inputs queued since tick i-1 (wrist poses are
latest-wins, button and command events are all kept), advances control,
world, mission, and haptics by one dt, and stamps everything it emits
with the post-tick session time round((i+1)*dt, 6).

Every applied input and every emitted frame is appended to the trial log
in a fixed order, which together with the inlined config snapshot makes
the log replayable byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tpo import protocol
from tpo.commands import AckRequest, ButtonEvent, CommandRouter
from tpo.config import ConfigBundle, bundle_from_snapshot, read_data_text
from tpo.control import ControlCore
from tpo.defs import AckChannel, AckKind, ControlPoint, MissionPhase, Side
from tpo.haptics import FeedbackForces, HapticsEngine
from tpo.protocol import (
    ExternalCommand,
    FeedbackCommand,
    MissionEvent,
    OperatorInput,
    RobotState,
    WireMessage,
    decode_message,
    encode_message,
)
from tpo.robot import chain_points
from tpo.scenario import (
    FailureKind,
    MissionState,
    RobotContacts,
    World,
    mission_update,
    trial_report,
)

_INPUT_TYPES = (OperatorInput, ExternalCommand)

_DEVICE_KEY = {
    AckChannel.RIGHT_FOREARM: "right_forearm",
    AckChannel.RIGHT_FINGER: "right_finger",
    AckChannel.LEFT_FOREARM: "left_forearm",
    AckChannel.LEFT_FINGER: "left_finger",
}

_SIDE = {"right": Side.RIGHT, "left": Side.LEFT}


class LogError(ValueError):
    """Raised for unreadable or structurally invalid trial logs."""


class TrialLog:
    """Ordered frames plus the config snapshot they were produced under."""

    def __init__(self, snapshot: dict):
        if snapshot.get("type") != "config_snapshot":
            raise LogError("log snapshot must be a config_snapshot object")
        self.snapshot = snapshot
        self.lines: list[bytes] = []
        self.messages: list[WireMessage] = []

    def append(self, msg: WireMessage) -> None:
        self.lines.append(encode_message(msg))
        self.messages.append(msg)

    def write(self, path: str | Path) -> str:
        """Write JSON-lines (snapshot first) and return the content digest."""
        head = json.dumps(self.snapshot, sort_keys=True,
                          separators=(",", ":")).encode() + b"\n"
        digest = hashlib.sha256()
        with open(path, "wb") as fh:
            fh.write(head)
            digest.update(head)
            for line in self.lines:
                fh.write(line)
                digest.update(line)
        return digest.hexdigest()

    @classmethod
    def read(cls, path: str | Path) -> "TrialLog":
        with open(path, "rb") as fh:
            head = fh.readline()
            if not head:
                raise LogError("log file is empty")
            try:
                snapshot = json.loads(head)
            except json.JSONDecodeError as exc:
                raise LogError(f"bad config snapshot line: {exc}") from exc
            log = cls(snapshot)
            for n, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                try:
                    msg = decode_message(line)
                except protocol.ProtocolError as exc:
                    raise LogError(f"line {n}: {exc}") from exc
                log.lines.append(line if line.endswith(b"\n") else line + b"\n")
                log.messages.append(msg)
        return log


class Session:
    """Synchronous core of a trial; transports feed it, it never blocks."""

    def __init__(self, bundle: ConfigBundle, log: TrialLog | None = None):
        self.bundle = bundle
        self.dt = bundle.profile.dt
        self.core = ControlCore(bundle.robot, bundle.profile)
        self.router = CommandRouter(bundle.condition)
        self.haptics = HapticsEngine(
            bundle.calibration, enabled=bundle.condition.haptics_enabled
        )
        self.world = World(bundle.scenario)
        self.core.base = bundle.scenario.base_start
        self.mission = MissionState()
        self.log = log
        self.tick_index = 0
        self._pending: list[WireMessage] = []
        self._pending_pulses = {channel: 0 for channel in AckChannel}

    @property
    def t_now(self) -> float:
        """Session time at which the next tick applies its inputs."""
        return round(self.tick_index * self.dt, 6)

    def submit(self, msg: WireMessage) -> None:
        """Queue an input frame for the next tick."""
        if not isinstance(msg, _INPUT_TYPES):
            raise TypeError(f"not an input frame: {type(msg).__name__}")
        self._pending.append(msg)

    def _collect_acks(self, acks: list[AckRequest]) -> None:
        self.haptics.submit_acks(acks)
        if self.haptics.enabled:
            for ack in acks:
                self._pending_pulses[ack.channel] += (
                    1 if ack.kind is AckKind.ENGAGE else 2
                )

    def _apply_inputs(self, t: float) -> bool:
        """Apply queued frames in arrival order; returns True on engage edge."""
        engaged = False
        before = self.router.state.copy()
        for msg in self._pending:
            if isinstance(msg, OperatorInput):
                rewritten = OperatorInput(
                    t=t,
                    right_wrist=msg.right_wrist,
                    left_wrist=msg.left_wrist,
                    buttons=msg.buttons,
                )
                if self.log is not None:
                    self.log.append(rewritten)
                self.core.set_wrist(Side.RIGHT, msg.right_wrist)
                self.core.set_wrist(Side.LEFT, msg.left_wrist)
                for b in msg.buttons:
                    event = ButtonEvent(_SIDE[b.side], b.button, b.pressed, t)
                    self._collect_acks(self.router.on_button(event))
            else:
                rewritten = ExternalCommand(t=t, token=msg.token)
                if self.log is not None:
                    self.log.append(rewritten)
                self._collect_acks(self.router.on_external(msg.token, t))
        self._pending.clear()

        after = self.router.state
        if after.right_active != before.right_active:
            self.core.set_active(Side.RIGHT, after.right_active)
            engaged = engaged or after.right_active
        if after.left_active != before.left_active:
            self.core.set_active(Side.LEFT, after.left_active)
            engaged = engaged or after.left_active
        if after.left_cp != before.left_cp:
            self.core.set_left_control_point(after.left_cp)
        self.world.set_gripper_target(after.gripper)
        return engaged

    def _world_points(self, side: Side):
        chain = self.core.model.chain(side.value)
        pts = chain_points(chain, self.core.q[side])
        pose = self.core.base
        c, s = math.cos(pose.heading), math.sin(pose.heading)
        out = np.empty_like(pts)
        out[:, 0] = pose.position[0] + c * pts[:, 0] - s * pts[:, 1]
        out[:, 1] = pose.position[1] + s * pts[:, 0] + c * pts[:, 1]
        out[:, 2] = pose.position[2] + pts[:, 2]
        return out

    def _mission_events(self, before: MissionState, t: float) -> list[MissionEvent]:
        events = []
        if self.mission.t_start is not None and before.t_start is None:
            events.append(MissionEvent(t, "started"))
        for failure in sorted(
            self.mission.failures - before.failures, key=lambda f: f.value
        ):
            events.append(MissionEvent(t, f"failure:{failure.value}"))
        if self.mission.phase is not before.phase:
            events.append(MissionEvent(t, f"phase:{self.mission.phase.value}"))
        return events

    def _should_emit(self, t_prev: float, t_next: float) -> bool:
        hz = self.bundle.telemetry_hz
        return math.floor(t_next * hz) > math.floor(t_prev * hz)

    def tick(self, force_emit: bool = False) -> list[WireMessage]:
        """Advance one control period; returns the frames emitted this tick."""
        t_apply = self.t_now
        t_next = round((self.tick_index + 1) * self.dt, 6)

        engaged = self._apply_inputs(t_apply)
        result = self.core.tick(self.dt)

        right_pts = self._world_points(Side.RIGHT)
        left_pts = self._world_points(Side.LEFT)
        contacts = RobotContacts(
            right_ee=right_pts[-1],
            left_ee=left_pts[-1],
            right_points=right_pts[:-1],
            left_points=left_pts[:-1],
            base_xy=self.core.base.position[:2],
            footprint_radius=self.core.model.footprint_radius,
        )
        report, events = self.world.step(contacts, self.dt)
        events.activated = engaged

        mission_before = MissionState(
            phase=self.mission.phase,
            failures=set(self.mission.failures),
            t_start=self.mission.t_start,
            t_end=self.mission.t_end,
        )
        self.mission = mission_update(self.mission, events, t_next)

        forces = FeedbackForces(
            rope_right=result.force_right.magnitude,
            rope_left=result.force_left.magnitude,
            grasp=report.grasp_force,
            left_contact=report.left_ee_force,
        )
        device_cmds = self.haptics.tick(forces, t_next, self.dt)

        frames: list[WireMessage] = list(
            self._mission_events(mission_before, t_next)
        )
        if force_emit or self._should_emit(t_apply, t_next):
            frames.append(self._robot_state(t_next, result, report,
                                            right_pts, left_pts))
            for cmd in device_cmds:
                frames.append(
                    FeedbackCommand(
                        t=t_next,
                        device=_DEVICE_KEY[cmd.channel],
                        level=cmd.squeeze_level,
                        pulses=self._pending_pulses[cmd.channel],
                    )
                )
                self._pending_pulses[cmd.channel] = 0

        if self.log is not None:
            for frame in frames:
                self.log.append(frame)
        self.tick_index += 1
        return frames

    def _robot_state(self, t, result, report, right_pts, left_pts) -> RobotState:
        m = self.mission
        return RobotState(
            t=t,
            q_right=tuple(float(v) for v in self.core.q[Side.RIGHT]),
            q_left=tuple(float(v) for v in self.core.q[Side.LEFT]),
            base_pos=tuple(float(v) for v in self.core.base.position),
            base_heading=float(self.core.base.heading),
            gripper_aperture=self.world.gripper.aperture,
            grasp_force=report.grasp_force,
            left_ee_force=report.left_ee_force,
            right_active=self.router.state.right_active,
            left_active=self.router.state.left_active,
            control_point=(
                "base" if self.router.state.left_cp is ControlPoint.BASE else "left_ee"
            ),
            force_right=tuple(float(v) for v in result.force_right.f),
            force_left=tuple(float(v) for v in result.force_left.f),
            right_points=tuple(tuple(float(v) for v in p) for p in right_pts),
            left_points=tuple(tuple(float(v) for v in p) for p in left_pts),
            bottle_pos=tuple(float(v) for v in self.world.bottle_pos),
            mission=protocol.MissionBlock(
                phase=m.phase.value,
                failures=tuple(sorted(f.value for f in m.failures)),
                t_start=m.t_start,
                t_end=m.t_end,
            ),
        )


@dataclass(frozen=True)
class Waypoint:
    t: float
    pos: tuple[float, float, float]


@dataclass(frozen=True)
class Script:
    """Timed operator behavior: wrist waypoints plus button/command events."""

    duration: float
    input_hz: float = 50.0
    right: tuple[Waypoint, ...] = ()
    left: tuple[Waypoint, ...] = ()
    buttons: tuple[tuple[float, str, int], ...] = ()    # (t, side, button)
    commands: tuple[tuple[float, str], ...] = ()        # (t, token)

    def __post_init__(self):
        if self.duration <= 0 or not math.isfinite(self.duration):
            raise ValueError("script duration must be positive and finite")
        if self.input_hz <= 0:
            raise ValueError("input_hz must be positive")
        for track in (self.right, self.left):
            ts = [w.t for w in track]
            if any(b < a for a, b in zip(ts, ts[1:])):
                raise ValueError("waypoints must be in time order")

    @property
    def empty(self) -> bool:
        return not (self.right or self.left or self.buttons or self.commands)


def load_script(text: str) -> Script:
    doc = json.loads(text)

    def track(key):
        return tuple(
            Waypoint(float(w["t"]), tuple(float(v) for v in w["pos"]))
            for w in doc.get(key, ())
        )

    return Script(
        duration=float(doc["duration"]),
        input_hz=float(doc.get("input_hz", 50.0)),
        right=track("right"),
        left=track("left"),
        buttons=tuple(
            (float(b["t"]), str(b["side"]), int(b["button"]))
            for b in doc.get("buttons", ())
        ),
        commands=tuple(
            (float(c["t"]), str(c["token"])) for c in doc.get("commands", ())
        ),
    )


def _interp(track: tuple[Waypoint, ...], t: float) -> tuple[float, float, float]:
    if not track:
        return (0.0, 0.0, 0.0)
    if t <= track[0].t:
        return track[0].pos
    if t >= track[-1].t:
        return track[-1].pos
    for a, b in zip(track, track[1:]):
        if a.t <= t <= b.t:
            if b.t == a.t:
                return b.pos
            u = (t - a.t) / (b.t - a.t)
            return tuple(pa + u * (pb - pa) for pa, pb in zip(a.pos, b.pos))
    return track[-1].pos


def scripted_operator(script: Script) -> list[WireMessage]:
    """Expand a script into the input frames a live operator would send."""
    if script.empty:
        return []
    frames: list[tuple[float, int, WireMessage]] = []
    period = 1.0 / script.input_hz
    n = int(math.floor(script.duration / period)) + 1
    button_queue = sorted(
        (t, side, button) for t, side, button in script.buttons
    )
    bi = 0
    for k in range(n):
        t = round(k * period, 6)
        presses = []
        while bi < len(button_queue) and button_queue[bi][0] <= t:
            _, side, button = button_queue[bi]
            presses.append(protocol.ButtonPress(side, button, True))
            bi += 1
        frames.append(
            (t, 0, OperatorInput(
                t=t,
                right_wrist=_interp(script.right, t),
                left_wrist=_interp(script.left, t),
                buttons=tuple(presses),
            ))
        )
    for t, token in script.commands:
        frames.append((round(t, 6), 1, ExternalCommand(t=round(t, 6), token=token)))
    frames.sort(key=lambda item: (item[0], item[1]))
    return [msg for _, _, msg in frames]


def run_headless(
    bundle: ConfigBundle,
    script: Script,
    out_path: str | Path | None = None,
    settle_tail_s: float = 1.0,
) -> dict:
    """Run a scripted trial as fast as possible and report the metrics."""
    log = TrialLog(bundle.snapshot())
    session = Session(bundle, log)
    inputs = scripted_operator(script)
    dt = bundle.profile.dt
    total_ticks = max(1, round(script.duration / dt))
    tail_ticks = max(0, round(settle_tail_s / dt))

    start = time.perf_counter()
    idx = 0
    done_at: int | None = None
    i = 0
    while i < total_ticks:
        t_now = session.t_now
        while idx < len(inputs) and inputs[idx].t <= t_now + 1e-9:
            session.submit(inputs[idx])
            idx += 1
        last = i == total_ticks - 1
        if done_at is not None and i - done_at >= tail_ticks:
            last = True
        session.tick(force_emit=last)
        if done_at is None and session.mission.done:
            done_at = i
        if last:
            break
        i += 1
    wall = time.perf_counter() - start
    sim_s = round(session.tick_index * dt, 6)

    result = {
        "mission_phase": session.mission.phase.value,
        "failures": sorted(f.value for f in session.mission.failures),
        "ticks": session.tick_index,
        "sim_time_s": sim_s,
        "wall_time_s": wall,
    }
    if session.mission.done:
        result["report"] = trial_report(session.mission)
    if out_path is not None:
        result["log_path"] = str(out_path)
        result["log_sha256"] = log.write(out_path)
    return result


@dataclass
class Divergence:
    index: int          # position among the log's output frames
    t: float | None
    expected: str
    got: str


@dataclass
class ReplayResult:
    divergences: list[Divergence] = field(default_factory=list)
    config_mismatch: bool = False
    ticks: int = 0
    frames_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.divergences and not self.config_mismatch


def replay(log: TrialLog, profile_doc: dict | None = None) -> ReplayResult:
    """Re-run a trial from its log and compare every emitted frame.

    With a profile override the run is still performed, but the result is
    flagged as a config mismatch (and will normally diverge).
    """
    result = ReplayResult()
    if profile_doc is not None and profile_doc != log.snapshot.get("profile"):
        result.config_mismatch = True
    bundle = bundle_from_snapshot(log.snapshot, profile_doc=profile_doc)
    session = Session(bundle)

    inputs: list[WireMessage] = []
    expected: list[bytes] = []
    t_max = 0.0
    for raw, msg in zip(log.lines, log.messages):
        if isinstance(msg, _INPUT_TYPES):
            inputs.append(msg)
            t_max = max(t_max, msg.t + bundle.profile.dt)
        else:
            expected.append(raw)
            t_max = max(t_max, getattr(msg, "t", 0.0))

    dt = bundle.profile.dt
    total_ticks = max(1, round(t_max / dt))
    result.ticks = total_ticks
    replayed: list[bytes] = []
    idx = 0
    for i in range(total_ticks):
        t_now = session.t_now
        while idx < len(inputs) and inputs[idx].t <= t_now + 1e-9:
            session.submit(inputs[idx])
            idx += 1
        frames = session.tick(force_emit=(i == total_ticks - 1))
        replayed.extend(encode_message(f) for f in frames)

    result.frames_checked = max(len(expected), len(replayed))
    for n in range(result.frames_checked):
        exp = expected[n] if n < len(expected) else b""
        got = replayed[n] if n < len(replayed) else b""
        if exp != got:
            t = None
            try:
                t = getattr(decode_message(exp or got), "t", None)
            except protocol.ProtocolError:
                pass
            result.divergences.append(Divergence(
                index=n, t=t,
                expected=exp.decode().strip(),
                got=got.decode().strip(),
            ))
    return result


def report_from_log(log: TrialLog) -> dict:
    """Recover the trial metrics from the mission events in a log."""
    mission = MissionState()
    phase_names = {p.value: p for p in MissionPhase}
    for msg in log.messages:
        if not isinstance(msg, MissionEvent):
            continue
        if msg.kind == "started":
            mission.t_start = msg.t
            mission.phase_starts[MissionPhase.PICK_BOTTLE] = msg.t
        elif msg.kind.startswith("phase:"):
            phase = phase_names[msg.kind.split(":", 1)[1]]
            mission.phase = phase
            mission.phase_starts[phase] = msg.t
            if phase is MissionPhase.DONE:
                mission.t_end = msg.t
        elif msg.kind.startswith("failure:"):
            mission.failures.add(FailureKind(msg.kind.split(":", 1)[1]))
    return trial_report(mission)


def load_script_file(path: str | Path) -> Script:
    return load_script(read_data_text(path))
