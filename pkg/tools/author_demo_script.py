"""Author the shipped end-to-end mission script.

Flies the mission closed-loop against the real stack with a small servo
pilot, records the operator input stream it generated, then freezes the
wrist trajectories as open-loop waypoints.  The frozen script is verified
headlessly at progressively finer waypoint rates until the mission
completes with zero failures; the coarsest passing rate is written to
src/tpo/data/scripts/paper_mission_demo.json.

Run from the repository root:  python3 tools/author_demo_script.py
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np

from tpo.config import load_bundle
from tpo.defs import MissionPhase, Side
from tpo.protocol import ButtonPress, OperatorInput
from tpo.session import Script, Session, Waypoint, run_headless

REPO = Path(__file__).resolve().parents[1]
OUT_PATH = REPO / "src" / "tpo" / "data" / "scripts" / "paper_mission_demo.json"

INPUT_HZ = 50.0
INPUT_PERIOD = 1.0 / INPUT_HZ

ABOVE_TABLE = np.array([0.60, 0.0, 0.82])
OVER_GRASP = np.array([0.66, 0.0, 0.82])
GRASP_POINT = np.array([0.66, 0.0, 0.762])  # short of the bottle: the jaw
# captures anything within reach, and grasping from behind carries the bottle
# ahead of the wrist, which keeps the forearm clear of the drawer at the drop
CARRY = np.array([0.50, -0.08, 0.88])
LIFTED = np.array([0.66, 0.0, 0.90])
LEFT_TUCK = np.array([0.46, 0.20, 0.85])
DRIVE_GOAL = np.array([0.30, 1.95])
BOX_APPROACH = np.array([0.665, 1.95, 0.85])
BOX_DROP = np.array([0.685, 1.95, 0.81])
BOX_INNER = (np.array([0.712, 1.862, 0.732]), np.array([0.888, 2.038, 0.81]))
BUTTON_STAGE = np.array([0.56, 2.25, 0.82])
BUTTON_PUSH = np.array([0.60, 2.25, 0.80])


class Pilot:
    """Closed-loop operator: servo wrists from live state, log every input."""

    def __init__(self, session: Session):
        self.session = session
        self.profile = session.bundle.profile
        self.right_wrist = np.zeros(3)
        self.left_wrist = np.zeros(3)
        self.right_anchor = np.zeros(3)
        self.left_anchor = np.zeros(3)
        self.recorded: list[tuple[float, np.ndarray, np.ndarray]] = []
        self.buttons: list[tuple[float, str, int]] = []
        self.state = "reach_up"
        self.dwell_until = -1.0
        self.state_entered = 0.0

    # -- geometry helpers ----------------------------------------------------

    def ee(self, side: Side) -> np.ndarray:
        return self.session._world_points(side)[-1]

    def servo(self, side: Side, target: np.ndarray, f_cap: float = 8.0) -> float:
        """Command a wrist displacement proportional to the EE error."""
        err = target - self.ee(side)
        dist = float(np.linalg.norm(err))
        anchor = self.right_anchor if side is Side.RIGHT else self.left_anchor
        if dist < 1e-9:
            wrist = anchor.copy()
        else:
            stretch = min(1.5 * dist, f_cap / self.profile.gain)
            wrist = anchor + (err / dist) * (self.profile.deadzone + stretch)
        if side is Side.RIGHT:
            self.right_wrist = wrist
        else:
            self.left_wrist = wrist
        return dist

    def servo_base(self, goal_xy: np.ndarray, f_cap: float = 10.0) -> float:
        pos = self.session.core.base.position[:2]
        err = goal_xy - pos
        dist = float(np.linalg.norm(err))
        if dist < 1e-9:
            self.left_wrist = self.left_anchor.copy()
        else:
            stretch = min(1.5 * dist, f_cap / self.profile.gain)
            step = (self.profile.deadzone + stretch) * np.array(
                [err[0] / dist, err[1] / dist, 0.0]
            )
            self.left_wrist = self.left_anchor + step
        return dist

    def hold(self, side: Side) -> None:
        if side is Side.RIGHT:
            self.right_wrist = self.right_anchor.copy()
        else:
            self.left_wrist = self.left_anchor.copy()

    def press(self, t: float, side: str, button: int) -> ButtonPress:
        self.buttons.append((t, side, button))
        return ButtonPress(side, button, True)

    # -- state machine -------------------------------------------------------

    def goto(self, state: str, t: float, dwell: float = 0.0) -> None:
        self.state = state
        self.state_entered = t
        self.dwell_until = t + dwell

    def step(self, t: float) -> list[ButtonPress]:
        """One input-period decision; returns button presses for this frame."""
        s = self.session
        presses: list[ButtonPress] = []
        waiting = t < self.dwell_until

        # a press that (re)anchors a rope must ride a frame whose wrist equals
        # the pilot's anchor, so servoing starts on the following frame
        if self.state == "reach_up":
            if not self.buttons_has("right", 1):
                presses.append(self.press(t, "right", 1))
                self.right_anchor = self.right_wrist.copy()
                self.hold(Side.RIGHT)
            elif self.servo(Side.RIGHT, ABOVE_TABLE) < 0.015 and not waiting:
                self.goto("reach_over", t)
        elif self.state == "reach_over":
            if self.servo(Side.RIGHT, OVER_GRASP) < 0.015:
                self.goto("descend", t)
        elif self.state == "descend":
            if self.servo(Side.RIGHT, GRASP_POINT, f_cap=5.0) < 0.008:
                presses.append(self.press(t, "right", 2))
                self.goto("grasp", t, dwell=0.8)
        elif self.state == "grasp":
            self.servo(Side.RIGHT, GRASP_POINT, f_cap=5.0)
            if s.world.attached and not waiting:
                self.goto("lift", t)
        elif self.state == "lift":
            self.servo(Side.RIGHT, LIFTED)
            if s.mission.phase is not MissionPhase.PICK_BOTTLE:
                self.goto("carry_tuck", t)
        elif self.state == "carry_tuck":
            if self.servo(Side.RIGHT, CARRY) < 0.015:
                self.hold(Side.RIGHT)
                presses.append(self.press(t, "right", 1))
                self.goto("left_raise", t, dwell=0.4)
        elif self.state == "left_raise":
            if waiting:
                pass
            elif not self.buttons_has("left", 1):
                presses.append(self.press(t, "left", 1))
                self.left_anchor = self.left_wrist.copy()
                self.hold(Side.LEFT)
            elif self.servo(Side.LEFT, LEFT_TUCK) < 0.015:
                self.hold(Side.LEFT)
                presses.append(self.press(t, "left", 2))
                self.left_anchor = self.left_wrist.copy()
                self.goto("drive", t, dwell=0.3)
        elif self.state == "drive":
            if waiting:
                self.hold(Side.LEFT)
            elif self.servo_base(DRIVE_GOAL) < 0.01:
                self.hold(Side.LEFT)
                self.goto("stop_base", t, dwell=0.4)
        elif self.state == "stop_base":
            self.hold(Side.LEFT)
            if not waiting:
                presses.append(self.press(t, "left", 2))
                self.left_anchor = self.left_wrist.copy()
                presses.append(self.press(t, "right", 1))
                self.right_anchor = self.right_wrist.copy()
                self.goto("box_approach", t, dwell=0.3)
        elif self.state == "box_approach":
            if self.servo(Side.RIGHT, BOX_APPROACH, f_cap=3.0) < 0.02 and not waiting:
                self.goto("lower_into_box", t)
        elif self.state == "lower_into_box":
            self.servo(Side.RIGHT, BOX_DROP, f_cap=1.2)
            lo, hi = BOX_INNER
            if not waiting and bool(np.all((lo <= s.world.bottle_pos)
                                           & (s.world.bottle_pos <= hi))):
                presses.append(self.press(t, "right", 2))
                self.goto("release", t, dwell=0.5)
        elif self.state == "release":
            # keep the rope taut so the arm cannot coast into the drawer, then
            # park it by deactivating (which also zeroes the joint velocities)
            self.servo(Side.RIGHT, BOX_DROP, f_cap=1.2)
            if s.mission.phase is MissionPhase.PRESS_BUTTON and not waiting:
                self.hold(Side.RIGHT)
                presses.append(self.press(t, "right", 1))
                self.goto("button_stage", t, dwell=0.3)
        elif self.state == "button_stage":
            if self.servo(Side.LEFT, BUTTON_STAGE) < 0.02 and not waiting:
                self.goto("button_push", t)
        elif self.state == "button_push":
            self.servo(Side.LEFT, BUTTON_PUSH, f_cap=5.0)
            if s.mission.done:
                self.hold(Side.LEFT)
                self.goto("park", t)
        elif self.state == "park":
            self.hold(Side.LEFT)

        self.recorded.append((t, self.right_wrist.copy(), self.left_wrist.copy()))
        return presses

    def buttons_has(self, side: str, button: int) -> bool:
        return any(s == side and b == button for _, s, b in self.buttons)


def fly_closed_loop(max_s: float = 60.0) -> Pilot:
    bundle = load_bundle(condition="C")
    session = Session(bundle)
    pilot = Pilot(session)
    dt = bundle.profile.dt
    ticks_per_input = round(INPUT_PERIOD / dt)
    total = int(max_s / dt)
    done_tail = 0
    for i in range(total):
        t = session.t_now
        if i % ticks_per_input == 0:
            presses = pilot.step(t)
            session.submit(OperatorInput(
                t=t,
                right_wrist=tuple(pilot.right_wrist),
                left_wrist=tuple(pilot.left_wrist),
                buttons=tuple(presses),
            ))
        session.tick()
        if session.mission.done:
            done_tail += 1
            if done_tail >= round(0.5 / dt):
                break
    if not session.mission.done:
        raise SystemExit(f"closed-loop pilot stalled in state {pilot.state!r} "
                         f"(mission phase {session.mission.phase.value})")
    if session.mission.failures:
        raise SystemExit(f"closed-loop pilot collected failures: "
                         f"{sorted(f.value for f in session.mission.failures)}")
    print(f"closed-loop flight: Done in {session.t_now:.2f} s simulated, "
          f"{len(pilot.recorded)} input frames, state={pilot.state}")
    return pilot


def freeze(pilot: Pilot, stride: int) -> dict:
    """Downsample the recorded wrist tracks into a waypoint script document."""
    frames = pilot.recorded
    keep = list(range(0, len(frames), stride))
    if keep[-1] != len(frames) - 1:
        keep.append(len(frames) - 1)
    # waypoints at every button instant keep anchors exact under interpolation
    button_ts = {t for t, _, _ in pilot.buttons}
    for idx, (t, _, _) in enumerate(frames):
        if t in button_ts and idx not in keep:
            keep.append(idx)
    keep.sort()
    duration = frames[-1][0] + 1.0
    return {
        "duration": round(duration, 3),
        "input_hz": INPUT_HZ,
        "right": [
            {"t": frames[i][0], "pos": [round(v, 6) for v in frames[i][1]]}
            for i in keep
        ],
        "left": [
            {"t": frames[i][0], "pos": [round(v, 6) for v in frames[i][2]]}
            for i in keep
        ],
        "buttons": [
            {"t": t, "side": side, "button": button}
            for t, side, button in pilot.buttons
        ],
    }


def verify(doc: dict) -> dict:
    from tpo.session import load_script

    script = load_script(json.dumps(doc))
    return run_headless(load_bundle(condition="C"), script)


def main() -> int:
    pilot = fly_closed_loop()
    for stride in (20, 10, 5, 2, 1):  # 2.5 Hz up to the full 50 Hz
        doc = freeze(pilot, stride)
        result = verify(doc)
        ok = result["mission_phase"] == "Done" and not result["failures"]
        rate = INPUT_HZ / stride
        print(f"waypoints at {rate:.1f} Hz ({len(doc['right'])} per arm): "
              f"phase={result['mission_phase']} failures={result['failures']}")
        if ok:
            OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
            OUT_PATH.write_text(json.dumps(doc, indent=1) + "\n")
            print(f"frozen at {rate:.1f} Hz -> {OUT_PATH}")
            print(json.dumps(result.get("report", {}), indent=2, sort_keys=True))
            return 0
    print("no waypoint rate reproduced the mission open loop", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
