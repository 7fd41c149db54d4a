"""Desk-scale mission world: pick a bottle, box it, press the button.

The world is a handful of static shapes plus one manipuland (the bottle).
Contacts are penalty springs, force = k_c * penetration; nothing needs
real dynamics because the consumers are the haptic channels, the failure
flags, and the phase machine.  A grasped bottle is welded to the gripper
frame; losing grasp away from the box counts as a drop and the bottle is
put back in the jaws so the run can continue.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from tpo.defs import GripperTarget, MissionPhase
from tpo.robot import BasePose, GripperState


class Role(enum.Enum):
    BOTTLE = "Bottle"
    TABLE = "Table"
    OBSTACLE = "Obstacle"
    BOX = "Box"
    EMERGENCY_BUTTON = "EmergencyButton"
    DRAWER = "Drawer"


class FailureKind(enum.Enum):
    BOTTLE_DROPPED = "BottleDropped"
    COLLISION = "Collision"


#: Roles whose volume the robot must stay clear of.
COLLIDABLE_ROLES = frozenset({Role.TABLE, Role.OBSTACLE, Role.DRAWER})


class ScenarioError(ValueError):
    """Raised for malformed or inconsistent scenario documents."""


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ScenarioError("sphere radius must be positive and finite")


@dataclass(frozen=True)
class BoxShape:
    half_extents: np.ndarray

    def __post_init__(self):
        h = np.ascontiguousarray(self.half_extents, dtype=float)
        if h.shape != (3,) or not np.all(np.isfinite(h)) or np.any(h <= 0):
            raise ScenarioError("box half-extents must be three positive finite numbers")
        object.__setattr__(self, "half_extents", h)


Shape = Sphere | BoxShape


@dataclass(frozen=True)
class WorldObject:
    id: str
    role: Role
    shape: Shape
    position: np.ndarray
    heading: float = 0.0

    def __post_init__(self):
        p = np.ascontiguousarray(self.position, dtype=float)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ScenarioError(f"object {self.id!r} position must be a finite 3-vector")
        object.__setattr__(self, "position", p)
        if not math.isfinite(self.heading):
            raise ScenarioError(f"object {self.id!r} heading must be finite")

    def _to_local(self, p: np.ndarray) -> np.ndarray:
        d = p - self.position
        if self.heading == 0.0:
            return d
        c, s = math.cos(-self.heading), math.sin(-self.heading)
        return np.array([c * d[0] - s * d[1], s * d[0] + c * d[1], d[2]])

    def sphere_penetration(self, center: np.ndarray, radius: float) -> float:
        """Depth a probe sphere sinks into this object, 0 when clear."""
        p = self._to_local(center)
        if isinstance(self.shape, Sphere):
            return max(0.0, self.shape.radius + radius - float(np.linalg.norm(p)))
        h = self.shape.half_extents
        outside = np.maximum(np.abs(p) - h, 0.0)
        dist = float(np.linalg.norm(outside))
        if dist > 0.0:
            return max(0.0, radius - dist)
        # center inside the box: depth to the nearest face plus the probe radius
        return float(np.min(h - np.abs(p))) + radius

    def contains(self, p: np.ndarray) -> bool:
        q = self._to_local(p)
        if isinstance(self.shape, Sphere):
            return float(np.linalg.norm(q)) <= self.shape.radius
        return bool(np.all(np.abs(q) <= self.shape.half_extents))

    def disc_overlaps(self, center_xy: np.ndarray, radius: float) -> bool:
        """Planar footprint test against the object's ground-plane shadow."""
        p = self._to_local(np.array([center_xy[0], center_xy[1], self.position[2]]))
        if isinstance(self.shape, Sphere):
            return math.hypot(p[0], p[1]) < self.shape.radius + radius
        h = self.shape.half_extents
        dx = max(abs(p[0]) - h[0], 0.0)
        dy = max(abs(p[1]) - h[1], 0.0)
        return math.hypot(dx, dy) < radius


@dataclass(frozen=True)
class Thresholds:
    k_c: float = 500.0        # contact penalty stiffness, N/m
    k_g: float = 500.0        # grasp penalty stiffness, N/m
    f_hold: float = 1.0       # min grasp force that counts as holding, N
    f_press: float = 2.0      # button press force, N
    f_grip_max: float = 10.0  # gripper stall force, N

    def __post_init__(self):
        for name in ("k_c", "k_g", "f_hold", "f_press", "f_grip_max"):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"threshold {name} must be positive")


@dataclass(frozen=True)
class GripperParams:
    v_g: float = 0.15           # jaw speed, m/s
    aperture_max: float = 0.12

    def __post_init__(self):
        if self.v_g <= 0 or self.aperture_max <= 0:
            raise ScenarioError("gripper parameters must be positive")


@dataclass(frozen=True)
class Geometry:
    """Probe sizes and mission tolerances, not tied to any one object."""

    ee_radius: float = 0.03
    capture_radius: float = 0.06  # jaw-to-bottle distance that counts as "at the jaws"
    lift_eps: float = 0.02        # height above spawn that counts as lifted


@dataclass(frozen=True)
class Scenario:
    objects: tuple[WorldObject, ...]
    thresholds: Thresholds
    gripper: GripperParams
    geometry: Geometry
    base_start: BasePose = field(default_factory=lambda: BasePose(np.zeros(3)))

    def by_role(self, role: Role) -> list[WorldObject]:
        return [o for o in self.objects if o.role is role]

    def one(self, role: Role) -> WorldObject:
        found = self.by_role(role)
        if len(found) != 1:
            raise ScenarioError(f"expected exactly one {role.value}, found {len(found)}")
        return found[0]


def _parse_shape(doc: dict) -> Shape:
    kind = doc.get("type")
    if kind == "sphere":
        return Sphere(float(doc["radius"]))
    if kind == "box":
        return BoxShape(np.asarray(doc["half_extents"], dtype=float))
    raise ScenarioError(f"unknown shape type {kind!r}")


def load_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    objects = []
    seen = set()
    for od in doc.get("objects", []):
        oid = od["id"]
        if oid in seen:
            raise ScenarioError(f"duplicate object id {oid!r}")
        seen.add(oid)
        try:
            role = Role(od["role"])
        except ValueError:
            raise ScenarioError(f"unknown role {od['role']!r} on object {oid!r}") from None
        pose = od["pose"]
        objects.append(
            WorldObject(
                id=oid,
                role=role,
                shape=_parse_shape(od["shape"]),
                position=np.asarray(pose["position"], dtype=float),
                heading=float(pose.get("heading", 0.0)),
            )
        )
    th = doc.get("thresholds", {})
    gr = doc.get("gripper", {})
    ge = doc.get("geometry", {})
    bs = doc.get("base_start", {})
    scenario = Scenario(
        objects=tuple(objects),
        thresholds=Thresholds(**{k: float(v) for k, v in th.items()}),
        gripper=GripperParams(**{k: float(v) for k, v in gr.items()}),
        geometry=Geometry(**{k: float(v) for k, v in ge.items()}),
        base_start=BasePose(
            position=np.asarray(bs.get("position", (0.0, 0.0, 0.0)), dtype=float),
            heading=float(bs.get("heading", 0.0)),
        ),
    )
    # the mission needs these to exist, and exactly once
    for role in (Role.BOTTLE, Role.BOX, Role.EMERGENCY_BUTTON):
        scenario.one(role)
    return scenario


def gripper_step(
    g: GripperState,
    width: float | None,
    dt: float,
    v_g: float,
    k_g: float,
    f_grip_max: float,
) -> GripperState:
    """Move the jaws toward the target at v_g and squeeze whatever is in them.

    With an object of the given width at the jaws, closing below the width
    builds grasp force k_g * (width - aperture); the jaws stall where that
    force reaches f_grip_max.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    goal = 0.0 if g.target is GripperTarget.CLOSED else g.aperture_max
    step = v_g * dt
    if g.aperture < goal:
        aperture = min(g.aperture + step, goal)
    else:
        aperture = max(g.aperture - step, goal)
    force = 0.0
    if width is not None and aperture < width:
        stall = width - f_grip_max / k_g
        if aperture < stall:
            aperture = stall
        force = min(k_g * (width - aperture), f_grip_max)
    return GripperState(
        aperture=aperture,
        target=g.target,
        grasp_force=force,
        aperture_max=g.aperture_max,
    )


@dataclass(frozen=True)
class ContactReport:
    grasp_force: float
    left_ee_force: float
    ee_forces: dict[str, float]      # left-EE penalty force per object id
    collisions: dict[str, bool]      # per-object collision flags

    def __post_init__(self):
        if self.grasp_force < 0 or self.left_ee_force < 0:
            raise ValueError("contact forces cannot be negative")

    @property
    def any_collision(self) -> bool:
        return any(self.collisions.values())


@dataclass
class WorldEvents:
    """What the phase machine needs to know about one tick."""

    activated: bool = False        # filled in by the session, not the world
    grasped: bool = False
    lifted: bool = False
    released_in_box: bool = False
    dropped: bool = False
    collided_ids: list[str] = field(default_factory=list)
    button_pressed: bool = False


@dataclass(frozen=True)
class RobotContacts:
    """Geometry the world needs from the robot, all in world frame."""

    right_ee: np.ndarray
    left_ee: np.ndarray
    right_points: np.ndarray   # (N+1, 3) joint origins plus EE
    left_points: np.ndarray
    base_xy: np.ndarray
    footprint_radius: float


class World:
    """Owns the bottle, the gripper jaws, and all contact bookkeeping."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        bottle = scenario.one(Role.BOTTLE)
        if not isinstance(bottle.shape, Sphere):
            raise ScenarioError("the bottle must be a sphere")
        self.bottle_pos = bottle.position.copy()
        self.bottle_radius = bottle.shape.radius
        self._spawn_z = float(bottle.position[2])
        self.attached = False
        self._grasp_offset = np.zeros(3)
        self._held = False  # grasp force was >= f_hold on the previous tick
        self.gripper = GripperState(
            aperture=scenario.gripper.aperture_max,
            target=GripperTarget.OPEN,
            grasp_force=0.0,
            aperture_max=scenario.gripper.aperture_max,
        )
        self._box = scenario.one(Role.BOX)
        self._button = scenario.one(Role.EMERGENCY_BUTTON)

    def set_gripper_target(self, target: GripperTarget) -> None:
        self.gripper = replace(self.gripper, target=target)

    def _width_at_jaws(self, jaw_pos: np.ndarray) -> float | None:
        if self.attached:
            return 2.0 * self.bottle_radius
        gap = float(np.linalg.norm(self.bottle_pos - jaw_pos))
        if gap <= self.scenario.geometry.capture_radius:
            return 2.0 * self.bottle_radius
        return None

    def step(self, contacts: RobotContacts, dt: float) -> tuple[ContactReport, WorldEvents]:
        th = self.scenario.thresholds
        geo = self.scenario.geometry
        events = WorldEvents()
        jaw_pos = contacts.right_ee

        self.gripper = gripper_step(
            self.gripper, self._width_at_jaws(jaw_pos), dt,
            self.scenario.gripper.v_g, th.k_g, th.f_grip_max,
        )
        holding = self.gripper.grasp_force >= th.f_hold

        if not self.attached and holding:
            self.attached = True
            self._grasp_offset = self.bottle_pos - jaw_pos
        elif self.attached and self._held and not holding:
            if self._box.contains(self.bottle_pos):
                self.attached = False
                events.released_in_box = True
            else:
                # dropped mid-transport: record it and put the bottle back
                # between the jaws so the run can continue
                events.dropped = True
                self._grasp_offset = np.zeros(3)
        self._held = holding

        if self.attached:
            self.bottle_pos = jaw_pos + self._grasp_offset

        ee_forces: dict[str, float] = {}
        for obj in self.scenario.objects:
            if obj.role is Role.BOTTLE:
                continue
            depth = obj.sphere_penetration(contacts.left_ee, geo.ee_radius)
            ee_forces[obj.id] = th.k_c * depth
        left_force = max(ee_forces.values(), default=0.0)

        collisions = {obj.id: False for obj in self.scenario.objects}
        for obj in self.scenario.objects:
            if obj.role not in COLLIDABLE_ROLES:
                continue
            hit = obj.disc_overlaps(contacts.base_xy, contacts.footprint_radius)
            if not hit:
                for pts, tip in ((contacts.right_points, contacts.right_ee),
                                 (contacts.left_points, contacts.left_ee)):
                    if any(obj.contains(p) for p in pts):
                        hit = True
                        break
                    if obj.sphere_penetration(tip, geo.ee_radius) > 0.0:
                        hit = True
                        break
            if hit:
                collisions[obj.id] = True
                events.collided_ids.append(obj.id)

        events.grasped = holding
        events.lifted = self.attached and (
            float(self.bottle_pos[2]) > self._spawn_z + geo.lift_eps
        )
        events.button_pressed = ee_forces.get(self._button.id, 0.0) >= th.f_press

        report = ContactReport(
            grasp_force=self.gripper.grasp_force,
            left_ee_force=left_force,
            ee_forces=ee_forces,
            collisions=collisions,
        )
        return report, events


@dataclass
class MissionState:
    phase: MissionPhase = MissionPhase.PICK_BOTTLE
    failures: set[FailureKind] = field(default_factory=set)
    t_start: float | None = None
    t_end: float | None = None
    phase_starts: dict[MissionPhase, float] = field(default_factory=dict)

    @property
    def started(self) -> bool:
        return self.t_start is not None

    @property
    def done(self) -> bool:
        return self.phase is MissionPhase.DONE

    @property
    def completion_time(self) -> float | None:
        if self.t_start is None or self.t_end is None:
            return None
        return self.t_end - self.t_start


def mission_update(mission: MissionState, events: WorldEvents, t: float) -> MissionState:
    """Advance the phase machine; failures accumulate and phases only go forward."""
    if mission.done:
        return mission
    if events.activated and mission.t_start is None:
        mission.t_start = t
        mission.phase_starts.setdefault(MissionPhase.PICK_BOTTLE, t)
    if events.dropped:
        mission.failures.add(FailureKind.BOTTLE_DROPPED)
    if events.collided_ids:
        mission.failures.add(FailureKind.COLLISION)
    if mission.phase is MissionPhase.PICK_BOTTLE:
        if events.grasped and events.lifted:
            mission.phase = MissionPhase.PLACE_IN_BOX
            mission.phase_starts[mission.phase] = t
    elif mission.phase is MissionPhase.PLACE_IN_BOX:
        if events.released_in_box:
            mission.phase = MissionPhase.PRESS_BUTTON
            mission.phase_starts[mission.phase] = t
    elif mission.phase is MissionPhase.PRESS_BUTTON:
        if events.button_pressed:
            mission.phase = MissionPhase.DONE
            mission.phase_starts[mission.phase] = t
            mission.t_end = t
    return mission


class TrialError(RuntimeError):
    """Raised when a report is requested for a trial that cannot have one."""


def trial_report(mission: MissionState) -> dict:
    """Metrics for a finished trial: completion time, failures, phase splits."""
    if not mission.started:
        raise TrialError("trial never started: no activation was recorded")
    if not mission.done:
        raise TrialError(f"trial aborted in phase {mission.phase.value}")
    phases = {}
    ordered = [p for p in MissionPhase if p in mission.phase_starts]
    for current, nxt in zip(ordered, ordered[1:]):
        phases[current.value] = mission.phase_starts[nxt] - mission.phase_starts[current]
    return {
        "completion_time_s": mission.completion_time,
        "failure_count": len(mission.failures),
        "failures": sorted(f.value for f in mission.failures),
        "phase_durations_s": phases,
    }
