"""Kinematic model of the simulated dual-arm mobile manipulator.

Two revolute serial arms on a planar-mobile base body; the right arm
carries a 1-DOF gripper, the left a passive ball end-effector.  Only
position kinematics: forward kinematics, 3xN position Jacobians, and
Euler integration of the base pose.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from tpo import kernels
from tpo.defs import GripperTarget

AXIS_UNIT_TOL = 1e-9


class DescriptionError(ValueError):
    """Malformed or invalid robot description."""


def _as_vec(x, n, what):
    a = np.asarray(x, dtype=float)
    if a.shape != (n,):
        raise ValueError(f"{what}: expected {n} entries, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what}: non-finite entries")
    return a


def rotation_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return rz @ ry @ rx


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@dataclass(frozen=True)
class KinematicChain:
    """Serial revolute chain, rooted by a rigid transform in the base frame.

    Joint i rotates about axes[i] (unit, in the preceding link frame);
    the link then extends by offsets[i] in the rotated frame.
    """

    name: str
    axes: np.ndarray      # (N, 3)
    offsets: np.ndarray   # (N, 3)
    base_rot: np.ndarray  # (3, 3)
    base_pos: np.ndarray  # (3,)

    def __post_init__(self):
        axes = np.ascontiguousarray(self.axes, dtype=float)
        offsets = np.ascontiguousarray(self.offsets, dtype=float)
        if axes.ndim != 2 or axes.shape[1] != 3 or axes.shape[0] < 1:
            raise DescriptionError(f"chain {self.name}: needs at least one joint")
        if offsets.shape != axes.shape:
            raise DescriptionError(f"chain {self.name}: offsets/axes shape mismatch")
        if not (np.all(np.isfinite(axes)) and np.all(np.isfinite(offsets))):
            raise DescriptionError(f"chain {self.name}: non-finite link data")
        norms = np.linalg.norm(axes, axis=1)
        bad = np.abs(norms - 1.0) > AXIS_UNIT_TOL
        if np.any(bad):
            raise DescriptionError(
                f"chain {self.name}: joint axis {int(np.argmax(bad))} is not unit norm"
            )
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "base_rot", np.ascontiguousarray(self.base_rot, dtype=float))
        object.__setattr__(self, "base_pos", np.ascontiguousarray(self.base_pos, dtype=float))

    @property
    def n(self) -> int:
        return self.axes.shape[0]

    def check_dim(self, q) -> np.ndarray:
        q = np.ascontiguousarray(q, dtype=float)
        if q.shape != (self.n,):
            raise ValueError(f"chain {self.name}: expected {self.n} joint values, got {q.shape}")
        return q


@dataclass
class JointState:
    q: np.ndarray
    q_dot: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.q_dot = np.asarray(self.q_dot, dtype=float)
        if self.q.shape != self.q_dot.shape:
            raise ValueError("q and q_dot dimensions differ")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.q_dot))):
            raise ValueError("non-finite joint state")


@dataclass(frozen=True)
class BasePose:
    position: np.ndarray  # (3,) meters, world frame
    heading: float = 0.0  # radians, wrapped to (-pi, pi]

    def __post_init__(self):
        pos = _as_vec(self.position, 3, "base position")
        object.__setattr__(self, "position", pos)
        if not math.isfinite(self.heading):
            raise ValueError("non-finite heading")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    def to_world(self, p_local: np.ndarray) -> np.ndarray:
        """Map a point from the base frame to the world frame."""
        c = math.cos(self.heading)
        s = math.sin(self.heading)
        x, y, z = float(p_local[0]), float(p_local[1]), float(p_local[2])
        return np.array(
            (
                self.position[0] + (c * x - s * y),
                self.position[1] + (s * x + c * y),
                self.position[2] + z,
            )
        )


@dataclass
class GripperState:
    aperture: float
    target: GripperTarget = GripperTarget.OPEN
    grasp_force: float = 0.0
    aperture_max: float = 0.12

    def __post_init__(self):
        if not 0.0 <= self.aperture <= self.aperture_max:
            raise ValueError("aperture outside [0, aperture_max]")
        if self.grasp_force < 0.0:
            raise ValueError("negative grasp force")


@dataclass(frozen=True)
class RobotModel:
    right: KinematicChain
    left: KinematicChain
    gripper_aperture_max: float
    footprint_radius: float = 0.24
    home: dict = field(default_factory=dict)  # side name -> (N,) home configuration

    def chain(self, side_name: str) -> KinematicChain:
        return self.right if side_name == "right" else self.left

    def home_q(self, side_name: str) -> np.ndarray:
        chain = self.chain(side_name)
        q = self.home.get(side_name)
        if q is None:
            return np.zeros(chain.n)
        return np.asarray(q, dtype=float).copy()


def forward_kinematics(chain: KinematicChain, q) -> np.ndarray:
    """End-effector position of the chain, in the robot-base frame."""
    q = chain.check_dim(q)
    return kernels.fk_point(chain.axes, chain.offsets, chain.base_rot, chain.base_pos, q)


def jacobian(chain: KinematicChain, q) -> np.ndarray:
    """3xN position Jacobian of the terminal point; column j = dp/dq_j."""
    q = chain.check_dim(q)
    _, jac, _ = kernels.fk_jacobian(chain.axes, chain.offsets, chain.base_rot, chain.base_pos, q)
    return jac


def chain_points(chain: KinematicChain, q) -> np.ndarray:
    """(N+1, 3) joint origins plus end-effector point, base frame."""
    q = chain.check_dim(q)
    p, _, joints = kernels.fk_jacobian(
        chain.axes, chain.offsets, chain.base_rot, chain.base_pos, q
    )
    return np.vstack([joints, p])


def integrate_base(pose: BasePose, x_dot_ref, dt: float) -> BasePose:
    """One Euler step of the base position; heading is held constant."""
    if not (isinstance(dt, (int, float)) and math.isfinite(dt) and dt > 0):
        raise ValueError("dt must be positive and finite")
    v = _as_vec(x_dot_ref, 3, "base velocity reference")
    return BasePose(position=pose.position + v * dt, heading=pose.heading)


def _parse_chain(entry: dict, index: int) -> KinematicChain:
    if not isinstance(entry, dict):
        raise DescriptionError(f"arms[{index}]: expected an object")
    name = entry.get("name")
    if name not in ("right", "left"):
        raise DescriptionError(f"arms[{index}]: name must be 'right' or 'left'")
    links = entry.get("links")
    if not isinstance(links, list) or not links:
        raise DescriptionError(f"arm {name}: needs a non-empty links list")
    axes = []
    offsets = []
    for li, link in enumerate(links):
        try:
            axes.append([float(v) for v in link["axis"]])
            offsets.append([float(v) for v in link["offset"]])
        except (KeyError, TypeError, ValueError) as e:
            raise DescriptionError(f"arm {name} link {li}: {e}") from e
        if len(axes[-1]) != 3 or len(offsets[-1]) != 3:
            raise DescriptionError(f"arm {name} link {li}: axis/offset must be 3-vectors")
    mount = entry.get("mount", {})
    pos = np.asarray(mount.get("position", (0.0, 0.0, 0.0)), dtype=float)
    rpy = mount.get("rpy", (0.0, 0.0, 0.0))
    rot = rotation_rpy(float(rpy[0]), float(rpy[1]), float(rpy[2]))
    return KinematicChain(
        name=name,
        axes=np.array(axes),
        offsets=np.array(offsets),
        base_rot=rot,
        base_pos=pos,
    )


def load_robot_description(text: str) -> RobotModel:
    """Parse a robot description document (JSON) into a RobotModel."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DescriptionError(f"robot description is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise DescriptionError("robot description must be a JSON object")
    arms = doc.get("arms")
    if not isinstance(arms, list) or len(arms) != 2:
        raise DescriptionError("description needs exactly two arms")
    chains = {}
    home = {}
    for i, entry in enumerate(arms):
        chain = _parse_chain(entry, i)
        if chain.name in chains:
            raise DescriptionError(f"duplicate arm name {chain.name}")
        chains[chain.name] = chain
        if "home" in entry:
            hq = np.asarray(entry["home"], dtype=float)
            if hq.shape != (chain.n,):
                raise DescriptionError(f"arm {chain.name}: home length != N")
            home[chain.name] = hq
    if set(chains) != {"right", "left"}:
        raise DescriptionError("arms must be tagged right and left")
    gripper = doc.get("gripper")
    if not isinstance(gripper, dict) or "aperture_max" not in gripper:
        raise DescriptionError("missing gripper.aperture_max")
    aperture_max = float(gripper["aperture_max"])
    if not (aperture_max > 0 and math.isfinite(aperture_max)):
        raise DescriptionError("gripper.aperture_max must be positive")
    base = doc.get("base")
    if not isinstance(base, dict):
        raise DescriptionError("missing base object")
    footprint = float(base.get("footprint_radius", 0.24))
    if footprint <= 0:
        raise DescriptionError("base.footprint_radius must be positive")
    return RobotModel(
        right=chains["right"],
        left=chains["left"],
        gripper_aperture_max=aperture_max,
        footprint_radius=footprint,
        home=home,
    )
