"""Rope-style teleoperation control core.

Operator wrist displacement stretches a virtual rope anchored at the
activation pose; rope tension becomes a 3D virtual force on the selected
robot control point.  Arm control points run a joint-space admittance law
(diagonal mass-spring-damper driven by J^T f); the base control point maps
force straight to a Cartesian velocity reference.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from tpo import kernels
from tpo.defs import ControlPoint, Side
from tpo.robot import RobotModel, integrate_base, BasePose


@dataclass(frozen=True)
class AdmittanceParams:
    """Diagonal joint mass-spring-damper with equilibrium q_eq."""

    m: np.ndarray
    k: np.ndarray
    d: np.ndarray
    q_eq: np.ndarray

    def __post_init__(self):
        for name in ("m", "k", "d", "q_eq"):
            v = np.ascontiguousarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, v)
        n = self.m.shape
        if not (self.k.shape == n and self.d.shape == n and self.q_eq.shape == n):
            raise ValueError("admittance parameter dimensions differ")
        if np.any(self.m <= 0):
            raise ValueError("mass entries must be positive")
        if np.any(self.d <= 0):
            raise ValueError("damping entries must be positive")
        if np.any(self.k < 0):
            raise ValueError("stiffness entries must be nonnegative")

    @property
    def n(self) -> int:
        return self.m.shape[0]


@dataclass(frozen=True)
class CartesianGains:
    """Diagonal force-to-velocity gains for the base control point."""

    k_cart: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.k_cart, dtype=float)
        if v.shape != (3,):
            raise ValueError("K_cart must have 3 entries")
        if np.any(v < 0):
            raise ValueError("K_cart entries must be nonnegative")
        object.__setattr__(self, "k_cart", v)


@dataclass(frozen=True)
class OperatorArmState:
    """One operator arm: tracked wrist, rope anchor, and rope parameters."""

    wrist: np.ndarray
    anchor: np.ndarray | None = None
    active: bool = False
    gain: float = 50.0      # rope stiffness, N/m of stretch beyond the deadzone
    deadzone: float = 0.02  # stretch radius producing no force, m

    def __post_init__(self):
        w = np.ascontiguousarray(self.wrist, dtype=float)
        if w.shape != (3,) or not np.all(np.isfinite(w)):
            raise ValueError("wrist must be a finite 3-vector")
        object.__setattr__(self, "wrist", w)
        if self.anchor is not None:
            a = np.ascontiguousarray(self.anchor, dtype=float)
            if a.shape != (3,) or not np.all(np.isfinite(a)):
                raise ValueError("anchor must be a finite 3-vector")
            object.__setattr__(self, "anchor", a)
        if self.gain <= 0:
            raise ValueError("rope gain must be positive")
        if self.deadzone < 0:
            raise ValueError("deadzone must be nonnegative")
        if self.active and self.anchor is None:
            raise ValueError("active arm needs an anchor")


@dataclass(frozen=True)
class VirtualForce:
    f: np.ndarray
    source: Side
    target: ControlPoint

    def __post_init__(self):
        v = np.ascontiguousarray(self.f, dtype=float)
        if v.shape != (3,) or not np.all(np.isfinite(v)):
            raise ValueError("force must be a finite 3-vector")
        object.__setattr__(self, "f", v)
        if self.source is Side.RIGHT and self.target is not ControlPoint.RIGHT_EE:
            raise ValueError("right arm attaches only to the right end-effector")
        if self.source is Side.LEFT and self.target is ControlPoint.RIGHT_EE:
            raise ValueError("left arm cannot attach to the right end-effector")

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.f))


@dataclass(frozen=True)
class ReferenceState:
    q_ref: np.ndarray
    q_dot_ref: np.ndarray
    q_ddot_ref: np.ndarray

    def __post_init__(self):
        for name in ("q_ref", "q_dot_ref", "q_ddot_ref"):
            v = np.ascontiguousarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"non-finite {name}")
            object.__setattr__(self, name, v)
        if not (self.q_ref.shape == self.q_dot_ref.shape == self.q_ddot_ref.shape):
            raise ValueError("reference dimensions differ")

    @classmethod
    def at_rest(cls, q: np.ndarray) -> "ReferenceState":
        z = np.zeros_like(np.asarray(q, dtype=float))
        return cls(np.asarray(q, dtype=float).copy(), z, z.copy())


def set_anchor_on_activation(arm: OperatorArmState) -> OperatorArmState:
    """Anchor the rope at the current wrist so activation starts force-free."""
    return replace(arm, anchor=arm.wrist.copy(), active=True)


def compute_virtual_force(
    arm: OperatorArmState,
    source: Side,
    target: ControlPoint,
    f_max: float = math.inf,
) -> VirtualForce:
    """Rope tension from wrist displacement beyond the anchor deadzone.

    f = gain * (|d| - deadzone) * d/|d| for d = wrist - anchor, zero inside
    the deadzone and for inactive arms; |f| saturates at f_max.
    """
    zero = VirtualForce(np.zeros(3), source, target)
    if not arm.active or arm.anchor is None:
        return zero
    d = arm.wrist - arm.anchor
    dist = float(np.linalg.norm(d))
    if dist <= arm.deadzone or dist == 0.0:
        return zero
    mag = arm.gain * (dist - arm.deadzone)
    if mag > f_max:
        mag = f_max
    return VirtualForce(d * (mag / dist), source, target)


def admittance_step(
    params: AdmittanceParams,
    q: np.ndarray,
    ref: ReferenceState,
    jac: np.ndarray,
    force: VirtualForce,
    dt: float,
    substeps: int = 20,
) -> ReferenceState:
    """One control tick of q_ddot = M^-1 (K (q_eq - q) - D q_dot_prev + J^T f).

    The damping term always uses the previous velocity; integration is
    semi-implicit Euler, sub-stepped inside the tick for accuracy (the
    measured q is held for the whole tick).  The returned q_ddot_ref is
    the acceleration at the start of the tick.
    """
    if dt <= 0 or not math.isfinite(dt):
        raise ValueError("dt must be positive and finite")
    q = np.ascontiguousarray(q, dtype=float)
    if q.shape != (params.n,):
        raise ValueError("q dimension does not match parameters")
    jac = np.ascontiguousarray(jac, dtype=float)
    if jac.shape != (3, params.n):
        raise ValueError("Jacobian shape does not match parameters")
    if not np.all(np.isfinite(q)):
        raise ValueError("non-finite q")
    jtf = kernels.jt_force(jac, force.f)
    q_ref, qd_ref, qdd0 = kernels.admittance_advance(
        params.m, params.k, params.d, params.q_eq,
        q, ref.q_ref, ref.q_dot_ref, jtf, dt, int(substeps),
    )
    return ReferenceState(q_ref, qd_ref, qdd0)


def base_velocity_reference(
    gains: CartesianGains, force: VirtualForce, v_max: float = math.inf
) -> np.ndarray:
    """x_dot_ref = diag(K_cart) f, componentwise-limited to v_max."""
    if force.target is not ControlPoint.BASE:
        raise ValueError("force does not target the base control point")
    v = gains.k_cart * force.f
    if math.isfinite(v_max):
        v = np.clip(v, -v_max, v_max)
    return v


@dataclass(frozen=True)
class ControlProfile:
    """Everything the control core needs, loadable from a profile file."""

    admittance: AdmittanceParams
    gain: float = 50.0
    deadzone: float = 0.02
    cart_gains: CartesianGains = field(default_factory=lambda: CartesianGains(np.array([0.1, 0.1, 0.0])))
    dt: float = 0.01
    f_max: float = 20.0
    v_max: float = 1.0
    substeps: int = 20
    tracking_lag_tau: float = 0.0  # 0 = perfect tracking (q follows q_ref)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    def to_dict(self) -> dict:
        return {
            "M": self.admittance.m.tolist(),
            "K": self.admittance.k.tolist(),
            "D": self.admittance.d.tolist(),
            "q_eq": self.admittance.q_eq.tolist(),
            "K_f": self.gain,
            "deadzone": self.deadzone,
            "K_cart": self.cart_gains.k_cart.tolist(),
            "dt": self.dt,
            "f_max": self.f_max,
            "v_max": self.v_max,
            "substeps": self.substeps,
            "tracking_lag_tau": self.tracking_lag_tau,
        }


def load_profile(text: str) -> ControlProfile:
    doc = json.loads(text)
    params = AdmittanceParams(
        m=np.asarray(doc["M"], dtype=float),
        k=np.asarray(doc["K"], dtype=float),
        d=np.asarray(doc["D"], dtype=float),
        q_eq=np.asarray(doc["q_eq"], dtype=float),
    )
    return ControlProfile(
        admittance=params,
        gain=float(doc["K_f"]),
        deadzone=float(doc["deadzone"]),
        cart_gains=CartesianGains(np.asarray(doc["K_cart"], dtype=float)),
        dt=float(doc["dt"]),
        f_max=float(doc["f_max"]),
        v_max=float(doc.get("v_max", 1.0)),
        substeps=int(doc.get("substeps", 20)),
        tracking_lag_tau=float(doc.get("tracking_lag_tau", 0.0)),
    )


@dataclass
class TickResult:
    force_right: VirtualForce
    force_left: VirtualForce
    base_velocity: np.ndarray       # (3,), zero unless the left rope drives the base
    right_ref: "ReferenceState"
    left_ref: "ReferenceState"
    base_pose: BasePose


class ControlCore:
    """Owns all mutable control state and advances it one fixed tick at a time.

    Single-threaded by contract: feed it inputs, read back immutable
    snapshots.  Activation flags and the left control point are commanded
    from outside (command-input module); the core only routes forces.
    """

    def __init__(self, model: RobotModel, profile: ControlProfile):
        self.model = model
        self.profile = profile
        self.arms = {
            Side.RIGHT: OperatorArmState(
                np.zeros(3), gain=profile.gain, deadzone=profile.deadzone
            ),
            Side.LEFT: OperatorArmState(
                np.zeros(3), gain=profile.gain, deadzone=profile.deadzone
            ),
        }
        self.q = {
            Side.RIGHT: model.home_q("right"),
            Side.LEFT: model.home_q("left"),
        }
        self.refs = {
            Side.RIGHT: ReferenceState.at_rest(self.q[Side.RIGHT]),
            Side.LEFT: ReferenceState.at_rest(self.q[Side.LEFT]),
        }
        self.base = BasePose(np.zeros(3))
        self.left_cp = ControlPoint.LEFT_EE

    def set_wrist(self, side: Side, wrist) -> None:
        self.arms[side] = replace(
            self.arms[side], wrist=np.ascontiguousarray(wrist, dtype=float)
        )

    def set_active(self, side: Side, active: bool) -> None:
        """Activation edge handling: anchor on engage, halt reference on release."""
        arm = self.arms[side]
        if active and not arm.active:
            self.arms[side] = set_anchor_on_activation(arm)
        elif not active and arm.active:
            self.arms[side] = replace(arm, active=False)
            self._halt(side)

    def set_left_control_point(self, cp: ControlPoint) -> None:
        if cp not in (ControlPoint.LEFT_EE, ControlPoint.BASE):
            raise ValueError("left arm attaches only to the left end-effector or the base")
        if cp is not self.left_cp:
            self.left_cp = cp
            # rope re-attached elsewhere: the left chain keeps its pose but
            # sheds any residual reference velocity so nothing coasts, and
            # the rope re-anchors so the switch itself exerts no force
            self._halt(Side.LEFT)
            if self.arms[Side.LEFT].active:
                self.arms[Side.LEFT] = set_anchor_on_activation(self.arms[Side.LEFT])

    def _halt(self, side: Side) -> None:
        ref = self.refs[side]
        z = np.zeros_like(ref.q_dot_ref)
        self.refs[side] = ReferenceState(ref.q_ref.copy(), z, z.copy())

    def _chain(self, side: Side):
        return self.model.right if side is Side.RIGHT else self.model.left

    def _step_arm(self, side: Side, force: VirtualForce, dt: float) -> None:
        chain = self._chain(side)
        jac = kernels.fk_jacobian(
            chain.axes, chain.offsets, chain.base_rot, chain.base_pos,
            self.q[side],
        )[1]
        self.refs[side] = admittance_step(
            self.profile.admittance, self.q[side], self.refs[side],
            jac, force, dt, self.profile.substeps,
        )

    def _track(self, side: Side, dt: float) -> None:
        tau = self.profile.tracking_lag_tau
        q_ref = self.refs[side].q_ref
        if tau <= 0.0:
            self.q[side] = q_ref.copy()
        else:
            alpha = dt / (tau + dt)
            self.q[side] = self.q[side] + alpha * (q_ref - self.q[side])

    def tick(self, dt: float) -> TickResult:
        """Advance one fixed control period using the held operator inputs."""
        if abs(dt - self.profile.dt) > 1e-12:
            raise ValueError("tick period differs from the configured dt")
        f_right = compute_virtual_force(
            self.arms[Side.RIGHT], Side.RIGHT, ControlPoint.RIGHT_EE, self.profile.f_max
        )
        f_left = compute_virtual_force(
            self.arms[Side.LEFT], Side.LEFT, self.left_cp, self.profile.f_max
        )

        if self.arms[Side.RIGHT].active:
            self._step_arm(Side.RIGHT, f_right, dt)
            self._track(Side.RIGHT, dt)

        base_vel = np.zeros(3)
        if self.arms[Side.LEFT].active:
            if self.left_cp is ControlPoint.LEFT_EE:
                self._step_arm(Side.LEFT, f_left, dt)
                self._track(Side.LEFT, dt)
            else:
                base_vel = base_velocity_reference(
                    self.profile.cart_gains, f_left, self.profile.v_max
                )
                self.base = integrate_base(self.base, base_vel, dt)

        return TickResult(
            force_right=f_right,
            force_left=f_left,
            base_velocity=base_vel,
            right_ref=self.refs[Side.RIGHT],
            left_ref=self.refs[Side.LEFT],
            base_pose=self.base,
        )
