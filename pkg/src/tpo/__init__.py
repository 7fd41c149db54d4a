"""Haptics-enabled rope-style teleoperation of a simulated mobile manipulator.

Operator arm displacements stretch virtual ropes attached to robot control
points; rope tension drives a joint-space admittance law on the arms or a
velocity law on the base.  The package bundles the control core, wearable
command input and haptic feedback, a desk-scale mission world, and the
operator-station wire protocol with deterministic trial logging.
"""

from tpo.defs import Condition, ControlPoint, MissionPhase, Side
from tpo.kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "Condition",
    "ControlPoint",
    "MissionPhase",
    "Side",
    "KERNEL_BACKEND",
    "__version__",
]
