"""Poses, twists, wrenches and the frame transforms used by the pipeline.

Quaternions are stored scalar-first, ``[w, x, y, z]``. Twists and wrenches
carry a frame tag; every transform checks it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from omnivic.errors import ContractViolation

GRAVITY = 9.81
_Z_AXIS = np.array([0.0, 0.0, 1.0])


class Frame(enum.Enum):
    WORLD = "World"
    BODY = "Body"


def _vec3(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ContractViolation(f"{name} must have 3 components, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} has non-finite components: {arr}")
    arr.flags.writeable = False
    return arr


# -- quaternion helpers -----------------------------------------------------


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate([[math.cos(half)], math.sin(half) * axis])


def quat_log(q: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle) of a unit quaternion, angle in (-pi, pi]."""
    w = q[0]
    v = np.asarray(q[1:], dtype=float)
    if w < 0.0:
        # q and -q are the same rotation; pick the short way round.
        w, v = -w, -v
    s = float(np.linalg.norm(v))
    if s < 1e-15:
        return 2.0 * v  # first-order term; exact at identity
    angle = 2.0 * math.atan2(s, w)
    return v * (angle / s)


# -- value types ------------------------------------------------------------


@dataclass(frozen=True)
class Pose:
    """Position (m) and unit orientation quaternion, renormalized on construction."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        q = np.array(self.orientation, dtype=float).reshape(-1)
        if q.shape != (4,) or not np.all(np.isfinite(q)):
            raise ContractViolation(f"orientation must be 4 finite numbers, got {q}")
        n = float(np.linalg.norm(q))
        if n < 1e-12:
            raise ContractViolation("orientation quaternion has zero norm")
        q = q / n
        q.flags.writeable = False
        object.__setattr__(self, "orientation", q)

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)


@dataclass(frozen=True)
class Twist:
    linear: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frame: Frame = Frame.WORLD

    def __post_init__(self):
        object.__setattr__(self, "linear", _vec3(self.linear, "linear"))
        object.__setattr__(self, "angular", _vec3(self.angular, "angular"))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])


@dataclass(frozen=True)
class Wrench:
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frame: Frame = Frame.WORLD
    gravity_compensated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "force", _vec3(self.force, "force"))
        object.__setattr__(self, "torque", _vec3(self.torque, "torque"))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])


# -- operations -------------------------------------------------------------


def pose_error(desired: Pose, actual: Pose) -> np.ndarray:
    """6-vector ``[dp, rotvec]`` from ``actual`` to ``desired``.

    The rotational part is the log map of ``q_d * q_a^-1``.
    """
    dp = desired.position - actual.position
    q_err = quat_mul(desired.orientation, quat_conj(actual.orientation))
    return np.concatenate([dp, quat_log(q_err)])


def adjoint_twist_to_world(body_twist: Twist, ee_pose: Pose) -> Twist:
    """Re-express a body-frame twist in the world frame.

    The linear part is taken at the end-effector origin after the lever-arm
    term ``p x (R w)``.
    """
    if body_twist.frame is not Frame.BODY:
        raise ContractViolation(f"expected a Body-frame twist, got {body_twist.frame.value}")
    R = ee_pose.rotation
    w = R @ body_twist.angular
    v = R @ body_twist.linear + np.cross(ee_pose.position, w)
    return Twist(v, w, Frame.WORLD)


def adjoint_twist_to_body(world_twist: Twist, ee_pose: Pose) -> Twist:
    """Inverse of :func:`adjoint_twist_to_world`."""
    if world_twist.frame is not Frame.WORLD:
        raise ContractViolation(f"expected a World-frame twist, got {world_twist.frame.value}")
    R = ee_pose.rotation
    w = R.T @ world_twist.angular
    v = R.T @ (world_twist.linear - np.cross(ee_pose.position, world_twist.angular))
    return Twist(v, w, Frame.BODY)


def wrench_to_world_compensated(raw: Wrench, ee_pose: Pose, tool_mass: float,
                                tool_com=(0.0, 0.0, 0.0)) -> Wrench:
    """Rotate a raw sensor wrench into the world frame and remove the tool weight.

    ``tool_com`` is expressed in the end-effector frame. The returned torque
    is about the sensor origin, expressed in world axes.
    """
    if raw.frame is not Frame.BODY:
        raise ContractViolation(f"expected a Body-frame wrench, got {raw.frame.value}")
    if raw.gravity_compensated:
        raise ContractViolation("wrench is already gravity compensated")
    if tool_mass < 0:
        raise ContractViolation(f"tool_mass must be non-negative, got {tool_mass}")
    R = ee_pose.rotation
    weight = -tool_mass * GRAVITY * _Z_AXIS
    com_world = R @ _vec3(tool_com, "tool_com")
    force = R @ raw.force - weight
    torque = R @ raw.torque - np.cross(com_world, weight)
    return Wrench(force, torque, Frame.WORLD, gravity_compensated=True)
