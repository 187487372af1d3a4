"""Desk-scale contact environments and their penalty contact model.

All environments are translational. The end effector travels mainly along
world ``-y``; ``z`` is up.

* Drawer: a slider whose front face sits at ``y = q`` (``q`` = open
  distance, closed at ``q = 0``). It has static/kinetic friction and a hard
  stop at closed.
* Ramp: a fixed surface ``z = h(y)``, piecewise linear.
* Push: a sliding object whose rear face sits at ``y = y_o``, with Coulomb
  friction against the table.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from omnivic.errors import ContractViolation
from omnivic.geometry import GRAVITY, Frame, Wrench

_EPS_V = 1e-3  # m/s, Coulomb smoothing


class EnvKind(enum.Enum):
    DRAWER = "Drawer"
    RAMP = "Ramp"
    PUSH = "Push"


@dataclass(frozen=True)
class DrawerGeometry:
    open_distance: float = 0.15   # m
    static_friction: float = 6.0  # N
    kinetic_friction: float = 4.0  # N
    mass: float = 1.5             # kg
    closed_tolerance: float = 0.005

    def validate(self):
        if not (self.open_distance > 0 and self.mass > 0):
            raise ContractViolation("drawer travel and mass must be positive")
        if not (0 <= self.kinetic_friction <= self.static_friction):
            raise ContractViolation("need 0 <= kinetic friction <= static friction")


@dataclass(frozen=True)
class RampGeometry:
    """Surface height profile as ``(y, z)`` breakpoints with increasing ``y``.

    Heights are held constant beyond the first and last breakpoints.
    """

    profile: tuple = ((-1.0, 0.0), (2.0, 0.0))
    friction_coefficient: float = 0.1
    viscous_friction: float = 2.0  # N s/m

    def validate(self):
        ys = [p[0] for p in self.profile]
        if len(ys) < 2 or any(b <= a for a, b in zip(ys, ys[1:])):
            raise ContractViolation("ramp breakpoints must be strictly increasing in y")
        if self.friction_coefficient < 0 or self.viscous_friction < 0:
            raise ContractViolation("ramp friction must be non-negative")

    def arrays(self):
        prof = np.asarray(self.profile, dtype=float)
        return prof[:, 0], prof[:, 1]


@dataclass(frozen=True)
class PushGeometry:
    object_start: float = 0.20    # y of the object's rear face
    target: float = 0.05
    object_mass: float = 0.5
    friction_coefficient: float = 0.3
    target_tolerance: float = 0.01

    def validate(self):
        if self.object_mass <= 0 or self.friction_coefficient < 0:
            raise ContractViolation("object mass must be positive and friction non-negative")


@dataclass(frozen=True)
class EnvSpec:
    kind: EnvKind
    geometry: object
    contact_stiffness: float = 1e4  # N/m
    contact_damping: float = 50.0   # N s/m

    def __post_init__(self):
        expected = {EnvKind.DRAWER: DrawerGeometry, EnvKind.RAMP: RampGeometry, EnvKind.PUSH: PushGeometry}
        if not isinstance(self.geometry, expected[self.kind]):
            raise ContractViolation(f"{self.kind.value} needs {expected[self.kind].__name__}")
        self.geometry.validate()
        if self.contact_stiffness <= 0 or self.contact_damping < 0:
            raise ContractViolation("contact stiffness must be positive and damping non-negative")

    def initial_env_state(self) -> tuple:
        if self.kind is EnvKind.DRAWER:
            return (self.geometry.open_distance, 0.0)
        if self.kind is EnvKind.PUSH:
            return (self.geometry.object_start, 0.0)
        return ()

    def to_dict(self) -> dict:
        geo = asdict(self.geometry)
        if self.kind is EnvKind.RAMP:
            geo["profile"] = [list(p) for p in self.geometry.profile]
        return {"kind": self.kind.value, "geometry": geo,
                "contact_stiffness": self.contact_stiffness, "contact_damping": self.contact_damping}

    @classmethod
    def from_dict(cls, obj: dict) -> "EnvSpec":
        kind = EnvKind(obj["kind"])
        geo = dict(obj["geometry"])
        if kind is EnvKind.RAMP:
            geo["profile"] = tuple(tuple(float(v) for v in p) for p in geo["profile"])
            geometry = RampGeometry(**geo)
        elif kind is EnvKind.DRAWER:
            geometry = DrawerGeometry(**geo)
        else:
            geometry = PushGeometry(**geo)
        return cls(kind, geometry, float(obj.get("contact_stiffness", 1e4)),
                   float(obj.get("contact_damping", 50.0)))


def ramp_surface(geometry: RampGeometry, y: float) -> tuple[float, float]:
    """Height and slope ``dh/dy`` of the ramp at ``y``."""
    ys, zs = geometry.arrays()
    if y <= ys[0] or y >= ys[-1]:
        return float(zs[0] if y <= ys[0] else zs[-1]), 0.0
    i = int(np.searchsorted(ys, y, side="right")) - 1
    slope = (zs[i + 1] - zs[i]) / (ys[i + 1] - ys[i])
    return float(zs[i] + slope * (y - ys[i])), float(slope)


class ContactModel:
    """Precomputed contact evaluation for one environment (hot loop helper)."""

    def __init__(self, env: EnvSpec):
        self.env = env
        self.kc = env.contact_stiffness
        self.dc = env.contact_damping
        if env.kind is EnvKind.RAMP:
            self.ys, self.zs = env.geometry.arrays()
            self.slopes = np.diff(self.zs) / np.diff(self.ys)

    def force(self, p: np.ndarray, v: np.ndarray, env_state: tuple) -> np.ndarray:
        """Contact force on the end effector (world frame)."""
        kind = self.env.kind
        if kind is EnvKind.RAMP:
            return self._ramp(p, v)
        # drawer front / object rear face, normal +y
        face, face_vel = env_state
        depth = face - p[1]
        if depth <= 0.0:
            return np.zeros(3)
        vn = v[1] - face_vel
        n = max(0.0, self.kc * depth - self.dc * vn)
        return np.array([0.0, n, 0.0])

    def _ramp(self, p, v) -> np.ndarray:
        y = p[1]
        ys, zs = self.ys, self.zs
        if y <= ys[0]:
            h, s = zs[0], 0.0
        elif y >= ys[-1]:
            h, s = zs[-1], 0.0
        else:
            i = int(np.searchsorted(ys, y, side="right")) - 1
            s = self.slopes[i]
            h = zs[i] + s * (y - ys[i])
        gap = h - p[2]
        if gap <= 0.0:
            return np.zeros(3)
        inv = 1.0 / math.sqrt(1.0 + s * s)
        normal = np.array([0.0, -s * inv, inv])
        depth = gap * inv
        vn = float(v @ normal)
        n = self.kc * depth - self.dc * vn
        if n <= 0.0:
            return np.zeros(3)
        f = n * normal
        geo = self.env.geometry
        vt = v - vn * normal
        speed = math.sqrt(float(vt @ vt))
        if speed > 1e-12:
            mag = geo.friction_coefficient * n * math.tanh(speed / _EPS_V) + geo.viscous_friction * speed
            f = f - (mag / speed) * vt
        return f

    def advance_env(self, env_state: tuple, force_on_ee: np.ndarray, dt: float) -> tuple:
        """Integrate the environment's own degree of freedom one step."""
        kind = self.env.kind
        if kind is EnvKind.RAMP:
            return env_state
        q, qd = env_state
        drive = -float(force_on_ee[1])  # reaction on the drawer / object
        geo = self.env.geometry
        if kind is EnvKind.DRAWER:
            m, fs, fk = geo.mass, geo.static_friction, geo.kinetic_friction
        else:
            m = geo.object_mass
            fs = fk = geo.friction_coefficient * m * GRAVITY
        if abs(qd) < 1e-9:
            if abs(drive) <= fs:
                qd_new = 0.0
            else:
                qd_new = (drive - math.copysign(fk, drive)) / m * dt
        else:
            qd_new = qd + (drive - math.copysign(fk, qd)) / m * dt
            if qd_new * qd < 0.0:
                qd_new = 0.0  # friction cannot reverse the motion
        q_new = q + qd_new * dt
        if kind is EnvKind.DRAWER:
            if q_new <= 0.0:
                q_new, qd_new = 0.0, max(qd_new, 0.0)
            elif q_new >= geo.open_distance + 0.2:
                q_new, qd_new = geo.open_distance + 0.2, min(qd_new, 0.0)
        return (q_new, qd_new)


def contact_wrench(env: EnvSpec, state) -> Wrench:
    """Measured (gravity-compensated, world-frame) contact wrench at ``state``."""
    model = ContactModel(env)
    f = model.force(state.ee_pose.position, state.ee_twist.linear, state.env_state)
    return Wrench(f, np.zeros(3), Frame.WORLD, gravity_compensated=True)


def load_env(path) -> EnvSpec:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return EnvSpec.from_dict(obj["env"] if "env" in obj else obj)


def with_contact_stiffness(env: EnvSpec, k: float) -> EnvSpec:
    return replace(env, contact_stiffness=float(k))
