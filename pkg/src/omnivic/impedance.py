"""Cartesian variable impedance law with diagonal gains."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from omnivic.errors import ContractViolation
from omnivic.geometry import Frame, Wrench

DEFAULT_EPSILON = 0.1
DEFAULT_ZETA = 0.1

BASELINE_STIFFNESS = 150.0
# 2 * sqrt(150), rounded as published
BASELINE_DAMPING = 24.494

DAMPING_RATIO = 0.707


def _gain3(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape == (1,):
        arr = np.repeat(arr, 3)
    if arr.shape != (3,):
        raise ContractViolation(f"{name} must have 3 components, got {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ContractViolation(f"{name} must be finite and non-negative, got {arr}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ImpedanceRange:
    k_min: float
    k_max: float
    d_min: float
    d_max: float

    def __post_init__(self):
        if not (0 < self.k_min < self.k_max):
            raise ContractViolation(f"need 0 < k_min < k_max, got [{self.k_min}, {self.k_max}]")
        if not (0 < self.d_min < self.d_max):
            raise ContractViolation(f"need 0 < d_min < d_max, got [{self.d_min}, {self.d_max}]")

    @classmethod
    def simulation(cls) -> "ImpedanceRange":
        return cls(50.0, 500.0, 5.0, 60.0)

    @classmethod
    def real_world(cls) -> "ImpedanceRange":
        """Stiffness [300, 1000] N/m with damping bounds matched by the 0.707 ratio rule."""
        return cls(300.0, 1000.0, damping_from_stiffness(300.0), damping_from_stiffness(1000.0))


@dataclass(frozen=True)
class ImpedanceParams:
    """Translational stiffness/damping triples plus rotational scale factors.

    Zero translational gains are allowed (a free-floating end effector);
    ``epsilon`` and ``zeta`` must be strictly positive.
    """

    k_trans: np.ndarray
    d_trans: np.ndarray
    epsilon: float = DEFAULT_EPSILON
    zeta: float = DEFAULT_ZETA

    def __post_init__(self):
        object.__setattr__(self, "k_trans", _gain3(self.k_trans, "k_trans"))
        object.__setattr__(self, "d_trans", _gain3(self.d_trans, "d_trans"))
        if not (self.epsilon > 0 and self.zeta > 0):
            raise ContractViolation(f"epsilon and zeta must be > 0, got {self.epsilon}, {self.zeta}")


def expand_gains(params: ImpedanceParams) -> tuple[np.ndarray, np.ndarray]:
    """Return the 6x6 diagonal stiffness and damping matrices."""
    k = np.concatenate([params.k_trans, params.epsilon * params.k_trans])
    d = np.concatenate([params.d_trans, params.zeta * params.d_trans])
    return np.diag(k), np.diag(d)


def impedance_wrench(params: ImpedanceParams, pose_err, vel_err) -> Wrench:
    """Commanded wrench ``D * vel_err + K * pose_err`` in the world frame."""
    pose_err = np.asarray(pose_err, dtype=float)
    vel_err = np.asarray(vel_err, dtype=float)
    if pose_err.shape != (6,) or vel_err.shape != (6,):
        raise ContractViolation("pose_err and vel_err must be 6-vectors")
    if not (np.all(np.isfinite(pose_err)) and np.all(np.isfinite(vel_err))):
        raise ContractViolation("non-finite error vector")
    k = np.concatenate([params.k_trans, params.epsilon * params.k_trans])
    d = np.concatenate([params.d_trans, params.zeta * params.d_trans])
    w = d * vel_err + k * pose_err
    return Wrench(w[:3], w[3:], Frame.WORLD)


def clamp_params(params: ImpedanceParams, rng: ImpedanceRange) -> ImpedanceParams:
    return replace(
        params,
        k_trans=np.clip(params.k_trans, rng.k_min, rng.k_max),
        d_trans=np.clip(params.d_trans, rng.d_min, rng.d_max),
    )


def baseline_params(epsilon: float = DEFAULT_EPSILON, zeta: float = DEFAULT_ZETA) -> ImpedanceParams:
    """The fixed-gain position controller used as the comparison baseline."""
    return ImpedanceParams(
        np.full(3, BASELINE_STIFFNESS), np.full(3, BASELINE_DAMPING), epsilon, zeta
    )


def damping_from_stiffness(k: float) -> float:
    if not k > 0:
        raise ContractViolation(f"stiffness must be positive, got {k}")
    return 2.0 * DAMPING_RATIO * math.sqrt(k)


def fixed_params(k: float, epsilon: float = DEFAULT_EPSILON, zeta: float = DEFAULT_ZETA) -> ImpedanceParams:
    """Isotropic gains with damping tied to stiffness by the 0.707 ratio rule."""
    return ImpedanceParams(np.full(3, k), np.full(3, damping_from_stiffness(k)), epsilon, zeta)
