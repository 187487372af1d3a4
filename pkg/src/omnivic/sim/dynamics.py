"""Point-mass end-effector dynamics under the impedance law."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from omnivic.errors import ContractViolation
from omnivic.geometry import Frame, Pose, Twist, Wrench
from omnivic.impedance import ImpedanceParams
from omnivic.sim.envs import ContactModel, EnvSpec

DEFAULT_DT = 0.002
DEFAULT_MASS = 2.0
MAX_STEP_RATIO = 0.5
POSITION_LIMIT = 10.0


class InstabilityError(RuntimeError):
    """The integration diverged (non-finite state or runaway position)."""


@dataclass(frozen=True)
class SimState:
    ee_pose: Pose
    ee_twist: Twist
    env_state: tuple = ()
    time_step: int = 0
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if not self.dt > 0:
            raise ContractViolation("dt must be positive")
        if self.ee_twist.frame is not Frame.WORLD:
            raise ContractViolation("simulation twists are World-frame")


def check_stable(dt: float, mass: float, stiffness: float) -> None:
    """Raise unless ``dt * sqrt(stiffness / mass) < 0.5``."""
    ratio = dt * math.sqrt(stiffness / mass)
    if not ratio < MAX_STEP_RATIO:
        raise ContractViolation(
            f"unstable step: dt*sqrt(k/m) = {ratio:.3f} >= {MAX_STEP_RATIO} "
            f"(dt={dt}, k={stiffness}, m={mass})"
        )


def integrate(p: np.ndarray, v: np.ndarray, force: np.ndarray, mass: float, dt: float):
    """Semi-implicit Euler: velocity first, then position with the new velocity."""
    v_new = v + (dt / mass) * force
    p_new = p + dt * v_new
    return p_new, v_new


def step_dynamics(state: SimState, params: ImpedanceParams, desired: tuple[Pose, Twist],
                  env: EnvSpec, mass: float = DEFAULT_MASS,
                  contact: ContactModel | None = None) -> tuple[SimState, Wrench]:
    """Advance one step; return the new state and the measured contact wrench.

    Orientation is held fixed, so only the translational block of the
    impedance law acts.
    """
    contact = contact or ContactModel(env)
    p = state.ee_pose.position
    v = state.ee_twist.linear
    d_pose, d_twist = desired
    f_contact = contact.force(p, v, state.env_state)
    f_imp = params.d_trans * (d_twist.linear - v) + params.k_trans * (d_pose.position - p)
    p_new, v_new = integrate(p, v, f_imp + f_contact, mass, state.dt)
    if not (np.all(np.isfinite(p_new)) and np.all(np.isfinite(v_new))) or np.linalg.norm(p_new) > POSITION_LIMIT:
        raise InstabilityError(f"state diverged at step {state.time_step}")
    env_next = contact.advance_env(state.env_state, f_contact, state.dt)
    nxt = SimState(
        Pose(p_new, state.ee_pose.orientation),
        Twist(v_new, np.zeros(3), Frame.WORLD),
        env_next,
        state.time_step + 1,
        state.dt,
    )
    return nxt, Wrench(f_contact, np.zeros(3), Frame.WORLD, gravity_compensated=True)


def min_jerk(start, goal, t: float, duration: float) -> tuple[np.ndarray, np.ndarray]:
    """Position and velocity of a straight-line minimum-jerk profile at time ``t``."""
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if t <= 0.0:
        return start.copy(), np.zeros(3)
    if t >= duration:
        return goal.copy(), np.zeros(3)
    tau = t / duration
    s = tau ** 3 * (10 - 15 * tau + 6 * tau * tau)
    ds = 30 * tau ** 2 * (1 - tau) ** 2 / duration
    return start + s * (goal - start), ds * (goal - start)
