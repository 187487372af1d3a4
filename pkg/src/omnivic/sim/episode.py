"""Tasks and the per-episode control loop."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from omnivic.bank import OutcomeLabel, Phase
from omnivic.geometry import Frame, Pose, Twist, Wrench
from omnivic.phase import PhaseLabeler, PhaseThresholds
from omnivic.sim.dynamics import (
    DEFAULT_DT, DEFAULT_MASS, POSITION_LIMIT, SimState, check_stable, integrate, min_jerk,
)
from omnivic.sim.envs import ContactModel, DrawerGeometry, EnvKind, EnvSpec, PushGeometry, RampGeometry
from omnivic.sim.safety import SafetyConfig, SafetyMonitor

RAMP_GOAL_TOLERANCE = 0.005
RAMP_HEIGHT_TOLERANCE = 0.01
_ZERO3 = np.zeros(3)


@dataclass(frozen=True)
class Task:
    """One evaluation task: environment, reference motion and time budget.

    The reference is a rest period of ``dwell`` seconds followed by a
    minimum-jerk line from ``start`` to ``goal`` over ``duration`` seconds.
    """

    name: str
    instruction: str
    env: EnvSpec
    start: tuple
    goal: tuple
    duration: float
    dwell: float = 0.1
    t_max: int = 5000
    jitter: float = 0.05

    def to_dict(self) -> dict:
        return {"name": self.name, "instruction": self.instruction, "env": self.env.to_dict(),
                "start": list(self.start), "goal": list(self.goal), "duration": self.duration,
                "dwell": self.dwell, "t_max": self.t_max, "jitter": self.jitter}

    @classmethod
    def from_dict(cls, obj: dict) -> "Task":
        return cls(obj["name"], obj["instruction"], EnvSpec.from_dict(obj["env"]),
                   tuple(float(x) for x in obj["start"]), tuple(float(x) for x in obj["goal"]),
                   float(obj["duration"]), float(obj.get("dwell", 0.1)),
                   int(obj.get("t_max", 5000)), float(obj.get("jitter", 0.05)))

    def reference(self, t: float):
        return min_jerk(self.start, self.goal, t - self.dwell, self.duration)

    def succeeded(self, p: np.ndarray, env_state: tuple) -> bool:
        kind = self.env.kind
        if kind is EnvKind.DRAWER:
            return env_state[0] <= self.env.geometry.closed_tolerance
        if kind is EnvKind.PUSH:
            geo = self.env.geometry
            return abs(env_state[0] - geo.target) <= geo.target_tolerance
        return (abs(p[1] - self.goal[1]) <= RAMP_GOAL_TOLERANCE
                and abs(p[2] - self.goal[2]) <= RAMP_HEIGHT_TOLERANCE)

    def randomized(self, rng: np.random.Generator) -> "Task":
        """Seeded perturbation of start point and environment parameters.

        Each perturbed quantity is scaled by a factor drawn from
        ``U(1 - jitter, 1 + jitter)``; the start point moves by up to 5 mm.
        """
        a = self.jitter

        def scale():
            return float(rng.uniform(1 - a, 1 + a))

        start = tuple(float(s) for s in np.asarray(self.start) + rng.uniform(-0.005, 0.005, 3) * [1, 1, 0])
        geo = self.env.geometry
        if isinstance(geo, RampGeometry):
            h = scale()
            geo = replace(geo, profile=tuple((y, z * h) for y, z in geo.profile),
                          friction_coefficient=geo.friction_coefficient * scale())
        elif isinstance(geo, DrawerGeometry):
            f = scale()
            geo = replace(geo, static_friction=geo.static_friction * f,
                          kinetic_friction=geo.kinetic_friction * f,
                          open_distance=geo.open_distance * scale())
        elif isinstance(geo, PushGeometry):
            geo = replace(geo, friction_coefficient=geo.friction_coefficient * scale())
        return replace(self, start=start, env=replace(self.env, geometry=geo))


@dataclass
class EpisodeResult:
    task: str
    method: str
    seed: int | None
    outcome: OutcomeLabel
    steps_used: int
    dt: float
    phases: list
    k: np.ndarray
    d: np.ndarray
    wrench: np.ndarray
    twist: np.ndarray
    position: np.ndarray
    reason: str = ""
    fallbacks: int = 0

    @property
    def force_magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.wrench[:, :3], axis=1)

    @property
    def peak_force(self) -> float:
        return float(self.force_magnitude.max()) if self.steps_used else 0.0

    @property
    def success(self) -> bool:
        return self.outcome is OutcomeLabel.SUCCESS

    def mean_gain(self, phase: Phase, axis: int = 2) -> float:
        mask = np.array([p is phase for p in self.phases])
        return float(self.k[mask, axis].mean()) if mask.any() else float("nan")


def max_stiffness(controller) -> float:
    rng = getattr(controller, "range", None)
    if rng is not None:
        return rng.k_max
    return float(np.max(controller.params.k_trans))


def run_episode(task: Task, controller, safety: SafetyConfig | None = None, seed: int | None = None,
                dt: float = DEFAULT_DT, mass: float = DEFAULT_MASS,
                thresholds: PhaseThresholds = PhaseThresholds()) -> EpisodeResult:
    """Simulate one episode until success, a safety violation, or the time budget.

    Every step: measure the contact wrench, label the phase, ask the
    controller for gains, apply the impedance law, integrate, check safety.
    """
    if seed is not None:
        task = task.randomized(np.random.default_rng(seed))
    safety = safety or SafetyConfig(t_max=task.t_max)
    check_stable(dt, mass, max_stiffness(controller) + task.env.contact_stiffness)

    contact = ContactModel(task.env)
    labeler = PhaseLabeler(thresholds)
    monitor = SafetyMonitor(safety)
    controller.start(task.instruction)
    fallbacks0 = controller.fallbacks

    n_max = safety.t_max
    ks = np.empty((n_max, 3))
    ds = np.empty((n_max, 3))
    wr = np.zeros((n_max, 6))
    tw = np.zeros((n_max, 6))
    pos = np.empty((n_max, 3))
    phases = []

    p = np.array(task.start, dtype=float)
    v = np.zeros(3)
    env_state = task.env.initial_env_state()
    outcome, reason, n = OutcomeLabel.FAILURE_TIMEOUT, "time budget exhausted", n_max

    for step in range(n_max):
        f = contact.force(p, v, env_state)
        twist = Twist(v, _ZERO3, Frame.WORLD)
        wrench = Wrench(f, _ZERO3, Frame.WORLD, gravity_compensated=True)
        phase = labeler(twist, wrench)
        params = controller.command(step, phase, twist, wrench)

        phases.append(phase)
        ks[step] = params.k_trans
        ds[step] = params.d_trans
        wr[step, :3] = f
        tw[step, :3] = v
        pos[step] = p

        if monitor.update(float(np.sqrt(f @ f))):
            outcome, reason, n = OutcomeLabel.FAILURE_FORCE, "force limit exceeded", step + 1
            break
        if task.succeeded(p, env_state):
            outcome, reason, n = OutcomeLabel.SUCCESS, "", step + 1
            break

        p_d, v_d = task.reference(step * dt)
        f_imp = params.d_trans * (v_d - v) + params.k_trans * (p_d - p)
        p, v = integrate(p, v, f_imp + f, mass, dt)
        env_state = contact.advance_env(env_state, f, dt)
        if not np.all(np.isfinite(p)) or float(np.sqrt(p @ p)) > POSITION_LIMIT:
            outcome, reason, n = OutcomeLabel.FAILURE_FORCE, "unstable integration", step + 1
            break

    return EpisodeResult(
        task=task.name, method=getattr(controller, "name", type(controller).__name__), seed=seed,
        outcome=outcome, steps_used=n, dt=dt, phases=phases[:n],
        k=ks[:n].copy(), d=ds[:n].copy(), wrench=wr[:n].copy(), twist=tw[:n].copy(),
        position=pos[:n].copy(), reason=reason, fallbacks=controller.fallbacks - fallbacks0,
    )


def initial_state(task: Task, dt: float = DEFAULT_DT) -> SimState:
    return SimState(Pose(task.start), Twist(), task.env.initial_env_state(), 0, dt)
