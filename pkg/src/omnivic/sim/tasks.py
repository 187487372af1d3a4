"""Task catalog: evaluation queries and the knowledge-base tasks used to fill a bank."""

from __future__ import annotations

import json
from importlib import resources

from omnivic.sim.envs import DrawerGeometry, EnvKind, EnvSpec, PushGeometry, RampGeometry
from omnivic.sim.episode import Task

RAMP_FIXTURE = "ramp_calibrated_v1.json"
RAMP_HEIGHT = 0.25
RAMP_T_MAX = 10000
EE_HEIGHT = 0.002  # commanded end-effector height above the table


def _smoothstep(u: float) -> float:
    return u ** 3 * (10 - 15 * u + 6 * u * u)


def bump_points(y0: float, height: float, descent: float = 0.6, plateau: float = 0.05,
                climb: float = 0.4, n: int = 12) -> list:
    """Breakpoints of one smooth bump starting at ``y0`` (listed in increasing y).

    The end effector travels toward -y, so it meets the ``climb`` flank
    first and leaves over the longer ``descent`` flank.
    """
    pts = [(y0 + descent * i / n, height * _smoothstep(i / n)) for i in range(n + 1)]
    y1 = y0 + descent + plateau
    pts += [(y1 + climb * i / n, height * (1 - _smoothstep(i / n))) for i in range(n + 1)]
    return pts


def ramp_profile(n_bumps: int = 1, height: float = RAMP_HEIGHT, gap: float = 0.2) -> tuple:
    pts = [(-1.0, 0.0)]
    y0 = 0.05
    for _ in range(n_bumps):
        bump = bump_points(y0, height)
        pts += bump
        y0 = bump[-1][0] + gap
    pts.append((y0 + 1.0, 0.0))
    return tuple(pts)


def ramp_task(name: str, instruction: str, n_bumps: int = 1, height: float = RAMP_HEIGHT,
              contact_stiffness: float = 1e4, speed: float = 0.1) -> Task:
    profile = ramp_profile(n_bumps, height)
    y_start = profile[-2][0] + 0.15  # 15 cm before the first bump
    goal_y = -0.10
    env = EnvSpec(EnvKind.RAMP, RampGeometry(profile), contact_stiffness=contact_stiffness)
    duration = round((y_start - goal_y) / speed, 1)
    return Task(name, instruction, env, (0.0, y_start, EE_HEIGHT), (0.0, goal_y, EE_HEIGHT),
                duration, t_max=RAMP_T_MAX * n_bumps)


def drawer_task(name: str, instruction: str, open_distance: float = 0.15,
                static_friction: float = 6.0, kinetic_friction: float = 4.0) -> Task:
    geo = DrawerGeometry(open_distance, static_friction, kinetic_friction)
    start_y = open_distance + 0.10
    return Task(name, instruction, EnvSpec(EnvKind.DRAWER, geo), (0.0, start_y, 0.10),
                (0.0, -0.12, 0.10), 4.0)


def push_task(name: str, instruction: str, object_mass: float = 0.5, friction: float = 0.3) -> Task:
    geo = PushGeometry(object_start=0.20, target=0.05, object_mass=object_mass,
                       friction_coefficient=friction)
    return Task(name, instruction, EnvSpec(EnvKind.PUSH, geo), (0.0, 0.30, 0.02),
                (0.0, 0.0, 0.02), 4.0)


def load_calibrated_ramp(name: str = RAMP_FIXTURE) -> Task:
    """The ramp task whose contact stiffness was fixed by :func:`calibrate_ramp`."""
    text = resources.files("omnivic.data").joinpath(name).read_text(encoding="utf-8")
    return Task.from_dict(json.loads(text)["task"])


def query_tasks() -> dict:
    ramp = load_calibrated_ramp()
    two = ramp_task("ramp_two", "move along negative y at constant height across two ramps", n_bumps=2,
                    contact_stiffness=ramp.env.contact_stiffness)
    return {
        "drawer": drawer_task("drawer", "gently close the top drawer"),
        "ramp": ramp,
        "ramp_two": two,
        "push": push_task("push", "push the plate toward the front of the stove"),
    }


def knowledge_base_tasks() -> list:
    """Ten tasks with distinct instructions, related to but not equal to the queries."""
    return [
        drawer_task("kb_drawer_slow", "slowly slide the drawer shut", open_distance=0.12),
        drawer_task("kb_drawer_lower", "close the lower drawer carefully", static_friction=5.0,
                    kinetic_friction=3.0),
        drawer_task("kb_drawer_cabinet", "shut the cabinet drawer softly", open_distance=0.18),
        ramp_task("kb_ramp_low", "glide over the low ramp holding a fixed height", height=0.15,
                  contact_stiffness=2000.0),
        ramp_task("kb_ramp_follow", "follow the slope toward negative y without pressing down",
                  height=0.20, contact_stiffness=2000.0),
        ramp_task("kb_ramp_soft", "cross the soft ramp at constant height", height=0.20,
                  contact_stiffness=1000.0),
        ramp_task("kb_ramp_bumps", "move over both bumps keeping z level", n_bumps=2, height=0.15,
                  contact_stiffness=2000.0),
        push_task("kb_push_box", "push the box to the edge of the table", object_mass=0.8),
        push_task("kb_push_pan", "slide the pan forward across the stove", friction=0.4),
        push_task("kb_push_cup", "nudge the cup toward the front", object_mass=0.3),
    ]
