"""Kinematic ODE environment: robot and obstacle stepping, collisions, goal checks.

The environment integrates joint commands with explicit (velocity mode) or
semi-implicit (acceleration mode) Euler, moves obstacles at constant
velocity and reports a termination status after every step. Actions are
applied directly, i.e. a perfect low-level controller is assumed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractError, InputError
from .kinematics import KinematicChain, link_position, sphere_centers
from .problem import GoalComposition, ProblemFormulation


class Status(str, Enum):
    RUNNING = "running"
    GOAL_REACHED = "goal_reached"
    COLLISION = "collision"
    MAX_STEPS_EXCEEDED = "max_steps_exceeded"
    # Only produced by the runner, never by the environment itself.
    PLANNER_FAILURE = "planner_failure"

    @property
    def terminal(self) -> bool:
        return self is not Status.RUNNING

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SimState:
    step: int
    time: float
    q: np.ndarray
    qdot: np.ndarray
    obstacle_positions: np.ndarray
    status: Status = Status.RUNNING
    # Action applied on the step that produced this state (after clamping).
    action: np.ndarray | None = None


@dataclass(frozen=True)
class Observation:
    q: np.ndarray
    qdot: np.ndarray
    sphere_centers: np.ndarray
    sphere_radii: np.ndarray
    obstacle_positions: np.ndarray
    obstacle_velocities: np.ndarray
    obstacle_radii: np.ndarray
    goal: GoalComposition
    time: float

    @property
    def link_sphere_centers(self) -> list[tuple[np.ndarray, float]]:
        return [(c, float(r)) for c, r in zip(self.sphere_centers, self.sphere_radii)]

    @property
    def obstacles(self) -> list[tuple[np.ndarray, np.ndarray, float]]:
        return [
            (p, v, float(r)) for p, v, r in zip(self.obstacle_positions, self.obstacle_velocities, self.obstacle_radii)
        ]


def integrate(q, qdot, action, dt: float, mode: str, position_limits, velocity_limits, acceleration_limits):
    """One Euler step; broadcasts over leading batch dimensions.

    Returns ``(q_next, qdot_next, applied_action)``. Joints that hit a
    position limit have their velocity zeroed.
    """
    if mode == "velocity":
        a = np.clip(action, -velocity_limits, velocity_limits)
        qdot_next = a
    else:
        a = np.clip(action, -acceleration_limits, acceleration_limits)
        qdot_next = np.clip(qdot + a * dt, -velocity_limits, velocity_limits)
    q_raw = q + qdot_next * dt
    q_next = np.clip(q_raw, position_limits[:, 0], position_limits[:, 1])
    qdot_next = np.where(q_next != q_raw, 0.0, qdot_next)
    return q_next, qdot_next, a


def surface_distance(a: tuple, b: tuple) -> float:
    """Signed distance between the surfaces of two spheres given as ``(center, radius)``."""
    (ca, ra), (cb, rb) = a, b
    return float(np.linalg.norm(np.asarray(ca, dtype=float) - np.asarray(cb, dtype=float))) - (ra + rb)


def pairwise_surface_distances(centers, radii, obstacle_positions, obstacle_radii) -> np.ndarray:
    """Distances between every robot sphere and every obstacle, shape ``(..., S, M)``."""
    diff = centers[..., :, None, :] - obstacle_positions[..., None, :, :]
    return np.linalg.norm(diff, axis=-1) - (radii[:, None] + obstacle_radii[None, :])


def _obstacle_arrays(pf: ProblemFormulation):
    pos = np.array([o.position for o in pf.obstacles], dtype=float).reshape(-1, 3)
    vel = np.array([o.velocity for o in pf.obstacles], dtype=float).reshape(-1, 3)
    rad = np.array([o.radius for o in pf.obstacles], dtype=float)
    return pos, vel, rad


def obstacle_positions_at(pf: ProblemFormulation, step: int) -> np.ndarray:
    pos, vel, _ = _obstacle_arrays(pf)
    return pos + (step * pf.dt) * vel


def min_clearance(state: SimState, chain: KinematicChain, pf: ProblemFormulation) -> float:
    """Smallest robot/obstacle surface distance at ``state``; ``inf`` without obstacles."""
    if not pf.obstacles:
        return float("inf")
    _, _, rad = _obstacle_arrays(pf)
    d = pairwise_surface_distances(sphere_centers(chain, state.q), chain.sphere_radii, state.obstacle_positions, rad)
    return float(d.min())


def goal_satisfied(chain: KinematicChain, q, goal: GoalComposition) -> tuple[bool, list[float]]:
    """Whether every sub-goal holds at ``q``, plus each sub-goal's position error."""
    errors = []
    for g in goal.sub_goals:
        dims = list(g.dims)
        p = link_position(chain, q, g.link)
        errors.append(float(np.linalg.norm(p[dims] - np.asarray(g.desired_position)[dims])))
    ok = all(e <= g.epsilon for e, g in zip(errors, goal.sub_goals))
    return ok, errors


def observe(state: SimState, pf: ProblemFormulation) -> Observation:
    _, vel, rad = _obstacle_arrays(pf)
    return Observation(
        q=state.q.copy(),
        qdot=state.qdot.copy(),
        sphere_centers=sphere_centers(pf.chain, state.q),
        sphere_radii=pf.chain.sphere_radii.copy(),
        obstacle_positions=state.obstacle_positions.copy(),
        obstacle_velocities=vel,
        obstacle_radii=rad,
        goal=pf.goal,
        time=state.time,
    )


def reset(pf: ProblemFormulation) -> tuple[SimState, Observation]:
    state = SimState(
        step=0,
        time=0.0,
        q=np.array(pf.q0, dtype=float),
        qdot=np.array(pf.qdot0, dtype=float),
        obstacle_positions=obstacle_positions_at(pf, 0),
    )
    return state, observe(state, pf)


def step(state: SimState, action, pf: ProblemFormulation) -> tuple[SimState, Observation, Status]:
    """Advance ``state`` by one ``dt`` under ``action``."""
    if state.status.terminal:
        raise ContractError(f"step() called after terminal status {state.status.value!r}")
    action = np.asarray(action, dtype=float)
    if action.shape != (pf.n,):
        raise InputError(f"action must have shape ({pf.n},), got {action.shape}")
    if not np.all(np.isfinite(action)):
        raise InputError(f"action has non-finite entries: {action}")
    lim = pf.limits
    q, qdot, applied = integrate(
        state.q, state.qdot, action, pf.dt, pf.control_mode,
        lim.position_array, lim.velocity_array, lim.acceleration_array,
    )
    k = state.step + 1
    nxt = SimState(
        step=k, time=k * pf.dt, q=q, qdot=qdot, obstacle_positions=obstacle_positions_at(pf, k), action=applied
    )
    if min_clearance(nxt, pf.chain, pf) < 0:
        status = Status.COLLISION
    elif goal_satisfied(pf.chain, q, pf.goal)[0]:
        status = Status.GOAL_REACHED
    elif k >= pf.max_steps:
        status = Status.MAX_STEPS_EXCEEDED
    else:
        status = Status.RUNNING
    nxt = dataclasses.replace(nxt, status=status)
    return nxt, observe(nxt, pf), status


class Environment:
    """Gym-style stateful wrapper around :func:`reset` and :func:`step`."""

    def __init__(self, pf: ProblemFormulation):
        self.pf = pf
        self.state: SimState | None = None

    def reset(self) -> Observation:
        self.state, obs = reset(self.pf)
        return obs

    def step(self, action) -> tuple[Observation, Status]:
        if self.state is None:
            raise ContractError("reset() must be called before step()")
        self.state, obs, status = step(self.state, action, self.pf)
        return obs, status

    @property
    def status(self) -> Status:
        return Status.RUNNING if self.state is None else self.state.status
