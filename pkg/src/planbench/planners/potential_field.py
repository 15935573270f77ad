"""Artificial potential field planner.

Potential over workspace control points::

    U = 1/2 k_att |e|^2 + sum_{(c, o): d < d0} 1/2 k_rep (1/d - 1/d0)^2

where ``e`` is the primary sub-goal error of the attraction point and ``d``
the surface distance between robot sphere ``c`` and obstacle ``o``. The
planner applies ``-grad U`` at each control point, caps every point force at
``f_max`` and maps the forces to joint space through the transposed
positional Jacobians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CollisionStateError
from ..kinematics import link_position, positional_jacobian
from ..sim import Observation
from .base import AbstractPlanner, check_params


@dataclass(frozen=True)
class PFParams:
    k_att: float = 1.0
    k_rep: float = 0.5
    d0: float = 1.0
    f_max: float = 5.0
    damping: float = 0.0

    def __post_init__(self):
        for key in ("k_att", "k_rep", "f_max", "damping"):
            check_params(getattr(self, key) >= 0, f"pf_params.{key}", "must be >= 0")
        check_params(self.d0 > 0, "pf_params.d0", "must be > 0")


@dataclass(frozen=True)
class ControlPoints:
    """Workspace quantities the potential depends on."""

    attraction: np.ndarray      # (3,) primary link position
    desired: np.ndarray         # (3,) primary sub-goal position
    dims: tuple[int, ...]
    centers: np.ndarray         # (S, 3) robot sphere centers
    radii: np.ndarray           # (S,)
    obstacle_positions: np.ndarray  # (M, 3)
    obstacle_radii: np.ndarray  # (M,)


def control_points(obs: Observation, pf) -> ControlPoints:
    goal = obs.goal.primary
    return ControlPoints(
        attraction=link_position(pf.chain, obs.q, goal.link),
        desired=np.asarray(goal.desired_position, dtype=float),
        dims=goal.dims,
        centers=obs.sphere_centers,
        radii=obs.sphere_radii,
        obstacle_positions=obs.obstacle_positions,
        obstacle_radii=obs.obstacle_radii,
    )


def _surface(cp: ControlPoints) -> tuple[np.ndarray, np.ndarray]:
    diff = cp.centers[:, None, :] - cp.obstacle_positions[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    d = dist - (cp.radii[:, None] + cp.obstacle_radii[None, :])
    if np.any(d <= 0):
        raise CollisionStateError("robot is in collision; the potential is undefined")
    return d, diff / dist[..., None]


def _error(cp: ControlPoints) -> np.ndarray:
    dims = list(cp.dims)
    e = np.zeros(3)
    e[dims] = cp.desired[dims] - cp.attraction[dims]
    return e


def potential(cp: ControlPoints, params: PFParams) -> float:
    e = _error(cp)
    u = 0.5 * params.k_att * float(e @ e)
    if len(cp.obstacle_radii) and len(cp.radii):
        d, _ = _surface(cp)
        near = d < params.d0
        u += float(np.sum(0.5 * params.k_rep * (1.0 / d[near] - 1.0 / params.d0) ** 2))
    return u


def forces(cp: ControlPoints, params: PFParams) -> tuple[np.ndarray, np.ndarray]:
    """Uncapped ``-grad U`` at the attraction point ``(3,)`` and each sphere center ``(S, 3)``."""
    f_att = params.k_att * _error(cp)
    f_rep = np.zeros_like(cp.centers)
    if len(cp.obstacle_radii) and len(cp.radii):
        d, unit = _surface(cp)
        gain = np.where(d < params.d0, params.k_rep * (1.0 / d - 1.0 / params.d0) / d**2, 0.0)
        f_rep = np.sum(gain[..., None] * unit, axis=1)
    return f_att, f_rep


def _cap(f: np.ndarray, f_max: float) -> np.ndarray:
    norm = np.linalg.norm(f, axis=-1, keepdims=True)
    scale = np.where(norm > f_max, f_max / np.where(norm > 0, norm, 1.0), 1.0)
    return f * scale


def pf_potential(obs: Observation, pf, params: PFParams) -> float:
    return potential(control_points(obs, pf), params)


class PotentialFieldPlanner(AbstractPlanner):
    name = "potential_field"
    params_key = "pf_params"
    Params = PFParams

    def potential(self, obs: Observation) -> float:
        return pf_potential(obs, self.pf, self.params)

    def compute_action(self, obs: Observation) -> np.ndarray:
        chain = self.pf.chain
        cp = control_points(obs, self.pf)
        f_att, f_rep = forces(cp, self.params)
        f_att = _cap(f_att, self.params.f_max)
        f_rep = _cap(f_rep, self.params.f_max)
        cmd = positional_jacobian(chain, obs.q, obs.goal.primary.link).T @ f_att
        for sphere, f in zip(chain.collision_spheres, f_rep):
            if np.any(f):
                cmd = cmd + positional_jacobian(chain, obs.q, sphere.link, sphere.offset).T @ f
        return self.clamp(cmd - self.params.damping * obs.qdot)
