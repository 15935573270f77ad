"""Receding-horizon random-shooting planner.

Every call samples ``samples`` action sequences of length ``horizon`` around
a warm-started mean sequence, rolls them out with the simulator's own
integrator, and executes the first action of the cheapest sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..kinematics import link_transforms, sphere_centers
from ..sim import Observation, integrate, pairwise_surface_distances
from .base import AbstractPlanner, check_params


@dataclass(frozen=True)
class RSParams:
    horizon: int = 20
    samples: int = 64
    sigma: float | Sequence[float] = 0.5
    w_goal: float = 1.0
    w_action: float = 0.01
    collision_margin: float = 0.05
    collision_penalty: float = 1e6

    def __post_init__(self):
        check_params(isinstance(self.horizon, int) and self.horizon >= 1, "rs_params.horizon", "must be an integer >= 1")
        check_params(isinstance(self.samples, int) and self.samples >= 1, "rs_params.samples", "must be an integer >= 1")
        check_params(bool(np.all(np.asarray(self.sigma, dtype=float) >= 0)), "rs_params.sigma", "must be >= 0")
        for key in ("w_goal", "w_action", "collision_margin", "collision_penalty"):
            check_params(getattr(self, key) >= 0, f"rs_params.{key}", "must be >= 0")


def sequence_costs(
    U: np.ndarray,
    obs: Observation,
    pf,
    params: RSParams,
) -> np.ndarray:
    """Cost of each candidate action sequence ``U`` of shape ``(K, H, n)``."""
    chain = pf.chain
    lim = pf.limits
    pos_lim, vel_lim, acc_lim = lim.position_array, lim.velocity_array, lim.acceleration_array
    K, H, _ = U.shape
    q = np.broadcast_to(obs.q, (K, pf.n))
    qdot = np.broadcast_to(obs.qdot, (K, pf.n))
    collided = np.zeros(K, dtype=bool)
    has_obstacles = len(obs.obstacle_radii) > 0
    for t in range(H):
        q, qdot, _ = integrate(q, qdot, U[:, t], pf.dt, pf.control_mode, pos_lim, vel_lim, acc_lim)
        if has_obstacles:
            obstacles = obs.obstacle_positions + ((t + 1) * pf.dt) * obs.obstacle_velocities
            centers = sphere_centers(chain, q)
            d = pairwise_surface_distances(centers, chain.sphere_radii, obstacles, obs.obstacle_radii)
            collided |= d.reshape(K, -1).min(axis=1) < params.collision_margin
    goal = obs.goal.primary
    dims = list(goal.dims)
    T = link_transforms(chain, q)[:, chain.link_index(goal.link)]
    goal_dist = np.linalg.norm(T[:, dims, 3] - np.asarray(goal.desired_position)[dims], axis=1)
    effort = np.sum(U**2, axis=(1, 2)) * pf.dt
    return params.w_goal * goal_dist + params.w_action * effort + params.collision_penalty * collided


class RandomShootingPlanner(AbstractPlanner):
    name = "random_shooting"
    params_key = "rs_params"
    Params = RSParams

    def reset(self) -> None:
        self.mean = np.zeros((self.params.horizon, self.pf.n))

    def sample(self) -> np.ndarray:
        """Shift the warm start and draw ``(K, H, n)`` clamped candidate sequences."""
        self.mean = np.vstack([self.mean[1:], np.zeros((1, self.pf.n))])
        p = self.params
        sigma = np.asarray(p.sigma, dtype=float)
        noise = self.rng.standard_normal((p.samples, p.horizon, self.pf.n)) * sigma
        return self.clamp(self.mean + noise)

    def compute_action(self, obs: Observation) -> np.ndarray:
        U = self.sample()
        costs = sequence_costs(U, obs, self.pf, self.params)
        best = int(np.argmin(costs))
        self.mean = U[best].copy()
        return U[best, 0].copy()
