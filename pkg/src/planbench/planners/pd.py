"""Goal-seeking PD baseline that ignores obstacles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kinematics import link_position, positional_jacobian
from ..sim import Observation
from .base import AbstractPlanner, check_params


@dataclass(frozen=True)
class PDParams:
    kp: float = 1.0
    kd: float = 0.0

    def __post_init__(self):
        check_params(self.kp >= 0, "pd.kp", "must be >= 0")
        check_params(self.kd >= 0, "pd.kd", "must be >= 0")


def primary_error(obs: Observation, pf) -> np.ndarray:
    """Desired minus current primary-link position, zero on unconstrained axes."""
    goal = obs.goal.primary
    dims = list(goal.dims)
    e = np.zeros(3)
    p = link_position(pf.chain, obs.q, goal.link)
    e[dims] = np.asarray(goal.desired_position)[dims] - p[dims]
    return e


class PDPlanner(AbstractPlanner):
    name = "pd"
    Params = PDParams

    def compute_action(self, obs: Observation) -> np.ndarray:
        e = primary_error(obs, self.pf)
        J = positional_jacobian(self.pf.chain, obs.q, obs.goal.primary.link)
        return self.clamp(J.T @ (self.params.kp * e) - self.params.kd * obs.qdot)
