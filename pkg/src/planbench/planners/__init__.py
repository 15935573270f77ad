from .base import (
    AbstractPlanner,
    PlannerConfig,
    load_planner_config,
    make_planner,
    parse_planner_config,
    planner_class,
    register_planner,
    registered_planners,
    serialize_planner_config,
)
from .pd import PDParams, PDPlanner
from .potential_field import PFParams, PotentialFieldPlanner, pf_potential
from .random_shooting import RandomShootingPlanner, RSParams

planner_registry = make_planner

__all__ = [
    "AbstractPlanner",
    "PlannerConfig",
    "PDParams",
    "PDPlanner",
    "PFParams",
    "PotentialFieldPlanner",
    "RSParams",
    "RandomShootingPlanner",
    "load_planner_config",
    "make_planner",
    "parse_planner_config",
    "pf_potential",
    "planner_class",
    "planner_registry",
    "register_planner",
    "registered_planners",
    "serialize_planner_config",
]
