"""Planner base class, configuration documents and the planner registry.

Subclassing :class:`AbstractPlanner` with a ``name`` class attribute is all
that is needed to make a planner available to the runner::

    class Hold(AbstractPlanner):
        name = "hold"

        def compute_action(self, obs):
            return np.zeros(self.pf.n)
"""

from __future__ import annotations

import abc
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, ClassVar

import numpy as np
import yaml

from ..errors import ConfigValidationError, InputError, RegistryError
from ..problem import ProblemFormulation
from ..sim import Observation

_REGISTRY: dict[str, type["AbstractPlanner"]] = {}


@dataclass(frozen=True)
class PlannerConfig:
    """A planner configuration document: registry name, seed and one parameter block."""

    name: str
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)


class AbstractPlanner(abc.ABC):
    name: ClassVar[str]
    # Key of the parameter block in the configuration document; defaults to ``name``.
    params_key: ClassVar[str | None] = None
    # Dataclass holding the planner's parameters, or None for an untyped dict.
    Params: ClassVar[type | None] = None

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if "name" in cls.__dict__:
            register_planner(cls)

    def setup(self, pf: ProblemFormulation, config: PlannerConfig) -> None:
        self.pf = pf
        self.config = config
        self.params = parse_params(type(self), config.params)
        self.rng = np.random.default_rng(np.random.SeedSequence(int(config.seed) % 2**64))
        self.reset()

    def reset(self) -> None:
        """Clear per-trial state. Called by :meth:`setup`."""

    @abc.abstractmethod
    def compute_action(self, obs: Observation) -> np.ndarray:
        """Joint velocities (velocity mode) or accelerations (acceleration mode)."""

    def clamp(self, action: np.ndarray) -> np.ndarray:
        lim = self.pf.action_limits
        return np.clip(action, -lim, lim)


def register_planner(cls: type[AbstractPlanner]) -> type[AbstractPlanner]:
    name = cls.__dict__.get("name")
    if not isinstance(name, str) or not name:
        raise RegistryError(f"{cls.__qualname__} needs a non-empty string 'name'")
    if name in _REGISTRY and _REGISTRY[name] is not cls:
        raise RegistryError(f"planner name {name!r} is already registered by {_REGISTRY[name].__qualname__}")
    _REGISTRY[name] = cls
    return cls


def registered_planners() -> list[str]:
    return sorted(_REGISTRY)


def planner_class(name: str) -> type[AbstractPlanner]:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise RegistryError(f"unknown planner {name!r}; registered planners: {', '.join(registered_planners())}") from None


def make_planner(name: str, config: PlannerConfig, pf: ProblemFormulation) -> AbstractPlanner:
    """Instantiate and set up the planner registered under ``name``."""
    planner = planner_class(name)()
    planner.setup(pf, config)
    return planner


def params_key(cls: type[AbstractPlanner]) -> str:
    return cls.params_key or cls.name


def parse_params(cls: type[AbstractPlanner], raw: dict[str, Any]) -> Any:
    key = params_key(cls)
    if cls.Params is None:
        return dict(raw)
    if not isinstance(raw, dict):
        raise ConfigValidationError(key, "expected a mapping")
    names = {f.name for f in dataclasses.fields(cls.Params)}
    for k in raw:
        if k not in names:
            raise ConfigValidationError(f"{key}.{k}", f"unknown parameter (allowed: {', '.join(sorted(names))})")
    try:
        return cls.Params(**raw)
    except (InputError, TypeError, ValueError) as exc:
        path = getattr(exc, "path", key)
        raise ConfigValidationError(path, str(exc)) from None


def parse_planner_config(text: str) -> PlannerConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigValidationError("", f"malformed YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigValidationError("", "expected a mapping")
    if "name" not in data:
        raise ConfigValidationError("name", "required field is missing")
    cls = planner_class(data["name"])
    key = params_key(cls)
    for k in data:
        if k not in ("name", "seed", key):
            raise ConfigValidationError(k, f"unknown field (allowed: name, seed, {key})")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigValidationError("seed", f"expected an integer, got {seed!r}")
    params = data.get(key) or {}
    config = PlannerConfig(cls.name, seed, dict(params) if isinstance(params, dict) else params)
    parse_params(cls, config.params)
    return config


def load_planner_config(path: str | Path) -> PlannerConfig:
    return parse_planner_config(Path(path).read_text(encoding="utf-8"))


def serialize_planner_config(config: PlannerConfig) -> str:
    key = params_key(planner_class(config.name))
    data = {"name": config.name, "seed": int(config.seed), key: dict(config.params)}
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None, width=1000)


def check_params(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ConfigValidationError(path, message)
