"""Problem formulations: loading, validation, serialization and seeded randomization.

A formulation bundles the robot, control mode, integration step, goal
composition, obstacles and the ranges used to randomize them. Formulations
are immutable values; :func:`randomize` returns a new one.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from .errors import ConfigValidationError, InfeasibleRandomizationError, InputError
from .kinematics import KinematicChain, builtin_chain, sphere_centers
from .urdf import parse_urdf

BUILTIN_ROBOTS = ("point_mass_2d", "point_mass_3d", "planar_arm")
CONTROL_MODES = ("velocity", "acceleration")
DEFAULT_START_MARGIN = 0.2
MAX_REJECTION_ATTEMPTS = 1000

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class RobotSpec:
    builtin: str | None = None
    lengths: tuple[float, ...] | None = None
    sphere_radius: float = 0.1
    urdf: str | None = None
    tip_link: str | None = None


@dataclass(frozen=True)
class Limits:
    position: tuple[tuple[float, float], ...]
    velocity: tuple[float, ...]
    acceleration: tuple[float, ...]

    @property
    def position_array(self) -> np.ndarray:
        return np.array(self.position, dtype=float)

    @property
    def velocity_array(self) -> np.ndarray:
        return np.array(self.velocity, dtype=float)

    @property
    def acceleration_array(self) -> np.ndarray:
        return np.array(self.acceleration, dtype=float)


@dataclass(frozen=True)
class SubGoal:
    link: str
    desired_position: Vec3
    epsilon: float = 0.1
    weight: float = 1.0
    dims: tuple[int, ...] = (0, 1, 2)
    primary: bool = False


@dataclass(frozen=True)
class GoalComposition:
    sub_goals: tuple[SubGoal, ...]

    @property
    def primary(self) -> SubGoal:
        return next(g for g in self.sub_goals if g.primary)


@dataclass(frozen=True)
class ObstacleSpec:
    position: Vec3
    radius: float
    velocity: Vec3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(np.array(self.lo), np.array(self.hi))


@dataclass(frozen=True)
class RandomizationSpec:
    goal_box: Box | None = None
    init_box: Box | None = None
    obstacle_position_box: Box | None = None
    obstacle_radius_range: tuple[float, float] | None = None
    obstacle_speed_range: tuple[float, float] = (0.0, 0.0)
    obstacle_count: int = 0
    # The last ``moving_obstacle_count`` obstacles get a speed drawn from
    # ``obstacle_speed_range``; the others are static. None means all move.
    moving_obstacle_count: int | None = None
    start_margin: float = DEFAULT_START_MARGIN


@dataclass(frozen=True)
class ProblemFormulation:
    robot: RobotSpec
    control_mode: str
    dt: float
    max_steps: int
    q0: tuple[float, ...]
    qdot0: tuple[float, ...]
    limits: Limits
    goal: GoalComposition
    obstacles: tuple[ObstacleSpec, ...] = ()
    randomization: RandomizationSpec = RandomizationSpec()
    chain: KinematicChain = field(default=None, compare=False, repr=False)
    base_dir: str | None = field(default=None, compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.q0)

    @property
    def action_limits(self) -> np.ndarray:
        if self.control_mode == "velocity":
            return self.limits.velocity_array
        return self.limits.acceleration_array


# ---------------------------------------------------------------------------
# parsing

_TOP_KEYS = ("robot", "control_mode", "dt", "max_steps", "q0", "qdot0", "limits", "goal", "obstacles", "randomization")
_REQUIRED = ("robot", "control_mode", "dt", "max_steps", "q0", "goal")


def _fail(path: str, message: str):
    raise ConfigValidationError(path, message)


def _mapping(value, path: str, allowed: Sequence[str], required: Sequence[str] = ()) -> dict:
    if not isinstance(value, dict):
        _fail(path, f"expected a mapping, got {type(value).__name__}")
    for key in value:
        if key not in allowed:
            _fail(f"{path}.{key}" if path else str(key), f"unknown field (allowed: {', '.join(allowed)})")
    for key in required:
        if key not in value:
            _fail(f"{path}.{key}" if path else key, "required field is missing")
    return value


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    if not np.isfinite(value):
        _fail(path, f"expected a finite number, got {value!r}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    return int(value)


def _vector(value, path: str, length: int | None = None) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)):
        _fail(path, f"expected a list of numbers, got {value!r}")
    if length is not None and len(value) != length:
        _fail(path, f"expected {length} values, got {len(value)}")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _range(value, path: str) -> tuple[float, float]:
    lo, hi = _vector(value, path, 2)
    if lo > hi:
        _fail(path, f"lower bound {lo} exceeds upper bound {hi}")
    if lo < 0:
        _fail(path, "range must be non-negative")
    return lo, hi


def _box(value, path: str, length: int) -> Box:
    _mapping(value, path, ("lo", "hi"), ("lo", "hi"))
    lo = _vector(value["lo"], f"{path}.lo", length)
    hi = _vector(value["hi"], f"{path}.hi", length)
    for i, (a, b) in enumerate(zip(lo, hi)):
        if a > b:
            _fail(f"{path}.lo[{i}]", f"lower bound {a} exceeds upper bound {b}")
    return Box(lo, hi)


def _robot(value, base_dir: str | None) -> tuple[RobotSpec, KinematicChain]:
    _mapping(value, "robot", ("builtin", "lengths", "sphere_radius", "urdf", "tip_link"))
    if ("builtin" in value) == ("urdf" in value):
        _fail("robot", "exactly one of 'builtin' or 'urdf' is required")
    radius = _number(value.get("sphere_radius", 0.1), "robot.sphere_radius")
    if "builtin" in value:
        name = value["builtin"]
        if name not in BUILTIN_ROBOTS:
            _fail("robot.builtin", f"unknown robot {name!r} (expected one of {', '.join(BUILTIN_ROBOTS)})")
        lengths = None
        if name == "planar_arm":
            if "lengths" not in value:
                _fail("robot.lengths", "planar_arm requires link lengths")
            lengths = _vector(value["lengths"], "robot.lengths")
        elif "lengths" in value:
            _fail("robot.lengths", f"{name} takes no link lengths")
        if "tip_link" in value:
            _fail("robot.tip_link", "tip_link only applies to URDF robots")
        spec = RobotSpec(builtin=name, lengths=lengths, sphere_radius=radius)
        try:
            chain = builtin_chain(name, lengths, radius)
        except InputError as exc:
            _fail("robot", str(exc))
        return spec, chain
    if "lengths" in value or "sphere_radius" in value:
        _fail("robot", "lengths/sphere_radius only apply to builtin robots")
    path = value["urdf"]
    if not isinstance(path, str) or not path:
        _fail("robot.urdf", "expected a file path")
    tip = value.get("tip_link")
    if tip is not None and not isinstance(tip, str):
        _fail("robot.tip_link", "expected a link name")
    spec = RobotSpec(urdf=path, tip_link=tip)
    return spec, load_urdf_chain(spec, base_dir)


def load_urdf_chain(spec: RobotSpec, base_dir: str | None) -> KinematicChain:
    file = Path(spec.urdf)
    if not file.is_absolute() and base_dir is not None:
        file = Path(base_dir) / file
    try:
        text = file.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigValidationError("robot.urdf", f"cannot read {file}: {exc.strerror}") from None
    try:
        return parse_urdf(text, spec.tip_link)
    except Exception as exc:  # noqa: BLE001 - re-raised with the field path
        raise ConfigValidationError("robot.urdf", f"{type(exc).__name__}: {exc}") from None


def _limits(value, chain: KinematicChain) -> Limits:
    n = chain.n
    position = [tuple(map(float, r)) for r in chain.position_limits]
    velocity = [float(v) for v in chain.velocity_limits]
    acceleration = [float(v) for v in chain.acceleration_limits]
    if value is not None:
        _mapping(value, "limits", ("position", "velocity", "acceleration"))
        if "position" in value:
            rows = value["position"]
            if not isinstance(rows, list) or len(rows) != n:
                _fail("limits.position", f"expected {n} [lo, hi] pairs")
            position = []
            for i, r in enumerate(rows):
                lo, hi = _vector(r, f"limits.position[{i}]", 2)
                if lo > hi:
                    _fail(f"limits.position[{i}]", f"lower bound {lo} exceeds upper bound {hi}")
                position.append((lo, hi))
        for key, target in (("velocity", velocity), ("acceleration", acceleration)):
            if key in value:
                values = _vector(value[key], f"limits.{key}", n)
                for i, v in enumerate(values):
                    if not v > 0:
                        _fail(f"limits.{key}[{i}]", "must be > 0")
                target[:] = values
    return Limits(tuple(position), tuple(velocity), tuple(acceleration))


def _goal(value, chain: KinematicChain) -> GoalComposition:
    if not isinstance(value, list) or not value:
        _fail("goal", "expected a non-empty list of sub-goals")
    subs = []
    for i, g in enumerate(value):
        p = f"goal[{i}]"
        _mapping(g, p, ("link", "desired_position", "epsilon", "weight", "dims", "primary"), ("desired_position",))
        link = g.get("link", chain.tip_link)
        if link not in chain.links:
            _fail(f"{p}.link", f"unknown link {link!r}")
        eps = _number(g.get("epsilon", 0.1), f"{p}.epsilon")
        if not eps > 0:
            _fail(f"{p}.epsilon", "must be > 0")
        weight = _number(g.get("weight", 1.0), f"{p}.weight")
        if not weight > 0:
            _fail(f"{p}.weight", "must be > 0")
        dims = g.get("dims", [0, 1, 2])
        if not isinstance(dims, list) or not dims or any(isinstance(d, bool) or d not in (0, 1, 2) for d in dims):
            _fail(f"{p}.dims", "expected a non-empty subset of [0, 1, 2]")
        if len(set(dims)) != len(dims):
            _fail(f"{p}.dims", "duplicate axis")
        primary = g.get("primary", False)
        if not isinstance(primary, bool):
            _fail(f"{p}.primary", "expected true or false")
        subs.append(SubGoal(link, _vector(g["desired_position"], f"{p}.desired_position", 3), eps, weight, tuple(sorted(dims)), primary))
    flagged = [g for g in subs if g.primary]
    if len(subs) == 1 and not flagged:
        subs[0] = dataclasses.replace(subs[0], primary=True)
    elif len(flagged) != 1:
        _fail("goal", f"exactly one sub-goal must be primary, found {len(flagged)}")
    return GoalComposition(tuple(subs))


def _obstacles(value) -> tuple[ObstacleSpec, ...]:
    if value is None:
        return ()
    if not isinstance(value, list):
        _fail("obstacles", "expected a list")
    out = []
    for i, o in enumerate(value):
        p = f"obstacles[{i}]"
        _mapping(o, p, ("position", "radius", "velocity"), ("position", "radius"))
        radius = _number(o["radius"], f"{p}.radius")
        if not radius > 0:
            _fail(f"{p}.radius", "must be > 0")
        velocity = _vector(o.get("velocity", [0.0, 0.0, 0.0]), f"{p}.velocity", 3)
        out.append(ObstacleSpec(_vector(o["position"], f"{p}.position", 3), radius, velocity))
    return tuple(out)


def _randomization(value, n: int, limits: Limits) -> RandomizationSpec:
    if value is None:
        return RandomizationSpec()
    keys = ("goal_box", "init_box", "obstacle_position_box", "obstacle_radius_range", "obstacle_speed_range",
            "obstacle_count", "moving_obstacle_count", "start_margin")
    _mapping(value, "randomization", keys)
    p = "randomization"
    goal_box = _box(value["goal_box"], f"{p}.goal_box", 3) if "goal_box" in value else None
    init_box = _box(value["init_box"], f"{p}.init_box", n) if "init_box" in value else None
    if init_box is not None:
        for i, (lo, hi) in enumerate(zip(init_box.lo, init_box.hi)):
            plo, phi = limits.position[i]
            if lo < plo or hi > phi:
                _fail(f"{p}.init_box", f"joint {i} box [{lo}, {hi}] leaves position limits [{plo}, {phi}]")
    pos_box = _box(value["obstacle_position_box"], f"{p}.obstacle_position_box", 3) if "obstacle_position_box" in value else None
    radius_range = _range(value["obstacle_radius_range"], f"{p}.obstacle_radius_range") if "obstacle_radius_range" in value else None
    if radius_range is not None and not radius_range[0] > 0:
        _fail(f"{p}.obstacle_radius_range", "radii must be > 0")
    speed_range = _range(value.get("obstacle_speed_range", [0.0, 0.0]), f"{p}.obstacle_speed_range")
    count = _integer(value.get("obstacle_count", 0), f"{p}.obstacle_count")
    if count < 0:
        _fail(f"{p}.obstacle_count", "must be >= 0")
    moving = value.get("moving_obstacle_count")
    if moving is not None:
        moving = _integer(moving, f"{p}.moving_obstacle_count")
        if not 0 <= moving <= count:
            _fail(f"{p}.moving_obstacle_count", f"must lie in [0, obstacle_count={count}]")
    margin = _number(value.get("start_margin", DEFAULT_START_MARGIN), f"{p}.start_margin")
    if margin < 0:
        _fail(f"{p}.start_margin", "must be >= 0")
    return RandomizationSpec(goal_box, init_box, pos_box, radius_range, speed_range, count, moving, margin)


def start_clearance(chain: KinematicChain, q0, obstacles: Sequence[ObstacleSpec]) -> float:
    """Smallest surface distance between the robot at ``q0`` and any obstacle (inf if none)."""
    if not obstacles:
        return float("inf")
    centers = sphere_centers(chain, np.asarray(q0, dtype=float))
    pos = np.array([o.position for o in obstacles])
    rad = np.array([o.radius for o in obstacles])
    d = np.linalg.norm(centers[:, None, :] - pos[None, :, :], axis=-1) - (chain.sphere_radii[:, None] + rad[None, :])
    return float(d.min())


def _check_invariants(pf: ProblemFormulation) -> None:
    q0 = np.array(pf.q0)
    lim = pf.limits.position_array
    for i, v in enumerate(q0):
        if not lim[i, 0] <= v <= lim[i, 1]:
            _fail(f"q0[{i}]", f"value {v} outside position limits {tuple(lim[i])}")
    for i, v in enumerate(pf.qdot0):
        if abs(v) > pf.limits.velocity[i]:
            _fail(f"qdot0[{i}]", f"value {v} exceeds velocity limit {pf.limits.velocity[i]}")
    clearance = start_clearance(pf.chain, q0, pf.obstacles)
    if clearance < pf.randomization.start_margin:
        _fail("obstacles", f"robot at q0 is within {clearance:.4g} m of an obstacle (start_margin {pf.randomization.start_margin})")


def problem_from_dict(data: Any, base_dir: str | None = None) -> ProblemFormulation:
    _mapping(data, "", _TOP_KEYS, _REQUIRED)
    robot, chain = _robot(data["robot"], base_dir)
    mode = data["control_mode"]
    if mode not in CONTROL_MODES:
        _fail("control_mode", f"expected one of {', '.join(CONTROL_MODES)}, got {mode!r}")
    dt = _number(data["dt"], "dt")
    if not 0 < dt <= 1:
        _fail("dt", f"must lie in (0, 1], got {dt}")
    max_steps = _integer(data["max_steps"], "max_steps")
    if max_steps < 1:
        _fail("max_steps", "must be >= 1")
    n = chain.n
    q0 = _vector(data["q0"], "q0", n)
    qdot0 = _vector(data.get("qdot0", [0.0] * n), "qdot0", n)
    limits = _limits(data.get("limits"), chain)
    pf = ProblemFormulation(
        robot=robot,
        control_mode=mode,
        dt=dt,
        max_steps=max_steps,
        q0=q0,
        qdot0=qdot0,
        limits=limits,
        goal=_goal(data["goal"], chain),
        obstacles=_obstacles(data.get("obstacles")),
        randomization=_randomization(data.get("randomization"), n, limits),
        chain=chain,
        base_dir=base_dir,
    )
    _check_invariants(pf)
    return pf


def parse_problem_config(text: str, base_dir: str | None = None) -> ProblemFormulation:
    """Parse and validate a YAML problem configuration.

    ``base_dir`` resolves a relative ``robot.urdf`` path.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigValidationError("", f"malformed YAML: {exc}") from None
    return problem_from_dict(data, base_dir)


def load_problem(path: str | Path) -> ProblemFormulation:
    path = Path(path)
    return parse_problem_config(path.read_text(encoding="utf-8"), base_dir=str(path.resolve().parent))


# ---------------------------------------------------------------------------
# serialization


def _box_dict(box: Box) -> dict:
    return {"lo": list(box.lo), "hi": list(box.hi)}


def problem_to_dict(pf: ProblemFormulation) -> dict:
    r = pf.robot
    if r.builtin is not None:
        robot: dict = {"builtin": r.builtin}
        if r.lengths is not None:
            robot["lengths"] = list(r.lengths)
        robot["sphere_radius"] = r.sphere_radius
    else:
        robot = {"urdf": r.urdf}
        if r.tip_link is not None:
            robot["tip_link"] = r.tip_link
    goal = [
        {
            "link": g.link,
            "desired_position": list(g.desired_position),
            "epsilon": g.epsilon,
            "weight": g.weight,
            "dims": list(g.dims),
            "primary": g.primary,
        }
        for g in pf.goal.sub_goals
    ]
    obstacles = [
        {"position": list(o.position), "radius": o.radius, "velocity": list(o.velocity)} for o in pf.obstacles
    ]
    rs = pf.randomization
    rand: dict = {}
    if rs.goal_box is not None:
        rand["goal_box"] = _box_dict(rs.goal_box)
    if rs.init_box is not None:
        rand["init_box"] = _box_dict(rs.init_box)
    if rs.obstacle_position_box is not None:
        rand["obstacle_position_box"] = _box_dict(rs.obstacle_position_box)
    if rs.obstacle_radius_range is not None:
        rand["obstacle_radius_range"] = list(rs.obstacle_radius_range)
    rand["obstacle_speed_range"] = list(rs.obstacle_speed_range)
    rand["obstacle_count"] = rs.obstacle_count
    if rs.moving_obstacle_count is not None:
        rand["moving_obstacle_count"] = rs.moving_obstacle_count
    rand["start_margin"] = rs.start_margin
    return {
        "robot": robot,
        "control_mode": pf.control_mode,
        "dt": pf.dt,
        "max_steps": pf.max_steps,
        "q0": list(pf.q0),
        "qdot0": list(pf.qdot0),
        "limits": {
            "position": [list(p) for p in pf.limits.position],
            "velocity": list(pf.limits.velocity),
            "acceleration": list(pf.limits.acceleration),
        },
        "goal": goal,
        "obstacles": obstacles,
        "randomization": rand,
    }


def serialize_problem(pf: ProblemFormulation) -> str:
    """YAML text that parses back to a formulation equal to ``pf``."""
    return yaml.safe_dump(problem_to_dict(pf), sort_keys=False, default_flow_style=None, width=1000)


# ---------------------------------------------------------------------------
# randomization


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed) % 2**64))


def _floats(values) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


def _random_direction(rng: np.random.Generator, box: Box) -> np.ndarray:
    free = np.array(box.hi) > np.array(box.lo)
    if not free.any():
        return np.zeros(3)
    while True:
        d = np.where(free, rng.normal(size=3), 0.0)
        norm = np.linalg.norm(d)
        if norm > 1e-12:
            return d / norm


def randomize(pf: ProblemFormulation, seed: int, goal: bool = False, init: bool = False, obst: bool = False) -> ProblemFormulation:
    """Draw a new formulation from the randomization ranges of ``pf``.

    Draw order is goal, then initial configuration, then obstacles; obstacle
    placement is rejection-sampled so every obstacle keeps ``start_margin``
    of surface distance from the robot at ``q0`` and from every sub-goal.
    """
    rs = pf.randomization
    if goal and rs.goal_box is None:
        raise InputError("goal randomization requested but randomization.goal_box is missing")
    if init and rs.init_box is None:
        raise InputError("init randomization requested but randomization.init_box is missing")
    if obst and (rs.obstacle_position_box is None or rs.obstacle_radius_range is None):
        raise InputError("obstacle randomization needs obstacle_position_box and obstacle_radius_range")
    if not (goal or init or obst):
        return pf

    rng = _rng(seed)
    out = pf
    if goal:
        desired = _floats(rs.goal_box.sample(rng))
        subs = tuple(dataclasses.replace(g, desired_position=desired) if g.primary else g for g in pf.goal.sub_goals)
        out = dataclasses.replace(out, goal=GoalComposition(subs))

    if init:
        for _ in range(MAX_REJECTION_ATTEMPTS):
            q0 = _floats(rs.init_box.sample(rng))
            if obst or start_clearance(pf.chain, q0, out.obstacles) >= rs.start_margin:
                break
        else:
            raise InfeasibleRandomizationError(
                f"no initial configuration clear of the obstacles after {MAX_REJECTION_ATTEMPTS} attempts"
            )
        out = dataclasses.replace(out, q0=q0)

    if obst:
        centers = sphere_centers(pf.chain, np.array(out.q0))
        radii = pf.chain.sphere_radii
        goals = np.array([g.desired_position for g in out.goal.sub_goals])
        moving = rs.obstacle_count if rs.moving_obstacle_count is None else rs.moving_obstacle_count
        obstacles = []
        for k in range(rs.obstacle_count):
            for _ in range(MAX_REJECTION_ATTEMPTS):
                position = rs.obstacle_position_box.sample(rng)
                radius = float(rng.uniform(*rs.obstacle_radius_range))
                robot_gap = np.linalg.norm(centers - position, axis=1) - (radii + radius)
                goal_gap = np.linalg.norm(goals - position, axis=1) - radius
                if robot_gap.min() >= rs.start_margin and goal_gap.min() >= rs.start_margin:
                    break
            else:
                raise InfeasibleRandomizationError(
                    f"obstacle {k}: no placement satisfying start_margin after {MAX_REJECTION_ATTEMPTS} attempts"
                )
            velocity = np.zeros(3)
            if k >= rs.obstacle_count - moving:
                speed = rng.uniform(*rs.obstacle_speed_range)
                velocity = speed * _random_direction(rng, rs.obstacle_position_box)
            obstacles.append(ObstacleSpec(_floats(position), radius, _floats(velocity)))
        out = dataclasses.replace(out, obstacles=tuple(obstacles))
    return out
