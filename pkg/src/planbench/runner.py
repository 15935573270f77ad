"""Trial and study execution.

A study runs every planner on the same randomized problem for each trial
index, then persists everything needed to reproduce and post-process it::

    <res-folder>/<study>_<YYYYMMDD_HHMMSS>/
        manifest.json
        <planner>/trial_<k>/raw.csv, problem.yaml, planner.yaml, seed.txt
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import shutil
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, sim
from .errors import InputError, PlanBenchError, RenderError
from .planners import PlannerConfig, load_planner_config, make_planner, parse_planner_config, serialize_planner_config
from .planners.base import AbstractPlanner
from .problem import ProblemFormulation, load_problem, parse_problem_config, randomize, serialize_problem
from .records import PLANNER_FILE, PROBLEM_FILE, RAW_CSV, SEED_FILE, CsvSink, fmt, raw_columns, read_trial
from .sim import Status
from .svg import document, element, num

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
SNAPSHOT = "snapshot.svg"
Clock = Callable[[], float]


@dataclass(frozen=True)
class StudySpec:
    problem: str
    planners: Sequence[str]
    results: str = "results"
    trials: int = 1
    base_seed: int = 0
    random_goal: bool = False
    random_init: bool = False
    random_obst: bool = False
    render: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise InputError(f"number of trials must be >= 1, got {self.trials}")
        if not self.planners:
            raise InputError("at least one planner configuration is required")


@dataclass
class TrialResult:
    trial: int
    seed: int
    status: Status
    steps: int
    wall_time: float
    directory: str | None = None
    planner: str | None = None
    error: str | None = None


def _row(state: sim.SimState, obs: sim.Observation, pf: ProblemFormulation, solver_time: float | None) -> list[str]:
    cells = [str(state.step), fmt(state.time)]
    cells += [fmt(v) for v in state.q]
    cells += [fmt(v) for v in state.qdot]
    if state.action is None:
        cells += [""] * pf.n
    else:
        cells += [fmt(v) for v in state.action]
    cells += [fmt(v) for v in obs.sphere_centers.ravel()]
    for p, r in zip(obs.obstacle_positions, obs.obstacle_radii):
        cells += [fmt(p[0]), fmt(p[1]), fmt(p[2]), fmt(r)]
    cells += [fmt(v) for v in pf.goal.primary.desired_position]
    cells += [fmt(solver_time), state.status.value]
    return cells


def run_trial(
    pf: ProblemFormulation,
    planner: AbstractPlanner,
    seed: int,
    sink,
    clock: Clock = time.perf_counter,
) -> TrialResult:
    """Run ``planner`` on ``pf`` until a terminal status, streaming rows to ``sink``.

    Only the ``compute_action`` call is timed. A planner that raises or
    returns a malformed action ends the trial with ``planner_failure``.
    """
    started = time.perf_counter()
    state, obs = sim.reset(pf)
    sink.write_header(raw_columns(pf.n, len(pf.chain.collision_spheres), len(pf.obstacles)))
    sink.write_row(_row(state, obs, pf, None))
    status, error = Status.RUNNING, None
    while not status.terminal:
        try:
            t0 = clock()
            action = planner.compute_action(obs)
            solver_time = max(clock() - t0, 0.0)
            action = np.asarray(action, dtype=float)
            if action.shape != (pf.n,) or not np.all(np.isfinite(action)):
                raise InputError(f"planner returned an invalid action {action!r}")
        except Exception as exc:  # noqa: BLE001 - any planner fault ends only this trial
            status, error = Status.PLANNER_FAILURE, f"{type(exc).__name__}: {exc}"
            log.warning("trial seed %d: planner failure: %s", seed, error)
            break
        state, obs, status = sim.step(state, action, pf)
        sink.write_row(_row(state, obs, pf, solver_time))
    return TrialResult(
        trial=-1,
        seed=seed,
        status=status,
        steps=state.step,
        wall_time=time.perf_counter() - started,
        error=error,
    )


def _resolved_for_storage(pf: ProblemFormulation) -> ProblemFormulation:
    """Make a URDF path absolute so the saved problem is readable from any folder."""
    if pf.robot.urdf is None or Path(pf.robot.urdf).is_absolute() or pf.base_dir is None:
        return pf
    absolute = str((Path(pf.base_dir) / pf.robot.urdf).resolve())
    return dataclasses.replace(pf, robot=dataclasses.replace(pf.robot, urdf=absolute))


def _atomic_trial_dir(final: Path) -> Path:
    tmp = final.with_name(f".{final.name}.tmp")
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    return tmp


def execute_trial(
    problem_text: str,
    planner_text: str,
    seed: int,
    trial_dir: str,
    render: bool = False,
    clock: Clock = time.perf_counter,
) -> TrialResult:
    """Run one trial from serialized configs and write its directory atomically.

    Running from the saved texts (rather than in-memory objects) guarantees
    the trial is reproducible from its own folder.
    """
    final = Path(trial_dir)
    tmp = _atomic_trial_dir(final)
    pf = parse_problem_config(problem_text)
    config = parse_planner_config(planner_text)
    (tmp / PROBLEM_FILE).write_text(problem_text, encoding="utf-8")
    (tmp / PLANNER_FILE).write_text(planner_text, encoding="utf-8")
    (tmp / SEED_FILE).write_text(f"{seed}\n", encoding="utf-8")
    try:
        planner = make_planner(config.name, config, pf)
    except Exception as exc:  # noqa: BLE001
        planner = None
        setup_error = f"{type(exc).__name__}: {exc}"
    with CsvSink(tmp / RAW_CSV) as sink:
        if planner is None:
            state, obs = sim.reset(pf)
            sink.write_header(raw_columns(pf.n, len(pf.chain.collision_spheres), len(pf.obstacles)))
            sink.write_row(_row(state, obs, pf, None))
            result = TrialResult(-1, seed, Status.PLANNER_FAILURE, 0, 0.0, error=setup_error)
        else:
            result = run_trial(pf, planner, seed, sink, clock)
    if render:
        render_snapshot(tmp, tmp / SNAPSHOT)
    if final.exists():
        shutil.rmtree(final)
    os.replace(tmp, final)
    result.directory = str(final)
    return result


def _unique_labels(names: list[str]) -> list[str]:
    labels, seen = [], {}
    for name in names:
        k = seen.get(name, 0)
        labels.append(name if k == 0 else f"{name}_{k}")
        seen[name] = k + 1
    return labels


def _study_folder(results: Path, name: str, now: datetime) -> Path:
    base = results / f"{name}_{now.strftime('%Y%m%d_%H%M%S')}"
    folder, k = base, 1
    while folder.exists():
        folder = base.with_name(f"{base.name}_{k}")
        k += 1
    folder.mkdir(parents=True)
    return folder


def _job(args) -> TrialResult:
    return execute_trial(*args)


def run_study(spec: StudySpec, clock: Clock = time.perf_counter, now: datetime | None = None) -> dict:
    """Run every trial of ``spec`` and return the study manifest.

    Trial ``k`` uses seed ``base_seed + k`` for problem randomization; all
    planners see the identical randomized problem. Each planner's RNG is
    seeded with its configured seed plus the trial seed.
    """
    problem_path = Path(spec.problem)
    if not problem_path.is_file():
        raise InputError(f"problem configuration not found: {spec.problem}")
    for p in spec.planners:
        if not Path(p).is_file():
            raise InputError(f"planner configuration not found: {p}")
    pf = load_problem(problem_path)
    configs = [load_planner_config(p) for p in spec.planners]
    labels = _unique_labels([c.name for c in configs])

    now = now or datetime.now(timezone.utc)
    folder = _study_folder(Path(spec.results), problem_path.stem, now)
    jobs, meta = [], []
    for k in range(spec.trials):
        seed = spec.base_seed + k
        try:
            pf_k = randomize(pf, seed, goal=spec.random_goal, init=spec.random_init, obst=spec.random_obst)
        except PlanBenchError as exc:
            for label in labels:
                meta.append(dict(planner=label, trial=k, seed=seed, status="randomization_error", steps=0,
                                 wall_time=0.0, directory=None, error=str(exc)))
            continue
        problem_text = serialize_problem(_resolved_for_storage(pf_k))
        for label, config in zip(labels, configs):
            cfg_k = dataclasses.replace(config, seed=config.seed + seed)
            trial_dir = folder / label / f"trial_{k}"
            jobs.append((problem_text, serialize_planner_config(cfg_k), seed, str(trial_dir), spec.render))
            meta.append(dict(planner=label, trial=k, seed=seed))

    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [execute_trial(*job, clock=clock) for job in jobs]

    trials, it = [], iter(results)
    for m in meta:
        if "status" in m:
            trials.append(m)
            continue
        r = next(it)
        trials.append(dict(
            planner=m["planner"], trial=m["trial"], seed=m["seed"], status=r.status.value, steps=r.steps,
            wall_time=r.wall_time, directory=str(Path(r.directory).relative_to(folder)), error=r.error,
        ))
    trials.sort(key=lambda t: (labels.index(t["planner"]), t["trial"]))

    manifest = {
        "study_name": problem_path.stem,
        "tool_version": __version__,
        "created_utc": now.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "finished_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "spec": {
            "problem": str(problem_path.resolve()),
            "planners": [str(Path(p).resolve()) for p in spec.planners],
            "results": str(Path(spec.results).resolve()),
            "trials": spec.trials,
            "base_seed": spec.base_seed,
            "random_goal": spec.random_goal,
            "random_init": spec.random_init,
            "random_obst": spec.random_obst,
            "render": spec.render,
        },
        "planners": [{"label": l, "name": c.name} for l, c in zip(labels, configs)],
        "trials": trials,
    }
    (folder / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    manifest["folder"] = str(folder)
    return manifest


# ---------------------------------------------------------------------------
# trajectory snapshot


def render_snapshot(trial_dir: str | Path, out: str | Path | None = None) -> Path:
    """Draw the primary-link path, obstacles and goal in the x-y plane as SVG."""
    trial_dir = Path(trial_dir)
    out = Path(out) if out is not None else trial_dir / SNAPSHOT
    try:
        rec = read_trial(trial_dir)
    except PlanBenchError as exc:
        raise RenderError(f"cannot render {trial_dir}: {exc}") from None
    path = rec.primary_positions[:, :2]
    obst = rec.obstacles
    goal = rec.goal[-1, :2]
    pts = [path, goal[None, :]]
    for j in range(rec.n_obstacles):
        for row in (obst[0, j], obst[-1, j]):
            r = row[3]
            pts.append(np.array([[row[0] - r, row[1] - r], [row[0] + r, row[1] + r]]))
    allpts = np.vstack(pts)
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    extent = float(max(hi[0] - lo[0], hi[1] - lo[1], 1.0))
    pad = 0.05 * extent
    x0, y0 = lo[0] - pad, lo[1] - pad
    w, h = (hi[0] - lo[0]) + 2 * pad, (hi[1] - lo[1]) + 2 * pad
    w, h = max(w, 2 * pad), max(h, 2 * pad)
    stroke = extent / 250
    scale = 500 / max(w, h)

    body = [element("title", f"trajectory ({rec.final_status})")]
    body.append(f'<g transform="scale(1,-1)">')
    for j in range(rec.n_obstacles):
        sx, sy, _, r = obst[0, j]
        ex, ey, _, _ = obst[-1, j]
        body.append(element("circle", cx=num(sx), cy=num(sy), r=num(r), fill="#d62728", fill_opacity="0.35",
                            stroke="#d62728", stroke_width=num(stroke), class_="obstacle-start"))
        if (ex, ey) != (sx, sy):
            body.append(element("circle", cx=num(ex), cy=num(ey), r=num(r), fill="none", stroke="#d62728",
                                stroke_width=num(stroke), stroke_dasharray=f"{num(4 * stroke)} {num(3 * stroke)}",
                                class_="obstacle-end"))
            body.append(element("line", x1=num(sx), y1=num(sy), x2=num(ex), y2=num(ey), stroke="#d62728",
                                stroke_width=num(stroke), marker_end="url(#arrow)", class_="obstacle-motion"))
    body.append(element("circle", cx=num(goal[0]), cy=num(goal[1]), r=num(4 * stroke), fill="#2ca02c",
                        class_="goal"))
    points = " ".join(f"{num(x)},{num(y)}" for x, y in path)
    body.append(element("polyline", points=points, fill="none", stroke="#1f77b4", stroke_width=num(2 * stroke),
                        class_="path"))
    body.append(element("circle", cx=num(path[0, 0]), cy=num(path[0, 1]), r=num(3 * stroke), fill="#1f77b4",
                        class_="start"))
    body.append("</g>")
    marker = (
        '<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" '
        'orient="auto-start-reverse"><path d="M 0 0 L 10 5 L 0 10 z" fill="#d62728"/></marker></defs>'
    )
    view_box = f"{num(x0)} {num(-(y0 + h))} {num(w)} {num(h)}"
    text = document(w * scale, h * scale, [marker, *body], view_box=view_box)
    out.write_text(text, encoding="utf-8")
    return out
