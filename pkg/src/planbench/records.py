"""Raw trial data: CSV column layout, writing, and reading back.

One row per recorded state. Row 0 is the initial state and leaves the
``action_*`` and ``solver_time`` cells empty. Floats are written with
``repr`` so they read back bit-for-bit.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import TextIO

import numpy as np

from .errors import LoadError
from .kinematics import link_transforms
from .problem import load_problem

RAW_CSV = "raw.csv"
PROBLEM_FILE = "problem.yaml"
PLANNER_FILE = "planner.yaml"
SEED_FILE = "seed.txt"


def raw_columns(n: int, n_spheres: int, n_obstacles: int) -> list[str]:
    cols = ["step", "time"]
    cols += [f"q_{i}" for i in range(n)]
    cols += [f"qdot_{i}" for i in range(n)]
    cols += [f"action_{i}" for i in range(n)]
    cols += [f"link{i}_{a}" for i in range(n_spheres) for a in "xyz"]
    cols += [f"obst{j}_{a}" for j in range(n_obstacles) for a in "xyzr"]
    cols += ["goal_x", "goal_y", "goal_z", "solver_time", "status"]
    return cols


def fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


class CsvSink:
    """Writes raw rows to a UTF-8 CSV file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh: TextIO = open(self.path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")

    def write_header(self, columns: list[str]) -> None:
        self._writer.writerow(columns)

    def write_row(self, row: list[str]) -> None:
        self._writer.writerow(row)

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class MemorySink:
    def __init__(self):
        self.header: list[str] | None = None
        self.rows: list[list[str]] = []

    def write_header(self, columns: list[str]) -> None:
        self.header = list(columns)

    def write_row(self, row: list[str]) -> None:
        self.rows.append(list(row))

    def close(self) -> None:
        pass

    def text(self) -> str:
        lines = [",".join(self.header or [])] + [",".join(r) for r in self.rows]
        return "\n".join(lines) + "\n"


@dataclass
class TrialRecords:
    """Columns of one trial's raw CSV, as arrays."""

    columns: list[str]
    values: np.ndarray  # (T, C) numeric cells, NaN where empty; status column excluded
    status: list[str]
    n: int
    n_spheres: int
    n_obstacles: int
    source: str = "<memory>"
    sphere_radii: np.ndarray | None = None
    primary_positions: np.ndarray | None = None
    dt: float | None = None
    max_steps: int | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.status)

    @property
    def step(self) -> np.ndarray:
        return self.values[:, 0].astype(int)

    @property
    def time(self) -> np.ndarray:
        return self.values[:, 1]

    @property
    def q(self) -> np.ndarray:
        return self.values[:, 2 : 2 + self.n]

    @property
    def qdot(self) -> np.ndarray:
        return self.values[:, 2 + self.n : 2 + 2 * self.n]

    @property
    def action(self) -> np.ndarray:
        return self.values[:, 2 + 2 * self.n : 2 + 3 * self.n]

    @cached_property
    def sphere_centers(self) -> np.ndarray:
        """(T, S, 3)"""
        start = 2 + 3 * self.n
        return self.values[:, start : start + 3 * self.n_spheres].reshape(len(self), self.n_spheres, 3)

    @cached_property
    def obstacles(self) -> np.ndarray:
        """(T, M, 4) rows of x, y, z, r"""
        start = 2 + 3 * self.n + 3 * self.n_spheres
        return self.values[:, start : start + 4 * self.n_obstacles].reshape(len(self), self.n_obstacles, 4)

    @property
    def goal(self) -> np.ndarray:
        return self.values[:, -4:-1]

    @property
    def solver_time(self) -> np.ndarray:
        return self.values[:, -1]

    @property
    def final_status(self) -> str:
        return self.status[-1]


_HEADER_RE = {
    "q": re.compile(r"q_(\d+)$"),
    "link": re.compile(r"link(\d+)_x$"),
    "obst": re.compile(r"obst(\d+)_x$"),
}


def parse_raw_csv(text: str, source: str = "<memory>") -> TrialRecords:
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise LoadError(source, "empty file") from None
    n = sum(1 for c in header if _HEADER_RE["q"].match(c))
    n_spheres = sum(1 for c in header if _HEADER_RE["link"].match(c))
    n_obstacles = sum(1 for c in header if _HEADER_RE["obst"].match(c))
    expected = raw_columns(n, n_spheres, n_obstacles)
    if header != expected:
        raise LoadError(source, f"unexpected header; expected {len(expected)} columns {expected[:4]}...", row=1)
    action_cols = set(range(2 + 2 * n, 2 + 3 * n)) | {len(expected) - 2}
    rows, status = [], []
    for k, row in enumerate(reader):
        line = k + 2
        if len(row) != len(expected):
            raise LoadError(source, f"expected {len(expected)} fields, got {len(row)}", row=line)
        cells = []
        for c, cell in enumerate(row[:-1]):
            if cell == "":
                if k != 0 or c not in action_cols:
                    raise LoadError(source, f"empty cell in column {expected[c]!r}", row=line)
                cells.append(np.nan)
                continue
            try:
                cells.append(float(cell))
            except ValueError:
                raise LoadError(source, f"bad number {cell!r} in column {expected[c]!r}", row=line) from None
        rows.append(cells)
        status.append(row[-1])
    if not rows:
        raise LoadError(source, "no data rows")
    return TrialRecords(expected, np.array(rows, dtype=float), status, n, n_spheres, n_obstacles, source)


def read_trial(trial_dir: str | Path) -> TrialRecords:
    """Load ``raw.csv`` of a trial directory, with robot data from its ``problem.yaml``."""
    trial_dir = Path(trial_dir)
    csv_path = trial_dir / RAW_CSV
    try:
        text = csv_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise LoadError(str(csv_path), f"cannot read: {exc.strerror}") from None
    rec = parse_raw_csv(text, str(csv_path))
    problem_path = trial_dir / PROBLEM_FILE
    try:
        pf = load_problem(problem_path)
    except OSError as exc:
        raise LoadError(str(problem_path), f"cannot read: {exc.strerror}") from None
    except Exception as exc:  # noqa: BLE001
        raise LoadError(str(problem_path), f"invalid problem: {exc}") from None
    chain = pf.chain
    if (chain.n, len(chain.collision_spheres), len(pf.obstacles)) != (rec.n, rec.n_spheres, rec.n_obstacles):
        raise LoadError(str(csv_path), "column layout does not match the trial's problem.yaml")
    T = link_transforms(chain, rec.q)
    rec.primary_positions = T[:, chain.link_index(pf.goal.primary.link), :3, 3]
    rec.sphere_radii = chain.sphere_radii.copy()
    rec.dt = pf.dt
    rec.max_steps = pf.max_steps
    seed_path = trial_dir / SEED_FILE
    if seed_path.exists():
        rec.meta["seed"] = int(seed_path.read_text().strip())
    return rec
