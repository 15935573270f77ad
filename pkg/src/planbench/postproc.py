"""Post-processing: per-trial metrics, study aggregation, reports and box plots.

Post-processing only reads the runner's output and writes below
``<study>/postprocessed/``; it never touches raw data. New metrics are
added with :func:`register_metric`, mirroring the planner registry.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import EmitError, InputError, LoadError, RegistryError
from .records import TrialRecords, read_trial
from .runner import MANIFEST
from .svg import FONT, document, element, fixed, nice_ticks

POSTPROCESSED = "postprocessed"


# ---------------------------------------------------------------------------
# metrics


def _goal_row(records: TrialRecords) -> int | None:
    for i, s in enumerate(records.status):
        if s == "goal_reached":
            return i
    return None


def metric_path_length(records: TrialRecords, positions: np.ndarray | None = None) -> float:
    """Summed step length of the primary link, up to the goal row when the goal was reached."""
    p = records.primary_positions if positions is None else positions
    g = _goal_row(records)
    if g is not None:
        p = p[: g + 1]
    return float(np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1)))


def metric_min_clearance(records: TrialRecords) -> float:
    """Minimum robot-sphere/obstacle surface distance over all rows (``inf`` without obstacles)."""
    if records.n_obstacles == 0 or records.n_spheres == 0:
        return math.inf
    centers = records.sphere_centers  # (T, S, 3)
    obst = records.obstacles  # (T, M, 4)
    diff = centers[:, :, None, :] - obst[:, None, :, :3]
    d = np.linalg.norm(diff, axis=-1) - (records.sphere_radii[None, :, None] + obst[:, None, :, 3])
    return float(d.min())


def metric_time_to_goal(records: TrialRecords, dt: float | None = None) -> float | None:
    g = _goal_row(records)
    return None if g is None else float(records.time[g])


def metric_solver_time(records: TrialRecords) -> tuple[float | None, float | None]:
    st = records.solver_time[1:]
    if len(st) == 0:
        return None, None
    return float(np.mean(st)), float(np.max(st))


def metric_success(records: TrialRecords) -> bool:
    return records.final_status == "goal_reached"


@dataclass(frozen=True)
class Metric:
    name: str
    fn: Callable[[TrialRecords], float | bool | None]
    unit: str = ""
    # "success": aggregate over successful trials only; "all": over every trial.
    population: str = "all"
    boolean: bool = False
    label: str = ""


_METRICS: dict[str, Metric] = {}


def register_metric(name: str, unit: str = "", population: str = "all", boolean: bool = False, label: str = ""):
    """Decorator registering ``fn(records) -> value`` as a KPI."""
    if population not in ("all", "success"):
        raise InputError(f"population must be 'all' or 'success', got {population!r}")

    def wrap(fn):
        if name in _METRICS:
            raise RegistryError(f"metric {name!r} is already registered")
        _METRICS[name] = Metric(name, fn, unit, population, boolean, label or name.replace("_", " "))
        return fn

    return wrap


def registered_metrics() -> list[str]:
    return list(_METRICS)


def get_metric(name: str) -> Metric:
    try:
        return _METRICS[name]
    except KeyError:
        raise RegistryError(f"unknown kpi {name!r}; registered metrics: {', '.join(_METRICS)}") from None


register_metric("success", boolean=True)(metric_success)
register_metric("collided", boolean=True)(lambda r: r.final_status == "collision")
register_metric("path_length", unit="m", population="success", label="path length")(metric_path_length)
register_metric("min_clearance", unit="m", label="minimum clearance")(metric_min_clearance)
register_metric("time_to_goal", unit="s", population="success", label="time to goal")(metric_time_to_goal)
register_metric("solver_time", unit="s", label="mean solver time")(lambda r: metric_solver_time(r)[0])
register_metric("max_solver_time", unit="s", label="max solver time")(lambda r: metric_solver_time(r)[1])


@dataclass(frozen=True)
class TrialMetrics:
    success: bool
    time_to_goal: float | None
    path_length: float
    min_clearance: float
    mean_solver_time: float | None
    max_solver_time: float | None
    collided: bool


def trial_metrics(records: TrialRecords) -> TrialMetrics:
    mean_st, max_st = metric_solver_time(records)
    return TrialMetrics(
        success=metric_success(records),
        time_to_goal=metric_time_to_goal(records),
        path_length=metric_path_length(records),
        min_clearance=metric_min_clearance(records),
        mean_solver_time=mean_st,
        max_solver_time=max_st,
        collided=records.final_status == "collision",
    )


# ---------------------------------------------------------------------------
# loading


@dataclass
class TrialEntry:
    planner: str
    trial: int
    seed: int
    status: str
    records: TrialRecords | None
    error: str | None = None


@dataclass
class Study:
    folder: Path
    manifest: dict
    planners: list[str]
    trials: list[TrialEntry] = field(default_factory=list)

    def for_planner(self, label: str) -> list[TrialEntry]:
        return [t for t in self.trials if t.planner == label]


def load_study(folder: str | Path) -> Study:
    folder = Path(folder)
    manifest_path = folder / MANIFEST
    if not folder.is_dir():
        raise LoadError(str(folder), "study folder does not exist")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError:
        raise LoadError(str(manifest_path), "missing manifest") from None
    except json.JSONDecodeError as exc:
        raise LoadError(str(manifest_path), f"malformed manifest: {exc}") from None
    try:
        planners = [p["label"] for p in manifest["planners"]]
        entries = manifest["trials"]
    except (KeyError, TypeError):
        raise LoadError(str(manifest_path), "manifest lacks planners/trials") from None
    study = Study(folder, manifest, planners)
    for t in entries:
        records = None
        if t.get("directory"):
            records = read_trial(folder / t["directory"])
        study.trials.append(TrialEntry(t["planner"], t["trial"], t["seed"], t["status"], records, t.get("error")))
    return study


# ---------------------------------------------------------------------------
# aggregation

STAT_KEYS = ("mean", "std", "median", "min", "max")


def _stats(values: list[float]) -> dict | None:
    vals = np.array([v for v in values if v is not None and math.isfinite(v)], dtype=float)
    if len(vals) == 0:
        return None
    return {
        "count": int(len(vals)),
        "mean": float(np.mean(vals)),
        "std": float(np.std(vals)),
        "median": float(np.median(vals)),
        "min": float(np.min(vals)),
        "max": float(np.max(vals)),
    }


@dataclass
class PlannerSection:
    planner: str
    trials: int
    successes: int
    metrics: dict[str, dict | None]
    per_trial: list[dict]

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


@dataclass
class StudyReport:
    kpis: list[str]
    sections: list[PlannerSection]

    def section(self, planner: str) -> PlannerSection:
        return next(s for s in self.sections if s.planner == planner)

    def values(self, planner: str, kpi: str) -> list[float]:
        """Per-trial values of ``kpi`` that enter its statistics."""
        metric = get_metric(kpi)
        out = []
        for row in self.section(planner).per_trial:
            if metric.population == "success" and not row["success"]:
                continue
            v = row.get(kpi)
            if v is None or isinstance(v, bool) or not math.isfinite(v):
                continue
            out.append(v)
        return out


def aggregate(study: Study, kpis: list[str]) -> StudyReport:
    """Aggregate ``kpis`` per planner, in manifest order.

    ``path_length`` and ``time_to_goal`` use successful trials only; other
    scalars use every trial; infinite clearances are excluded.
    """
    if not kpis:
        raise InputError("at least one kpi is required")
    metrics = [get_metric(k) for k in kpis]
    sections = []
    for label in study.planners:
        entries = study.for_planner(label)
        per_trial = []
        for e in entries:
            row: dict = {"trial": e.trial, "seed": e.seed, "status": e.status}
            row["success"] = e.records is not None and metric_success(e.records)
            for m in metrics:
                if m.name == "success":
                    continue
                row[m.name] = None if e.records is None else m.fn(e.records)
            per_trial.append(row)
        stats: dict[str, dict | None] = {}
        for m in metrics:
            if m.boolean:
                hits = sum(1 for r in per_trial if r[m.name])
                stats[m.name] = {"count": hits, "rate": hits / len(per_trial) if per_trial else 0.0}
                continue
            pop = [r for r in per_trial if m.population == "all" or r["success"]]
            stats[m.name] = _stats([r[m.name] for r in pop])
        successes = sum(1 for r in per_trial if r["success"])
        sections.append(PlannerSection(label, len(per_trial), successes, stats, per_trial))
    return StudyReport(list(kpis), sections)


# ---------------------------------------------------------------------------
# report files


def _encode(value):
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_encode(v) for v in value]
    return value


def _decode(value):
    if value in ("inf", "-inf", "nan"):
        return float(value)
    if isinstance(value, dict):
        return {k: _decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


def report_to_dict(report: StudyReport) -> dict:
    return {
        "kpis": list(report.kpis),
        "planners": [
            {
                "planner": s.planner,
                "trials": s.trials,
                "successes": s.successes,
                "success_rate": {"fraction": f"{s.successes}/{s.trials}", "decimal": s.success_rate},
                "metrics": _encode(s.metrics),
                "per_trial": _encode(s.per_trial),
            }
            for s in report.sections
        ],
    }


def report_from_dict(data: dict) -> StudyReport:
    sections = [
        PlannerSection(p["planner"], p["trials"], p["successes"], _decode(p["metrics"]), _decode(p["per_trial"]))
        for p in data["planners"]
    ]
    return StudyReport(list(data["kpis"]), sections)


def read_report(path: str | Path) -> StudyReport:
    return report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _cell(metric: str, stats) -> str:
    if stats is None:
        return "n/a"
    if "rate" in stats:
        return f"{stats['rate']:.3f}"
    return f"{stats['mean']:.4g} ± {stats['std']:.2g}"


def format_table(report: StudyReport) -> str:
    """Planners as rows, one column per kpi (mean ± std, or rate for boolean kpis)."""
    header = ["planner", "trials", "success"] + [k for k in report.kpis if k != "success"]
    rows = []
    for s in report.sections:
        row = [s.planner, str(s.trials), f"{s.successes}/{s.trials} ({s.success_rate:.3f})"]
        row += [_cell(k, s.metrics.get(k)) for k in report.kpis if k != "success"]
        rows.append(row)
    widths = [max(len(r[c]) for r in [header, *rows]) for c in range(len(header))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*r) for r in rows]
    return "\n".join(lines)


def format_trials(report: StudyReport) -> str:
    """One line per trial with every requested kpi."""
    lines = []
    for s in report.sections:
        lines.append(f"[{s.planner}]")
        for row in s.per_trial:
            cells = [f"trial {row['trial']}", row["status"]]
            for k in report.kpis:
                v = row.get(k)
                cells.append(f"{k}=" + ("n/a" if v is None else (str(v) if isinstance(v, bool) else f"{v:.4g}")))
            lines.append("  " + "  ".join(cells))
    return "\n".join(lines)


def write_report(report: StudyReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Write ``report.json`` and ``report.txt`` to ``out_dir``."""
    if not report.kpis:
        raise InputError("nothing to report: the kpi list is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    txt_path = out_dir / "report.txt"
    json_path.write_text(json.dumps(report_to_dict(report), indent=2) + "\n", encoding="utf-8")
    txt_path.write_text(format_table(report) + "\n\n" + format_trials(report) + "\n", encoding="utf-8")
    return json_path, txt_path


# ---------------------------------------------------------------------------
# box plots

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def box_stats(values) -> dict:
    """Median, quartiles, 1.5 IQR whiskers and outliers of ``values``."""
    v = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = (float(x) for x in np.percentile(v, [25, 50, 75]))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "median": med,
        "q1": q1,
        "q3": q3,
        # interpolated quartiles can lie beyond every inlier; whiskers never retreat into the box
        "whisker_lo": min(float(inside.min()), q1),
        "whisker_hi": max(float(inside.max()), q3),
        "outliers": [float(x) for x in v[(v < lo_fence) | (v > hi_fence)]],
    }


def emit_boxplot(report: StudyReport, metric: str, out: str | Path) -> Path:
    """One box per planner (manifest order), whiskers at 1.5 IQR, outliers as dots."""
    m = get_metric(metric)
    if m.boolean:
        raise EmitError(f"{metric!r} is boolean; box plots need a scalar metric")
    groups = [(s.planner, report.values(s.planner, metric)) for s in report.sections]
    if not any(vals for _, vals in groups):
        raise EmitError(f"no finite values of {metric!r} to plot")

    W, H = 640.0, 400.0
    left, right, top, bottom = 80.0, 20.0, 40.0, 60.0
    pw, ph = W - left - right, H - top - bottom
    allv = [v for _, vals in groups for v in vals]
    ticks = nice_ticks(min(allv), max(allv))
    lo, hi = ticks[0], ticks[-1]

    def y(v: float) -> float:
        return top + ph * (1.0 - (v - lo) / (hi - lo))

    unit = f" [{m.unit}]" if m.unit else ""
    body = [
        element("rect", x=0.0, y=0.0, width=W, height=H, fill="white"),
        element("text", m.label, x=W / 2, y=24.0, text_anchor="middle", font_family=FONT, font_size="16"),
        element("line", x1=left, y1=top, x2=left, y2=top + ph, stroke="black"),
        element("line", x1=left, y1=top + ph, x2=left + pw, y2=top + ph, stroke="black"),
        element("text", m.label + unit, x=18.0, y=top + ph / 2, text_anchor="middle", font_family=FONT,
                font_size="13", transform=f"rotate(-90 18 {fixed(top + ph / 2)})"),
        element("text", "planner", x=left + pw / 2, y=H - 12.0, text_anchor="middle", font_family=FONT,
                font_size="13"),
    ]
    for t in ticks:
        ty = y(t)
        body.append(element("line", x1=left - 5, y1=ty, x2=left, y2=ty, stroke="black"))
        body.append(element("line", x1=left, y1=ty, x2=left + pw, y2=ty, stroke="#e0e0e0"))
        body.append(element("text", f"{t:.6g}", x=left - 8, y=ty + 4, text_anchor="end", font_family=FONT,
                            font_size="11"))
    slot = pw / len(groups)
    for i, (name, vals) in enumerate(groups):
        cx = left + slot * (i + 0.5)
        bw = min(60.0, slot * 0.5)
        color = PALETTE[i % len(PALETTE)]
        body.append(element("text", name, x=cx, y=top + ph + 20, text_anchor="middle", font_family=FONT,
                            font_size="12"))
        if not vals:
            continue
        b = box_stats(vals)
        body.append(f'<g class="box" data-planner="{name}">')
        body.append(element("line", x1=cx, y1=y(b["whisker_lo"]), x2=cx, y2=y(b["q1"]), stroke="black",
                            class_="whisker", data_value=repr(b["whisker_lo"])))
        body.append(element("line", x1=cx, y1=y(b["q3"]), x2=cx, y2=y(b["whisker_hi"]), stroke="black",
                            class_="whisker", data_value=repr(b["whisker_hi"])))
        for w in ("whisker_lo", "whisker_hi"):
            body.append(element("line", x1=cx - bw / 4, y1=y(b[w]), x2=cx + bw / 4, y2=y(b[w]), stroke="black"))
        body.append(element("rect", x=cx - bw / 2, y=y(b["q3"]), width=bw, height=max(y(b["q1"]) - y(b["q3"]), 0.0),
                            fill=color, fill_opacity="0.5", stroke="black", class_="iqr",
                            data_q1=repr(b["q1"]), data_q3=repr(b["q3"])))
        body.append(element("line", x1=cx - bw / 2, y1=y(b["median"]), x2=cx + bw / 2, y2=y(b["median"]),
                            stroke="black", stroke_width="2", class_="median", data_value=repr(b["median"])))
        for o in b["outliers"]:
            body.append(element("circle", cx=cx, cy=y(o), r=3.0, fill="none", stroke="black", class_="outlier",
                                data_value=repr(o)))
        body.append("</g>")
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(document(W, H, body), encoding="utf-8")
    return out


def postprocess(folder: str | Path, kpis: list[str], plot: bool = False, series: bool = False,
                compare: bool = False) -> tuple[StudyReport, str, list[Path]]:
    """Load a study, aggregate ``kpis`` and write reports (and plots) under ``postprocessed/``.

    ``compare``: planners side by side, one box plot per kpi with every planner.
    ``series`` without ``compare``: one section and one box plot per planner.
    Neither: single-trial mode, a per-trial table and one trajectory plot per trial.
    Returns the report, the printed table and the written files.
    """
    from .runner import render_snapshot

    for k in kpis:
        get_metric(k)
    study = load_study(folder)
    report = aggregate(study, kpis)
    out_dir = Path(folder) / POSTPROCESSED
    files = list(write_report(report, out_dir))
    scalar = [k for k in kpis if not get_metric(k).boolean]
    if compare:
        table = format_table(report)
        if plot:
            for k in scalar:
                if any(report.values(s.planner, k) for s in report.sections):
                    files.append(emit_boxplot(report, k, out_dir / f"boxplot_{k}.svg"))
    elif series:
        table = "\n\n".join(
            format_table(StudyReport(report.kpis, [s])) for s in report.sections
        )
        if plot:
            for s in report.sections:
                single = StudyReport(report.kpis, [s])
                for k in scalar:
                    if report.values(s.planner, k):
                        files.append(emit_boxplot(single, k, out_dir / f"boxplot_{k}_{s.planner}.svg"))
    else:
        table = format_trials(report)
        if plot:
            for t in study.trials:
                if t.records is not None:
                    trial_dir = Path(t.records.source).parent
                    files.append(render_snapshot(trial_dir, out_dir / f"trajectory_{t.planner}_trial_{t.trial}.svg"))
    return report, table, files
