"""Command-line entry points: ``runner`` and ``post_processor``.

Exit codes: 0 success, 2 usage or validation error, 3 data/load error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import InputError, LoadError, PlanBenchError, RegistryError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

RESULTS_ENV = "PLANBENCH_RESULTS"


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose errors name the offending option and exit with code 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def runner_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="runner",
        description="Run a study: every planner on the same (optionally randomized) problem, numberRuns times.",
        epilog="Exit codes: 0 success, 2 usage/validation error, 3 data error. "
        f"The results root defaults to ${RESULTS_ENV} if set, else ./results.",
        allow_abbrev=False,
    )
    p.add_argument("--caseSetup", required=True, metavar="PATH", help="Problem formulation (YAML).")
    p.add_argument("--planners", required=True, nargs="+", metavar="PATH",
                   help="One or more planner configuration files (YAML).")
    p.add_argument("--res-folder", dest="res_folder", metavar="PATH",
                   default=os.environ.get(RESULTS_ENV, "results"), help="Root directory for study folders.")
    p.add_argument("--render", action="store_true",
                   help="Write a trajectory snapshot.svg into every trial folder.")
    p.add_argument("--numberRuns", type=_positive_int, default=1, metavar="N", help="Trials per planner (default 1).")
    p.add_argument("--random-goal", dest="random_goal", action="store_true", help="Draw a fresh goal for each trial.")
    p.add_argument("--random-init", dest="random_init", action="store_true",
                   help="Draw a fresh initial configuration for each trial.")
    p.add_argument("--random-obst", dest="random_obst", action="store_true", help="Draw fresh obstacles for each trial.")
    p.add_argument("--seed", type=int, default=0,
                   help="Base seed; trial k uses seed+k (extension, default 0).")
    p.add_argument("--workers", type=_positive_int, default=1, help="Parallel worker processes (extension).")
    return p


def post_processor_parser() -> argparse.ArgumentParser:
    from .postproc import registered_metrics

    p = _Parser(
        prog="post_processor",
        description="Compute metrics, reports and plots for a finished study.",
        epilog="Registered kpis: " + ", ".join(registered_metrics())
        + ". Exit codes: 0 success, 2 usage error, 3 data/load error.",
        allow_abbrev=False,
    )
    p.add_argument("--expFolder", required=True, metavar="PATH", help="Study folder written by runner.")
    p.add_argument("--kpis", required=True, nargs="+", metavar="KPI", help="Metrics to evaluate (registered names below).")
    p.add_argument("--plot", action="store_true", help="Write SVG plots next to the report.")
    p.add_argument("--series", action="store_true",
                   help="Aggregate across trials, one section and plot set per planner.")
    p.add_argument("--compare", action="store_true",
                   help="Planners side by side, one box plot per metric.")
    return p


def runner_main(argv: list[str] | None = None) -> int:
    from .runner import StudySpec, run_study

    args = runner_parser().parse_args(argv)
    try:
        spec = StudySpec(
            problem=args.caseSetup,
            planners=args.planners,
            results=args.res_folder,
            trials=args.numberRuns,
            base_seed=args.seed,
            random_goal=args.random_goal,
            random_init=args.random_init,
            random_obst=args.random_obst,
            render=args.render,
            workers=args.workers,
        )
        manifest = run_study(spec)
    except (InputError, RegistryError) as exc:
        print(f"runner: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PlanBenchError, OSError) as exc:
        print(f"runner: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(manifest["folder"])
    return EXIT_OK


def post_processor_main(argv: list[str] | None = None) -> int:
    from .postproc import get_metric, postprocess

    parser = post_processor_parser()
    args = parser.parse_args(argv)
    try:
        for k in args.kpis:
            get_metric(k)
    except RegistryError as exc:
        parser.error(f"argument --kpis: {exc.args[0]}")
    if not os.path.isdir(args.expFolder):
        print(f"post_processor: error: --expFolder {args.expFolder!r} does not exist", file=sys.stderr)
        return EXIT_DATA
    try:
        _, table, files = postprocess(args.expFolder, args.kpis, plot=args.plot, series=args.series,
                                      compare=args.compare)
    except LoadError as exc:
        print(f"post_processor: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InputError as exc:
        print(f"post_processor: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PlanBenchError, OSError) as exc:
        print(f"post_processor: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(table)
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def _entry(main) -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    sys.exit(main(sys.argv[1:]))


def runner_entry() -> None:
    _entry(runner_main)


def post_processor_entry() -> None:
    _entry(post_processor_main)
