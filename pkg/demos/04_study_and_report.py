# %% [markdown]
# # A small comparison study
#
# `run_study` runs every planner on the same randomized problem for each trial
# index and writes one folder per trial. `postprocess` turns the folder into
# a report and box plots. The command-line tools `runner` and
# `post_processor` wrap exactly these two calls.

# %%
import tempfile
from pathlib import Path

from planbench import bundled_config
from planbench.postproc import postprocess
from planbench.runner import StudySpec, run_study

out = Path(tempfile.mkdtemp(prefix="planbench_demo_"))
spec = StudySpec(
    problem=str(bundled_config("pm2d.yaml")),
    planners=[str(bundled_config(n)) for n in ("pd.yaml", "pf.yaml", "rs.yaml")],
    results=str(out),
    trials=10,
    random_goal=True,
    random_obst=True,
)
manifest = run_study(spec)
folder = Path(manifest["folder"])
print(folder)
print(sorted(p.name for p in (folder / "pd").iterdir()))

# %% [markdown]
# Within one trial index every planner saw the byte-identical problem.

# %%
same = all(
    len({(folder / label / f"trial_{k}" / "problem.yaml").read_bytes()
         for label in ("pd", "potential_field", "random_shooting")}) == 1
    for k in range(10)
)
print("fair pairing holds:", same)

# %%
kpis = ["success", "path_length", "min_clearance", "time_to_goal", "solver_time"]
report, table, files = postprocess(folder, kpis, plot=True, compare=True)
print(table)
for f in files:
    print("wrote", f.relative_to(folder))

# %% [markdown]
# Equivalent shell session:
#
#     runner --caseSetup pm2d.yaml --planners pd.yaml pf.yaml rs.yaml \
#            --numberRuns 10 --random-goal --random-obst
#     post_processor --expFolder results/pm2d_<timestamp> \
#            --kpis success path_length min_clearance time_to_goal solver_time --plot --compare
