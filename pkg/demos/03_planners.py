# %% [markdown]
# # The three baseline planners
#
# * `pd` drives the goal link straight at the goal and ignores obstacles.
# * `potential_field` adds repulsion from nearby obstacles.
# * `random_shooting` samples action sequences, rolls them out and keeps the
#   first action of the cheapest one.
#
# All three share one interface: `compute_action(observation) -> action`.

# %%
from planbench import bundled_config
from planbench.planners import load_planner_config, make_planner
from planbench.problem import load_problem, randomize
from planbench.records import MemorySink
from planbench.runner import run_trial

base = load_problem(bundled_config("pm2d.yaml"))
configs = {n: load_planner_config(bundled_config(f"{n}.yaml")) for n in ("pd", "pf", "rs")}

# %% [markdown]
# Run each planner on the same five randomized scenes.

# %%
for seed in range(5):
    pf = randomize(base, seed, goal=True, obst=True)
    cells = []
    for label, cfg in configs.items():
        planner = make_planner(cfg.name, cfg, pf)
        result = run_trial(pf, planner, seed, MemorySink())
        cells.append(f"{label}: {result.status.value:<18s} ({result.steps:3d} steps)")
    print(f"seed {seed}  " + "  ".join(cells))

# %% [markdown]
# The potential field exposes its potential, which is handy for checking
# that the commanded force really descends it.

# %%
from planbench.sim import reset

pf = randomize(base, 0, goal=True, obst=True)
planner = make_planner("potential_field", configs["pf"], pf)
state, obs = reset(pf)
print("potential at start:", round(planner.potential(obs), 4))
print("first action:", planner.compute_action(obs))
