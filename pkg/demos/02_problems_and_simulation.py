# %% [markdown]
# # Problem formulations and the simulator
#
# A problem is one YAML document: robot, control mode, limits, goal and
# obstacles, plus optional randomization ranges. The simulator advances it one
# step at a time and reports a status.

# %%
import numpy as np

from planbench import bundled_config
from planbench.problem import load_problem, randomize, serialize_problem
from planbench.sim import Environment

pf = load_problem(bundled_config("pm2d.yaml"))
print(f"{pf.n} DoF, {pf.control_mode} control, dt={pf.dt}, {len(pf.obstacles)} obstacles")
print("goal:", pf.goal.primary)

# %% [markdown]
# Randomization is a pure function of the seed. The same seed always gives
# the same problem, which is what makes a study reproducible.

# %%
a = randomize(pf, 3, goal=True, obst=True)
b = randomize(pf, 3, goal=True, obst=True)
print("same seed, same problem:", a == b)
for o in a.obstacles:
    print("  obstacle", np.round(o.position, 3), "r =", round(o.radius, 3), "v =", np.round(o.velocity, 3))

# %% [markdown]
# The serialized form is what the runner stores next to every trial.

# %%
print(serialize_problem(a)[:400], "...")

# %% [markdown]
# Driving the environment by hand: head straight for the goal at full speed
# and watch what happens.

# %%
env = Environment(pf)
obs = env.reset()
goal = np.array(pf.goal.primary.desired_position[:2])
while True:
    direction = goal - obs.q
    obs, status = env.step(1.5 * direction / max(np.linalg.norm(direction), 1e-9))
    if status.terminal:
        break
print(f"stopped after {env.state.step} steps at {np.round(obs.q, 3)}: {status.value}")
