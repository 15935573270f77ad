# %% [markdown]
# # Adding a planner and a metric
#
# Subclassing `AbstractPlanner` with a `name` registers the planner; its
# configuration file then only needs `name:` and an optional parameter block
# under the same key. Metrics register through a decorator.

# %%
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from planbench import bundled_config
from planbench.planners import AbstractPlanner
from planbench.postproc import postprocess, register_metric
from planbench.runner import StudySpec, run_study


@dataclass(frozen=True)
class WanderParams:
    gain: float = 1.0
    noise: float = 0.3


class Wander(AbstractPlanner):
    """Proportional pull towards the goal plus Gaussian jitter."""

    name = "wander"
    Params = WanderParams

    def compute_action(self, obs):
        goal = np.asarray(obs.goal.primary.desired_position[: self.pf.n])
        pull = self.params.gain * (goal - obs.q)
        return self.clamp(pull + self.rng.normal(0.0, self.params.noise, self.pf.n))


@register_metric("steps", unit="1", label="steps taken")
def steps(records):
    return float(len(records) - 1)


# %%
work = Path(tempfile.mkdtemp(prefix="planbench_ext_"))
(work / "wander.yaml").write_text("name: wander\nseed: 5\nwander: {gain: 1.2, noise: 0.5}\n")
spec = StudySpec(problem=str(bundled_config("pm2d.yaml")),
                 planners=[str(work / "wander.yaml"), str(bundled_config("pd.yaml"))],
                 results=str(work / "results"), trials=5, random_obst=True)
folder = Path(run_study(spec)["folder"])
_, table, _ = postprocess(folder, ["success", "steps", "min_clearance"], compare=True)
print(table)
