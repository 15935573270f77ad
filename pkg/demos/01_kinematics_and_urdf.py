# %% [markdown]
# # Robots as kinematic chains
#
# Every robot in planbench is a serial chain of joints with collision spheres
# attached to its links. Two chains ship built in (a point mass and a planar
# arm); anything else comes in through a URDF file.

# %%
import numpy as np

from planbench import bundled_config
from planbench.kinematics import link_position, planar_arm_chain, positional_jacobian, sphere_centers
from planbench.urdf import chain_summary, parse_urdf

arm = planar_arm_chain([1.0, 1.0], radius=0.1)
print(chain_summary(arm))

# %% [markdown]
# Forward kinematics of the tip. With both joints at zero the arm lies along
# +x; bending the elbow by -90 degrees after a +90 degree shoulder brings the
# tip to (1, 1).

# %%
for q in ([0.0, 0.0], [np.pi / 2, 0.0], [np.pi / 2, -np.pi / 2]):
    print(q, "->", np.round(link_position(arm, q, "tip"), 12))

# %% [markdown]
# The positional Jacobian maps joint velocities to tip velocity. A quick
# central-difference check:

# %%
q = np.array([0.3, -1.1])
J = positional_jacobian(arm, q, "tip")
h = 1e-6
J_fd = np.column_stack([
    (link_position(arm, q + h * e, "tip") - link_position(arm, q - h * e, "tip")) / (2 * h) for e in np.eye(2)
])
print(J[:2])
print("max deviation from finite differences:", np.abs(J - J_fd).max())

# %% [markdown]
# ## Importing a URDF
#
# The bundled `two_link.urdf` describes the same 2R arm. Parsing it gives a
# chain that agrees with the builtin one everywhere.

# %%
urdf_chain = parse_urdf(bundled_config("urdf/two_link.urdf").read_text())
print(chain_summary(urdf_chain))
rng = np.random.default_rng(0)
worst = max(np.abs(sphere_centers(urdf_chain, q) - sphere_centers(arm, q)).max()
            for q in rng.uniform(-np.pi, np.pi, (10, 2)))
print("largest sphere-center difference over 10 random poses:", worst)

# %% [markdown]
# Documents outside the supported subset fail with a structured error that
# names the offending element.

# %%
from planbench.errors import UrdfError

for name in ("branching.urdf", "planar_joint.urdf", "dangling.urdf", "malformed.urdf"):
    try:
        parse_urdf(bundled_config(f"urdf/{name}").read_text())
    except UrdfError as exc:
        print(f"{name:18s} {type(exc).__name__}: {exc}")
