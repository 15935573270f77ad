"""Serial kinematic chains: forward kinematics, positional Jacobians, collision spheres.

A chain is a sequence of joints, each attaching a child link to the previous
link. Link 0 is the root (world) link; link ``i + 1`` is the child of joint
``i``. Every joint contributes ``origin @ motion(q)`` where ``origin`` is a
fixed roll-pitch-yaw transform and ``motion`` rotates about (revolute) or
translates along (prismatic) the joint axis. Fixed joints contribute their
origin only.

Point masses are modelled as chains of orthogonal prismatic joints so that
planners and the simulator only ever deal with one robot abstraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InputError

JOINT_KINDS = ("revolute", "prismatic", "fixed")
ORTHONORMAL_TOL = 1e-9

# Default limits of the builtin robots.
POINT_MASS_POSITION_LIMIT = 10.0
POINT_MASS_VELOCITY_LIMIT = 2.0
POINT_MASS_ACCELERATION_LIMIT = 5.0
ARM_VELOCITY_LIMIT = 2.0
ARM_ACCELERATION_LIMIT = 10.0


def rpy_matrix(rpy: Sequence[float]) -> np.ndarray:
    """Fixed-axis roll-pitch-yaw to rotation matrix, ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    r, p, y = (float(v) for v in rpy)
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def homogeneous(rotation: np.ndarray, translation: Sequence[float]) -> np.ndarray:
    T = np.eye(4)
    T[:3, :3] = rotation
    T[:3, 3] = translation
    return T


def _vec3(values: Sequence[float], what: str) -> tuple[float, float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise InputError(f"{what} must be a finite 3-vector, got {values!r}")
    return (float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class JointSpec:
    name: str
    kind: str
    parent: str
    child: str
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    origin_xyz: tuple[float, float, float] = (0.0, 0.0, 0.0)
    origin_rpy: tuple[float, float, float] = (0.0, 0.0, 0.0)
    lower: float = 0.0
    upper: float = 0.0
    velocity: float = 0.0
    acceleration: float = 0.0

    def __post_init__(self):
        if self.kind not in JOINT_KINDS:
            raise InputError(f"joint {self.name!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "axis", _vec3(self.axis, f"joint {self.name!r} axis"))
        object.__setattr__(self, "origin_xyz", _vec3(self.origin_xyz, f"joint {self.name!r} origin xyz"))
        object.__setattr__(self, "origin_rpy", _vec3(self.origin_rpy, f"joint {self.name!r} origin rpy"))
        if self.kind == "fixed":
            return
        if abs(float(np.linalg.norm(self.axis)) - 1.0) > 1e-9:
            raise InputError(f"joint {self.name!r}: axis must have unit norm, got {self.axis}")
        if not self.lower <= self.upper:
            raise InputError(f"joint {self.name!r}: lower limit {self.lower} exceeds upper {self.upper}")
        if not (self.velocity > 0 and self.acceleration > 0):
            raise InputError(f"joint {self.name!r}: velocity and acceleration limits must be > 0")

    @property
    def actuated(self) -> bool:
        return self.kind != "fixed"

    @cached_property
    def origin(self) -> np.ndarray:
        return homogeneous(rpy_matrix(self.origin_rpy), self.origin_xyz)


@dataclass(frozen=True)
class CollisionSphere:
    link: str
    offset: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "offset", _vec3(self.offset, f"sphere on {self.link!r} offset"))
        if not self.radius > 0:
            raise InputError(f"sphere on {self.link!r}: radius must be > 0, got {self.radius}")


@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        if R.shape != (3, 3):
            raise InputError("rotation must be 3x3")
        if not np.allclose(R @ R.T, np.eye(3), atol=ORTHONORMAL_TOL) or abs(np.linalg.det(R) - 1.0) > ORTHONORMAL_TOL:
            raise InputError("rotation must be orthonormal with determinant +1")

    @property
    def matrix(self) -> np.ndarray:
        return homogeneous(self.rotation, self.position)


@dataclass(frozen=True)
class KinematicChain:
    """Immutable serial robot model, validated at construction."""

    joints: tuple[JointSpec, ...]
    collision_spheres: tuple[CollisionSphere, ...] = ()
    tip_link: str | None = None
    name: str = "robot"
    links: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "collision_spheres", tuple(self.collision_spheres))
        if not self.joints:
            raise InputError("a chain needs at least one joint")
        links = [self.joints[0].parent]
        for j in self.joints:
            if j.parent != links[-1]:
                raise InputError(
                    f"joint {j.name!r}: parent {j.parent!r} is not the previous child {links[-1]!r}"
                )
            if j.child in links:
                raise InputError(f"joint {j.name!r}: link {j.child!r} appears twice")
            links.append(j.child)
        object.__setattr__(self, "links", tuple(links))
        if self.n < 1:
            raise InputError("a chain needs at least one actuated joint")
        for s in self.collision_spheres:
            if s.link not in links:
                raise InputError(f"collision sphere references unknown link {s.link!r}")
        if self.tip_link is None:
            object.__setattr__(self, "tip_link", links[-1])
        elif self.tip_link not in links:
            raise InputError(f"unknown tip link {self.tip_link!r}")

    @cached_property
    def actuated(self) -> tuple[int, ...]:
        """Indices (into ``joints``) of the non-fixed joints, in chain order."""
        return tuple(i for i, j in enumerate(self.joints) if j.actuated)

    @property
    def n(self) -> int:
        return len(self.actuated)

    @cached_property
    def position_limits(self) -> np.ndarray:
        return np.array([[self.joints[i].lower, self.joints[i].upper] for i in self.actuated])

    @cached_property
    def velocity_limits(self) -> np.ndarray:
        return np.array([self.joints[i].velocity for i in self.actuated])

    @cached_property
    def acceleration_limits(self) -> np.ndarray:
        return np.array([self.joints[i].acceleration for i in self.actuated])

    def link_index(self, link: str) -> int:
        try:
            return self.links.index(link)
        except ValueError:
            raise InputError(f"unknown link {link!r}; chain links are {list(self.links)}") from None

    @cached_property
    def _sphere_data(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = np.array([self.links.index(s.link) for s in self.collision_spheres], dtype=int)
        offsets = np.array([s.offset for s in self.collision_spheres], dtype=float).reshape(-1, 3)
        radii = np.array([s.radius for s in self.collision_spheres], dtype=float)
        return idx, offsets, radii

    @property
    def sphere_radii(self) -> np.ndarray:
        return self._sphere_data[2]


def _check_q(chain: KinematicChain, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[-1:] != (chain.n,):
        raise InputError(f"expected {chain.n} joint values, got shape {q.shape}")
    return q


def _motion(joint: JointSpec, q: np.ndarray) -> np.ndarray:
    """Batched joint motion transforms, shape ``q.shape + (4, 4)``."""
    T = np.broadcast_to(np.eye(4), q.shape + (4, 4)).copy()
    a = np.asarray(joint.axis)
    if joint.kind == "prismatic":
        T[..., :3, 3] = q[..., None] * a
        return T
    # Rodrigues: R = I + sin(q) K + (1 - cos(q)) K^2
    K = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    s = np.sin(q)[..., None, None]
    c = (1.0 - np.cos(q))[..., None, None]
    T[..., :3, :3] = np.eye(3) + s * K + c * (K @ K)
    return T


def link_transforms(chain: KinematicChain, q) -> np.ndarray:
    """World transforms of every link, shape ``(..., len(links), 4, 4)``.

    Accepts a single configuration ``(n,)`` or a batch ``(B, n)``.
    """
    q = _check_q(chain, q)
    batch = q.shape[:-1]
    out = np.empty(batch + (len(chain.links), 4, 4))
    current = np.broadcast_to(np.eye(4), batch + (4, 4))
    out[..., 0, :, :] = current
    k = 0
    for i, joint in enumerate(chain.joints):
        current = current @ joint.origin
        if joint.actuated:
            current = current @ _motion(joint, q[..., k])
            k += 1
        out[..., i + 1, :, :] = current
    return out


def forward_kinematics(chain: KinematicChain, q) -> list[Pose]:
    """World pose of every link of ``chain`` at configuration ``q``, in link order."""
    T = link_transforms(chain, q)
    if T.ndim != 3:
        raise InputError("forward_kinematics takes a single configuration")
    return [Pose(position=t[:3, 3].copy(), rotation=t[:3, :3].copy()) for t in T]


def link_position(chain: KinematicChain, q, link: str, offset=(0.0, 0.0, 0.0)) -> np.ndarray:
    """World position of ``offset`` (in the frame of ``link``); batched over ``q``."""
    i = chain.link_index(link)
    T = link_transforms(chain, q)[..., i, :, :]
    return T[..., :3, :3] @ np.asarray(offset, dtype=float) + T[..., :3, 3]


def positional_jacobian(chain: KinematicChain, q, link: str, offset=(0.0, 0.0, 0.0)) -> np.ndarray:
    """3 x n Jacobian of the world position of a point rigidly attached to ``link``.

    Columns of joints distal to ``link`` are exactly zero.
    """
    li = chain.link_index(link)
    q = _check_q(chain, q)
    if q.ndim != 1:
        raise InputError("positional_jacobian takes a single configuration")
    T = link_transforms(chain, q)
    p = T[li, :3, :3] @ np.asarray(offset, dtype=float) + T[li, :3, 3]
    J = np.zeros((3, chain.n))
    for col, ji in enumerate(chain.actuated):
        if ji + 1 > li:
            break
        # Frame of joint ji after its origin, before its motion: the axis and
        # pivot are invariant under the motion itself.
        frame = T[ji] @ chain.joints[ji].origin
        axis = frame[:3, :3] @ np.asarray(chain.joints[ji].axis)
        if chain.joints[ji].kind == "prismatic":
            J[:, col] = axis
        else:
            J[:, col] = np.cross(axis, p - frame[:3, 3])
    return J


def collision_sphere_centers(chain: KinematicChain, q) -> list[tuple[np.ndarray, float]]:
    centers = sphere_centers(chain, q)
    return [(c, float(r)) for c, r in zip(centers, chain.sphere_radii)]


def sphere_centers(chain: KinematicChain, q, transforms: np.ndarray | None = None) -> np.ndarray:
    """Collision sphere centers as an array of shape ``(..., n_spheres, 3)``.

    Pass ``transforms`` (from :func:`link_transforms`) to skip recomputing FK.
    """
    idx, offsets, _ = chain._sphere_data
    if transforms is None:
        transforms = link_transforms(chain, q)
    T = transforms[..., idx, :, :]
    return np.einsum("...sij,sj->...si", T[..., :3, :3], offsets) + T[..., :3, 3]


def point_mass_chain(dim: int = 2, radius: float = 0.1) -> KinematicChain:
    if dim not in (2, 3):
        raise InputError(f"point masses are 2D or 3D, got {dim}")
    if not radius > 0:
        raise InputError(f"sphere radius must be > 0, got {radius}")
    axes = ("x", "y", "z")[:dim]
    links = ["world"] + [f"slider_{a}" for a in axes[:-1]] + ["mass"]
    joints = []
    for k, a in enumerate(axes):
        axis = [0.0, 0.0, 0.0]
        axis[k] = 1.0
        joints.append(
            JointSpec(
                name=f"joint_{a}",
                kind="prismatic",
                parent=links[k],
                child=links[k + 1],
                axis=tuple(axis),
                lower=-POINT_MASS_POSITION_LIMIT,
                upper=POINT_MASS_POSITION_LIMIT,
                velocity=POINT_MASS_VELOCITY_LIMIT,
                acceleration=POINT_MASS_ACCELERATION_LIMIT,
            )
        )
    sphere = CollisionSphere("mass", (0.0, 0.0, 0.0), radius)
    return KinematicChain(tuple(joints), (sphere,), tip_link="mass", name=f"point_mass_{dim}d")


def planar_arm_chain(lengths: Sequence[float], radius: float = 0.1) -> KinematicChain:
    """Planar arm of z-axis revolute joints with a fixed tip frame.

    One collision sphere sits at each link midpoint and one at the tip.
    """
    lengths = [float(v) for v in lengths]
    if not lengths:
        raise InputError("planar arm needs at least one link length")
    if any(not L > 0 for L in lengths):
        raise InputError(f"link lengths must be > 0, got {lengths}")
    if not radius > 0:
        raise InputError(f"sphere radius must be > 0, got {radius}")
    joints, spheres = [], []
    parent, prev_len = "base", 0.0
    for k, L in enumerate(lengths):
        child = f"link{k + 1}"
        joints.append(
            JointSpec(
                name=f"joint{k + 1}",
                kind="revolute",
                parent=parent,
                child=child,
                axis=(0.0, 0.0, 1.0),
                origin_xyz=(prev_len, 0.0, 0.0),
                lower=-math.pi,
                upper=math.pi,
                velocity=ARM_VELOCITY_LIMIT,
                acceleration=ARM_ACCELERATION_LIMIT,
            )
        )
        spheres.append(CollisionSphere(child, (L / 2, 0.0, 0.0), radius))
        parent, prev_len = child, L
    joints.append(JointSpec(name="tip_joint", kind="fixed", parent=parent, child="tip", origin_xyz=(prev_len, 0.0, 0.0)))
    spheres.append(CollisionSphere("tip", (0.0, 0.0, 0.0), radius))
    return KinematicChain(tuple(joints), tuple(spheres), tip_link="tip", name="planar_arm")


def builtin_chain(spec: str, lengths: Sequence[float] | None = None, sphere_radius: float = 0.1) -> KinematicChain:
    """Construct one of the builtin robots: ``point_mass_2d``, ``point_mass_3d`` or ``planar_arm``."""
    if spec == "point_mass_2d":
        return point_mass_chain(2, sphere_radius)
    if spec == "point_mass_3d":
        return point_mass_chain(3, sphere_radius)
    if spec == "planar_arm":
        return planar_arm_chain(lengths or [], sphere_radius)
    raise InputError(f"unknown builtin robot {spec!r}; expected point_mass_2d, point_mass_3d or planar_arm")
