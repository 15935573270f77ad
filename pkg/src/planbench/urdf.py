"""Import serial robots from a subset of URDF.

Supported: ``revolute``, ``continuous``, ``prismatic`` and ``fixed`` joints;
``sphere``, ``box`` and ``cylinder`` collision geometry (boxes and cylinders
become their bounding spheres). Everything else that affects geometry is
rejected rather than silently dropped.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

import numpy as np

from .errors import (
    InputError,
    UnsupportedFeatureError,
    UrdfAmbiguityError,
    UrdfParseError,
    UrdfValidationError,
)
from .kinematics import CollisionSphere, JointSpec, KinematicChain

CONTINUOUS_LIMIT = 1e9
# URDF carries no acceleration limit; this value is used for every joint.
DEFAULT_ACCELERATION_LIMIT = 10.0
# Used for continuous joints that omit <limit velocity=...>.
DEFAULT_VELOCITY_LIMIT = 1.0


def _floats(text: str | None, count: int, element: str, default=None) -> tuple[float, ...]:
    if text is None:
        return default
    try:
        values = tuple(float(v) for v in text.split())
    except ValueError:
        raise UrdfValidationError(f"expected {count} numbers, got {text!r}", element) from None
    if len(values) != count or not all(math.isfinite(v) for v in values):
        raise UrdfValidationError(f"expected {count} finite numbers, got {text!r}", element)
    return values


def _origin(el: ET.Element | None, element: str) -> tuple[tuple[float, ...], tuple[float, ...]]:
    if el is None:
        return (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
    xyz = _floats(el.get("xyz"), 3, element, (0.0, 0.0, 0.0))
    rpy = _floats(el.get("rpy"), 3, element, (0.0, 0.0, 0.0))
    return xyz, rpy


def _collision_spheres(link: ET.Element, name: str) -> list[CollisionSphere]:
    spheres = []
    for k, col in enumerate(link.findall("collision")):
        where = f"link[{name}]/collision[{k}]"
        xyz, _ = _origin(col.find("origin"), where)
        geom = col.find("geometry")
        if geom is None or len(geom) != 1:
            raise UrdfValidationError("collision needs exactly one geometry child", where)
        shape = geom[0]
        if shape.tag == "sphere":
            (radius,) = _floats(shape.get("radius"), 1, where + "/sphere")
        elif shape.tag == "box":
            size = _floats(shape.get("size"), 3, where + "/box")
            radius = 0.5 * float(np.linalg.norm(size))
        elif shape.tag == "cylinder":
            (r,) = _floats(shape.get("radius"), 1, where + "/cylinder")
            (length,) = _floats(shape.get("length"), 1, where + "/cylinder")
            radius = 0.5 * max(length, 2.0 * r)
        else:
            raise UnsupportedFeatureError(f"collision geometry {shape.tag!r} is not supported", where)
        if not radius > 0:
            raise UrdfValidationError(f"collision radius must be > 0, got {radius}", where)
        spheres.append(CollisionSphere(name, xyz, radius))
    return spheres


def _joint_spec(el: ET.Element) -> JointSpec:
    name = el.get("name")
    where = f"joint[{name}]"
    if not name:
        raise UrdfValidationError("joint without a name", "joint")
    kind = el.get("type")
    if kind in ("planar", "floating"):
        raise UnsupportedFeatureError(f"joint type {kind!r} is not supported", where)
    if kind not in ("revolute", "continuous", "prismatic", "fixed"):
        raise UrdfValidationError(f"unknown joint type {kind!r}", where)
    parent, child = el.find("parent"), el.find("child")
    if parent is None or child is None or not parent.get("link") or not child.get("link"):
        raise UrdfValidationError("joint needs <parent link=...> and <child link=...>", where)
    xyz, rpy = _origin(el.find("origin"), where + "/origin")
    axis_el = el.find("axis")
    axis = (1.0, 0.0, 0.0) if axis_el is None else _floats(axis_el.get("xyz"), 3, where + "/axis", (1.0, 0.0, 0.0))
    common = dict(name=name, parent=parent.get("link"), child=child.get("link"), origin_xyz=xyz, origin_rpy=rpy)
    if kind == "fixed":
        return JointSpec(kind="fixed", axis=axis, **common)
    norm = float(np.linalg.norm(axis))
    if norm == 0.0:
        raise UrdfValidationError("joint axis must be non-zero", where + "/axis")
    axis = tuple(v / norm for v in axis)
    limit = el.find("limit")
    if kind == "continuous":
        lower, upper = -CONTINUOUS_LIMIT, CONTINUOUS_LIMIT
        velocity = DEFAULT_VELOCITY_LIMIT
        if limit is not None and limit.get("velocity") is not None:
            (velocity,) = _floats(limit.get("velocity"), 1, where + "/limit")
        kind = "revolute"
    else:
        if limit is None:
            raise UrdfValidationError(f"{kind} joint requires a <limit> element", where)
        (lower,) = _floats(limit.get("lower"), 1, where + "/limit", (0.0,))
        (upper,) = _floats(limit.get("upper"), 1, where + "/limit", (0.0,))
        if limit.get("velocity") is None:
            raise UrdfValidationError("<limit> requires a velocity attribute", where + "/limit")
        (velocity,) = _floats(limit.get("velocity"), 1, where + "/limit")
    try:
        return JointSpec(
            kind=kind,
            axis=axis,
            lower=lower,
            upper=upper,
            velocity=velocity,
            acceleration=DEFAULT_ACCELERATION_LIMIT,
            **common,
        )
    except InputError as exc:
        raise UrdfValidationError(str(exc), where) from None


def parse_urdf(text: str, tip_link: str | None = None) -> KinematicChain:
    """Parse URDF text into the serial chain from the root link to ``tip_link``.

    Without ``tip_link`` the robot must already be serial; its single leaf
    becomes the tip.
    """
    if not text or not text.strip():
        raise UrdfParseError("empty URDF document")
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        reason = str(exc).split(":")[0]
        raise UrdfParseError(f"malformed XML: {reason}", line, col) from None
    if root.tag != "robot":
        raise UrdfValidationError(f"top-level element must be <robot>, got <{root.tag}>", root.tag)
    robot_name = root.get("name", "robot")

    links: dict[str, ET.Element] = {}
    for el in root.findall("link"):
        name = el.get("name")
        if not name:
            raise UrdfValidationError("link without a name", "link")
        if name in links:
            raise UrdfValidationError("duplicate link name", f"link[{name}]")
        links[name] = el
    if not links:
        raise UrdfValidationError("robot has no links", f"robot[{robot_name}]")

    joints = [_joint_spec(el) for el in root.findall("joint")]
    by_child: dict[str, JointSpec] = {}
    children: dict[str, list[JointSpec]] = {}
    for j in joints:
        for role, link in (("parent", j.parent), ("child", j.child)):
            if link not in links:
                raise UrdfValidationError(f"{role} link {link!r} does not exist", f"joint[{j.name}]")
        if j.child in by_child:
            raise UrdfValidationError(f"link {j.child!r} has two parent joints", f"joint[{j.name}]")
        by_child[j.child] = j
        children.setdefault(j.parent, []).append(j)

    roots = [name for name in links if name not in by_child]
    if len(roots) != 1:
        raise UrdfValidationError(f"expected exactly one root link, found {roots}", f"robot[{robot_name}]")

    if tip_link is None:
        if any(len(c) > 1 for c in children.values()):
            branching = sorted(p for p, c in children.items() if len(c) > 1)
            raise UrdfAmbiguityError(
                "robot branches; pass tip_link to choose a serial path", f"link[{branching[0]}]"
            )
        leaves = [name for name in links if name not in children]
        tip_link = leaves[0]
    elif tip_link not in links:
        raise UrdfValidationError("tip link does not exist", f"link[{tip_link}]")

    path: list[JointSpec] = []
    link = tip_link
    while link in by_child:
        path.append(by_child[link])
        link = by_child[link].parent
    path.reverse()
    if not path:
        raise UrdfValidationError("tip link is the root; the chain has no joints", f"link[{tip_link}]")

    on_path = [path[0].parent] + [j.child for j in path]
    spheres = [s for name in on_path for s in _collision_spheres(links[name], name)]
    try:
        return KinematicChain(tuple(path), tuple(spheres), tip_link=tip_link, name=robot_name)
    except InputError as exc:
        raise UrdfValidationError(str(exc), f"robot[{robot_name}]") from None


def chain_summary(chain: KinematicChain) -> str:
    """Plain-text table of the actuated joints of ``chain``."""
    header = ("joint", "kind", "lower", "upper", "velocity", "acceleration")
    rows = []
    for i in chain.actuated:
        j = chain.joints[i]
        rows.append((j.name, j.kind, f"{j.lower:.6g}", f"{j.upper:.6g}", f"{j.velocity:.6g}", f"{j.acceleration:.6g}"))
    widths = [max(len(r[c]) for r in [header, *rows]) for c in range(len(header))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*r) for r in rows]
    fixed = len(chain.joints) - chain.n
    lines.append(f"{chain.n} actuated joints, {fixed} fixed joints, {len(chain.collision_spheres)} collision spheres")
    return "\n".join(lines)
