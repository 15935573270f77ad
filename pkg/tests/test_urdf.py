import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from planbench.errors import (
    UnsupportedFeatureError,
    UrdfAmbiguityError,
    UrdfError,
    UrdfParseError,
    UrdfValidationError,
)
from planbench.kinematics import link_position, planar_arm_chain, sphere_centers
from planbench.urdf import CONTINUOUS_LIMIT, chain_summary, parse_urdf


def read(configs, name):
    return (configs / "urdf" / name).read_text()


def wrap(body: str, name: str = "r") -> str:
    return f'<?xml version="1.0"?>\n<robot name="{name}">\n{body}\n</robot>\n'


def joint(name, kind, parent, child, extra=""):
    return (f'<joint name="{name}" type="{kind}"><parent link="{parent}"/><child link="{child}"/>{extra}</joint>')


LIMIT = '<limit lower="-2" upper="2" velocity="1.5"/>'


class TestTwoLink:
    def test_tip_at_zero(self, configs):
        chain = parse_urdf(read(configs, "two_link.urdf"))
        assert chain.n == 2
        np.testing.assert_allclose(link_position(chain, [0, 0], chain.tip_link), (2, 0, 0), atol=1e-15)

    def test_matches_builtin_arm(self, configs, rng):
        parsed = parse_urdf(read(configs, "two_link.urdf"), tip_link="tip")
        builtin = planar_arm_chain([1.0, 1.0], 0.1)
        for q in rng.uniform(-math.pi, math.pi, (10, 2)):
            for link in ("link1", "link2", "tip"):
                np.testing.assert_allclose(link_position(parsed, q, link), link_position(builtin, q, link), atol=1e-9)
            np.testing.assert_allclose(sphere_centers(parsed, q), sphere_centers(builtin, q), atol=1e-9)
        np.testing.assert_array_equal(parsed.sphere_radii, builtin.sphere_radii)

    def test_hand_pose_table(self, configs):
        # tip positions worked out by hand from the link lengths
        chain = parse_urdf(read(configs, "two_link.urdf"))
        table = {
            (0.0, 0.0): (2.0, 0.0),
            (math.pi / 2, 0.0): (0.0, 2.0),
            (math.pi / 2, -math.pi / 2): (1.0, 1.0),
            (math.pi, 0.0): (-2.0, 0.0),
            (0.0, math.pi / 2): (1.0, 1.0),
            (-math.pi / 2, math.pi): (0.0, 0.0),
            (math.pi / 4, 0.0): (math.sqrt(2), math.sqrt(2)),
            (math.pi / 3, math.pi / 3): (0.5 - 0.5, math.sqrt(3) / 2 + math.sqrt(3) / 2),
            (-math.pi / 6, 0.0): (math.sqrt(3), -1.0),
            (math.pi / 2, math.pi / 2): (-1.0, 1.0),
        }
        for q, (x, y) in table.items():
            np.testing.assert_allclose(link_position(chain, q, "tip"), (x, y, 0.0), atol=1e-9)

    def test_summary_matches_builtin(self, configs):
        parsed = chain_summary(parse_urdf(read(configs, "two_link.urdf")))
        builtin = chain_summary(planar_arm_chain([1.0, 1.0], 0.1))
        assert parsed == builtin
        assert parsed.splitlines()[-1] == "2 actuated joints, 1 fixed joints, 3 collision spheres"

    def test_deterministic(self, configs):
        text = read(configs, "two_link.urdf")
        assert parse_urdf(text) == parse_urdf(text)


class TestErrorDocuments:
    def test_no_links(self, configs):
        with pytest.raises(UrdfValidationError) as exc:
            parse_urdf(read(configs, "no_links.urdf"))
        assert exc.value.element == "robot[x]"

    def test_branching(self, configs):
        with pytest.raises(UrdfAmbiguityError) as exc:
            parse_urdf(read(configs, "branching.urdf"))
        assert exc.value.element == "link[base]"

    def test_branching_with_tip(self, configs):
        chain = parse_urdf(read(configs, "branching.urdf"), tip_link="right")
        assert [j.name for j in chain.joints] == ["right_joint"]

    def test_planar_joint(self, configs):
        with pytest.raises(UnsupportedFeatureError) as exc:
            parse_urdf(read(configs, "planar_joint.urdf"))
        assert exc.value.element == "joint[floor]"

    def test_dangling(self, configs):
        with pytest.raises(UrdfValidationError) as exc:
            parse_urdf(read(configs, "dangling.urdf"))
        assert exc.value.element == "joint[j1]"
        assert "ghost" in str(exc.value)

    def test_malformed(self, configs):
        with pytest.raises(UrdfParseError) as exc:
            parse_urdf(read(configs, "malformed.urdf"))
        assert exc.value.line == 5

    def test_floating(self):
        text = wrap('<link name="a"/><link name="b"/>' + joint("f", "floating", "a", "b"))
        with pytest.raises(UnsupportedFeatureError):
            parse_urdf(text)

    def test_mesh(self):
        mesh = '<collision><geometry><mesh filename="x.stl"/></geometry></collision>'
        text = wrap(f'<link name="a"/><link name="b">{mesh}</link>' + joint("j", "revolute", "a", "b", LIMIT))
        with pytest.raises(UnsupportedFeatureError):
            parse_urdf(text)

    def test_empty(self):
        with pytest.raises(UrdfParseError):
            parse_urdf("")

    def test_missing_limit(self):
        text = wrap('<link name="a"/><link name="b"/>' + joint("j", "revolute", "a", "b"))
        with pytest.raises(UrdfValidationError):
            parse_urdf(text)

    def test_unknown_tip(self, configs):
        with pytest.raises(UrdfValidationError):
            parse_urdf(read(configs, "two_link.urdf"), tip_link="nope")


class TestConventions:
    def test_default_axis(self):
        text = wrap('<link name="a"/><link name="b"/>' + joint("j", "prismatic", "a", "b", LIMIT))
        chain = parse_urdf(text)
        assert chain.joints[0].axis == (1.0, 0.0, 0.0)
        np.testing.assert_allclose(link_position(chain, [0.7], "b"), (0.7, 0, 0))

    def test_continuous(self):
        text = wrap('<link name="a"/><link name="b"/>' + joint("j", "continuous", "a", "b", '<axis xyz="0 0 1"/>'))
        j = parse_urdf(text).joints[0]
        assert j.kind == "revolute"
        assert (j.lower, j.upper) == (-CONTINUOUS_LIMIT, CONTINUOUS_LIMIT)

    def test_axis_normalized(self):
        text = wrap('<link name="a"/><link name="b"/>' + joint("j", "revolute", "a", "b", '<axis xyz="0 0 2"/>' + LIMIT))
        assert parse_urdf(text).joints[0].axis == (0.0, 0.0, 1.0)

    def test_bounding_spheres(self):
        box = '<collision><origin xyz="0.1 0.2 0.3"/><geometry><box size="1 2 2"/></geometry></collision>'
        cyl = '<collision><geometry><cylinder radius="0.2" length="1.0"/></geometry></collision>'
        fat = '<collision><geometry><cylinder radius="0.8" length="1.0"/></geometry></collision>'
        text = wrap(f'<link name="a"/><link name="b">{box}{cyl}{fat}</link>' + joint("j", "revolute", "a", "b", LIMIT))
        spheres = parse_urdf(text).collision_spheres
        assert [s.radius for s in spheres] == [1.5, 0.5, 0.8]
        assert spheres[0].offset == (0.1, 0.2, 0.3)
        assert spheres[1].offset == (0.0, 0.0, 0.0)

    def test_origin_rpy(self):
        extra = '<origin xyz="0 0 1" rpy="0 0 1.5707963267948966"/><axis xyz="1 0 0"/>' + LIMIT
        text = wrap('<link name="a"/><link name="b"/><link name="c"/>' + joint("j", "prismatic", "a", "b", extra)
                    + joint("t", "fixed", "b", "c", '<origin xyz="1 0 0"/>'))
        chain = parse_urdf(text)
        # the yawed origin turns the slide axis and the fixed offset onto +y
        np.testing.assert_allclose(link_position(chain, [0.5], "c"), (0, 1.5, 1), atol=1e-12)

    def test_summary_point_mass(self):
        from planbench.kinematics import point_mass_chain

        lines = chain_summary(point_mass_chain(2)).splitlines()
        assert [ln.split()[1] for ln in lines[2:4]] == ["prismatic", "prismatic"]


@given(st.sampled_from(["revolute", "prismatic", "fixed", "continuous", "planar", "floating", "bogus"]))
def test_parsing_is_total(kind):
    """Every joint type either parses to a chain or raises a UrdfError naming an element."""
    text = wrap('<link name="a"/><link name="b"/><link name="c"/>' + joint("j", kind, "a", "b", LIMIT)
                + joint("k", "revolute", "b", "c", LIMIT))
    try:
        chain = parse_urdf(text)
    except UrdfError as exc:
        assert exc.element
    else:
        assert chain.n >= 1
