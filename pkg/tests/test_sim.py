import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_pf
from planbench.errors import ContractError, InputError
from planbench.kinematics import planar_arm_chain
from planbench.problem import GoalComposition, SubGoal
from planbench.sim import (
    Environment,
    SimState,
    Status,
    goal_satisfied,
    integrate,
    min_clearance,
    reset,
    step,
    surface_distance,
)


def test_reset():
    pf = make_pf(obstacles=[{"position": [2.0, y, 0.0], "radius": 0.2} for y in (-1.0, 0.0, 1.0)])
    state, obs = reset(pf)
    assert state.step == 0 and obs.time == 0.0 and state.status is Status.RUNNING
    np.testing.assert_array_equal(obs.q, (0, 0))
    assert len(obs.obstacles) == 3
    state2, obs2 = reset(pf)
    np.testing.assert_array_equal(state.obstacle_positions, state2.obstacle_positions)
    np.testing.assert_array_equal(obs.sphere_centers, obs2.sphere_centers)


def test_velocity_step():
    state, _ = reset(make_pf())
    nxt, obs, status = step(state, [1.0, 0.0], make_pf())
    np.testing.assert_array_equal(nxt.q, (0.1, 0.0))
    np.testing.assert_array_equal(nxt.qdot, (1.0, 0.0))
    assert nxt.time == pytest.approx(0.1) and status is Status.RUNNING


def test_acceleration_step():
    pf = make_pf(control_mode="acceleration")
    state, _ = reset(pf)
    nxt, _, _ = step(state, [1.0, 0.0], pf)
    np.testing.assert_allclose(nxt.qdot, (0.1, 0.0), rtol=0, atol=1e-15)
    np.testing.assert_allclose(nxt.q, (0.01, 0.0), rtol=0, atol=1e-15)


def test_collision():
    pf = make_pf(q0=[-2.0, 0.0], obstacles=[{"position": [0.0, 0.0, 0.0], "radius": 1.0}])
    state = SimState(4, 0.4, np.array([0.6, 0.0]), np.zeros(2), np.zeros((1, 3)))
    nxt, _, status = step(state, [-1.0, 0.0], pf)
    np.testing.assert_allclose(nxt.q, (0.5, 0.0))
    assert status is Status.COLLISION
    assert min_clearance(nxt, pf.chain, pf) == pytest.approx(-0.6)


def test_collision_beats_goal():
    pf = make_pf(
        q0=[2.9, 0.0],
        obstacles=[{"position": [3.0, 0.9, 0.0], "radius": 0.5, "velocity": [0.0, -5.0, 0.0]}],
    )
    state, _ = reset(pf)
    state, _, status = step(state, [1.0, 0.0], pf)
    assert goal_satisfied(pf.chain, state.q, pf.goal)[0]
    assert min_clearance(state, pf.chain, pf) < 0
    assert status is Status.COLLISION


def test_goal_and_max_steps():
    pf = make_pf(max_steps=3)
    state, _ = reset(pf)
    statuses = []
    for _ in range(3):
        state, _, status = step(state, [0.0, 0.0], pf)
        statuses.append(status)
    assert statuses == [Status.RUNNING, Status.RUNNING, Status.MAX_STEPS_EXCEEDED]
    with pytest.raises(ContractError):
        step(state, [0.0, 0.0], pf)

    pf = make_pf(goal=[{"link": "mass", "desired_position": [0.2, 0.0, 0.0], "epsilon": 0.05}])
    state, _ = reset(pf)
    state, _, status = step(state, [2.0, 0.0], pf)
    assert status is Status.GOAL_REACHED


@pytest.mark.parametrize("action", [[math.nan, 0.0], [0.0, math.inf], [1.0]])
def test_bad_action(action):
    pf = make_pf()
    state, _ = reset(pf)
    with pytest.raises(InputError):
        step(state, action, pf)


def test_surface_distance():
    assert surface_distance(((0, 0, 0), 1.0), ((0, 3, 0), 0.5)) == 1.5
    assert surface_distance(((0, 0, 0), 1.0), ((0, 0, 0), 1.0)) == -2.0


@given(st.lists(st.floats(-100, 100), min_size=6, max_size=6), st.floats(0.01, 10), st.floats(0.01, 10))
def test_surface_distance_symmetric(c, ra, rb):
    a, b = (c[:3], ra), (c[3:], rb)
    assert surface_distance(a, b) == surface_distance(b, a)


def test_min_clearance_examples():
    pf = make_pf(obstacles=[{"position": [0.0, 3.0, 0.0], "radius": 1.0}])
    state, _ = reset(pf)
    assert min_clearance(state, pf.chain, pf) == pytest.approx(1.9, abs=1e-15)
    pf = make_pf()
    assert min_clearance(reset(pf)[0], pf.chain, pf) == math.inf


def test_min_clearance_brute_force(rng):
    obstacles = [{"position": [2.5, 1.5, 0.0], "radius": 0.3}, {"position": [-1.0, 2.0, 0.5], "radius": 0.4}]
    pf = make_pf(
        robot={"builtin": "planar_arm", "lengths": [1.0, 1.0], "sphere_radius": 0.1},
        q0=[0.0, 0.0],
        limits={"position": [[-3.2, 3.2], [-3.2, 3.2]], "velocity": [2.0, 2.0], "acceleration": [5.0, 5.0]},
        goal=[{"desired_position": [0.0, 2.0, 0.0]}],
        obstacles=obstacles,
    )
    for q in rng.uniform(-3, 3, (20, 2)):
        state = SimState(0, 0.0, q, np.zeros(2), np.array([o["position"] for o in obstacles], dtype=float))
        brute = min(
            surface_distance((c, r), (o["position"], o["radius"]))
            for c, r in reset_centers(pf, q)
            for o in obstacles
        )
        assert min_clearance(state, pf.chain, pf) == pytest.approx(brute, abs=1e-12)


def reset_centers(pf, q):
    from planbench.kinematics import collision_sphere_centers

    return collision_sphere_centers(pf.chain, q)


class TestGoal:
    chain = planar_arm_chain([1.0, 1.0])

    def goal(self, desired, eps=0.05, dims=(0, 1, 2)):
        return GoalComposition((SubGoal("tip", desired, eps, 1.0, dims, True),))

    def test_within(self):
        ok, errs = goal_satisfied(self.chain, [0, 0], self.goal((2.04, 0, 0)))
        assert ok and errs[0] == pytest.approx(0.04)

    def test_boundary(self):
        assert goal_satisfied(self.chain, [0, 0], self.goal((2.0, 0.05, 0)))[0]
        assert not goal_satisfied(self.chain, [0, 0], self.goal((2.0, 0.0500001, 0)))[0]

    def test_dims(self):
        assert goal_satisfied(self.chain, [0, 0], self.goal((2.0, 0.0, 10.0), dims=(0, 1)))[0]
        assert not goal_satisfied(self.chain, [0, 0], self.goal((2.0, 0.0, 10.0)))[0]

    def test_all_sub_goals(self):
        goal = GoalComposition((
            SubGoal("tip", (2.0, 0.0, 0.0), 0.05, 1.0, (0, 1), True),
            SubGoal("link2", (1.0, 0.5, 0.0), 0.05, 1.0, (0, 1), False),
        ))
        ok, errs = goal_satisfied(self.chain, [0, 0], goal)
        assert not ok and len(errs) == 2


def test_obstacle_motion_is_exact():
    v = [0.1, -0.3, 0.7]
    pf = make_pf(obstacles=[{"position": [4.0, 4.0, 0.0], "radius": 0.1, "velocity": v}], max_steps=200)
    state, _ = reset(pf)
    for k in range(1, 101):
        state, _, _ = step(state, [0.0, 0.0], pf)
        expected = np.array([4.0, 4.0, 0.0]) + (k * pf.dt) * np.array(v)
        np.testing.assert_array_equal(state.obstacle_positions[0], expected)
        assert state.time == k * pf.dt


def test_determinism(rng):
    pf = make_pf(obstacles=[{"position": [1.5, 0.5, 0.0], "radius": 0.2, "velocity": [0.0, -0.1, 0.0]}])
    actions = rng.uniform(-3, 3, (40, 2))

    def run():
        env = Environment(pf)
        env.reset()
        out = []
        for a in actions:
            obs, status = env.step(a)
            out.append(np.concatenate([obs.q, obs.qdot, obs.obstacle_positions.ravel()]))
            if status.terminal:
                break
        return np.array(out)

    np.testing.assert_array_equal(run(), run())


def test_environment_contract():
    env = Environment(make_pf())
    with pytest.raises(ContractError):
        env.step([0.0, 0.0])
    obs = env.reset()
    assert env.status is Status.RUNNING and obs.time == 0.0


finite = st.floats(-1e6, 1e6)


@given(st.lists(finite, min_size=2, max_size=2), st.lists(finite, min_size=2, max_size=2),
       st.lists(finite, min_size=2, max_size=2), st.sampled_from(["velocity", "acceleration"]))
def test_clamp_soundness(q, qdot, action, mode):
    pos = np.array([[-1.0, 2.0], [-3.0, 0.5]])
    vel = np.array([1.5, 0.7])
    acc = np.array([4.0, 9.0])
    q = np.clip(q, pos[:, 0], pos[:, 1])
    qdot = np.clip(qdot, -vel, vel)
    qn, qdn, applied = integrate(q, qdot, np.array(action), 0.05, mode, pos, vel, acc)
    assert np.all((qn >= pos[:, 0]) & (qn <= pos[:, 1]))
    assert np.all(np.abs(qdn) <= vel)
    assert np.all(np.abs(applied) <= (vel if mode == "velocity" else acc))
    saturated = (qn == pos[:, 0]) | (qn == pos[:, 1])
    moved_into_limit = saturated & (q + (applied if mode == "velocity" else np.clip(qdot + applied * 0.05, -vel, vel)) * 0.05 != qn)
    assert np.all(qdn[moved_into_limit] == 0.0)


def test_dimensions_constant(rng):
    pf = make_pf(obstacles=[{"position": [1.5, 1.5, 0.0], "radius": 0.2}])
    state, obs = reset(pf)
    for a in rng.uniform(-1, 1, (20, 2)):
        state, obs, status = step(state, a, pf)
        assert obs.q.shape == (2,) and obs.sphere_centers.shape == (1, 3) and obs.obstacle_positions.shape == (1, 3)
        if status.terminal:
            break
