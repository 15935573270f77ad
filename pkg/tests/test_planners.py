import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_pf
from planbench.errors import CollisionStateError, ConfigValidationError, RegistryError
from planbench.planners import (
    AbstractPlanner,
    PDPlanner,
    PFParams,
    PlannerConfig,
    PotentialFieldPlanner,
    RandomShootingPlanner,
    RSParams,
    make_planner,
    parse_planner_config,
    planner_registry,
    registered_planners,
    serialize_planner_config,
)
from planbench.kinematics import link_position, planar_arm_chain, sphere_centers
from planbench.planners.potential_field import ControlPoints, forces, pf_potential, potential
from planbench.problem import GoalComposition, SubGoal
from planbench.planners.random_shooting import sequence_costs
from planbench.records import MemorySink
from planbench.runner import run_trial
from planbench.sim import Observation, Status, observe, reset, step


def goal_at(x, y):
    return [{"link": "mass", "desired_position": [x, y, 0.0], "epsilon": 0.05, "dims": [0, 1]}]


def obs_for(pf, q=None, qdot=None):
    state, obs = reset(pf)
    if q is not None or qdot is not None:
        state = dataclasses.replace(
            state,
            q=np.array(q if q is not None else pf.q0, dtype=float),
            qdot=np.array(qdot if qdot is not None else pf.qdot0, dtype=float),
        )
        obs = observe(state, pf)
    return obs


def planner(name, pf, seed=0, **params):
    return make_planner(name, PlannerConfig(name, seed, params), pf)


class TestRegistry:
    def test_builtins(self):
        assert {"pd", "potential_field", "random_shooting"} <= set(registered_planners())
        assert isinstance(planner_registry("potential_field", PlannerConfig("potential_field"), make_pf()),
                          PotentialFieldPlanner)

    def test_unknown(self):
        with pytest.raises(RegistryError) as exc:
            make_planner("no_such", PlannerConfig("no_such"), make_pf())
        assert "potential_field" in str(exc.value)

    def test_duplicate(self):
        with pytest.raises(RegistryError):
            class Clash(AbstractPlanner):
                name = "pd"

                def compute_action(self, obs):
                    return np.zeros(2)

    def test_user_planner_registers_itself(self):
        class Hold(AbstractPlanner):
            name = "test_hold"

            def compute_action(self, obs):
                return np.zeros(self.pf.n)

        p = make_planner("test_hold", PlannerConfig("test_hold"), make_pf())
        assert isinstance(p, Hold)
        np.testing.assert_array_equal(p.compute_action(obs_for(make_pf())), (0, 0))


class TestConfig:
    def test_round_trip(self, configs):
        for f in ("pd.yaml", "pf.yaml", "rs.yaml"):
            cfg = parse_planner_config((configs / f).read_text())
            assert parse_planner_config(serialize_planner_config(cfg)) == cfg

    def test_param_blocks(self, configs):
        assert parse_planner_config((configs / "pd.yaml").read_text()).params == {"kp": 1.0, "kd": 0.0}
        assert parse_planner_config("name: pd\npd: {kp: 2.0}\n").params == {"kp": 2.0}

    @pytest.mark.parametrize("text, path", [
        ("name: potential_field\npf_params: {d0: 0}\n", "pf_params.d0"),
        ("name: potential_field\npf_params: {k_rep: -1}\n", "pf_params.k_rep"),
        ("name: random_shooting\nrs_params: {horizon: 0}\n", "rs_params.horizon"),
        ("name: random_shooting\nrs_params: {wobble: 1}\n", "rs_params.wobble"),
        ("name: pd\nextra: 1\n", "extra"),
        ("seed: 3\n", "name"),
        ("name: pd\nseed: 1.5\n", "seed"),
    ])
    def test_validation(self, text, path):
        with pytest.raises(ConfigValidationError) as exc:
            parse_planner_config(text)
        assert exc.value.path == path


class TestPD:
    def test_zero_at_goal(self):
        pf = make_pf(q0=[3.0, 0.0])
        np.testing.assert_array_equal(planner("pd", pf).compute_action(obs_for(pf)), (0, 0))

    def test_proportional(self):
        pf = make_pf(q0=[1.0, 0.0], goal=goal_at(0, 0))
        np.testing.assert_allclose(planner("pd", pf, kp=1.0, kd=0.0).compute_action(obs_for(pf)), (-1, 0))

    def test_damping(self):
        pf = make_pf(q0=[1.0, 0.0], goal=goal_at(0, 0), control_mode="acceleration")
        a = planner("pd", pf, kp=1.0, kd=0.5).compute_action(obs_for(pf, qdot=[0.4, 0.2]))
        np.testing.assert_allclose(a, (-1.2, -0.1))

    def test_collides_with_blocking_obstacle(self):
        pf = make_pf(q0=[0.0, 0.0], goal=goal_at(3.0, 0.0), obstacles=[{"position": [1.5, 0.0, 0.0], "radius": 0.4}])
        result = run_trial(pf, planner("pd", pf), 0, MemorySink())
        assert result.status is Status.COLLISION


class TestPotentialField:
    def test_potential_values(self):
        pf = make_pf(q0=[3.0, 0.0])
        assert pf_potential(obs_for(pf), pf, PFParams()) == 0.0
        pf = make_pf(q0=[1.0, 0.0], goal=goal_at(0, 0))
        assert pf_potential(obs_for(pf), pf, PFParams(k_att=1.0)) == 0.5

    def test_repulsive_term(self):
        # sphere r=0.1 at origin, obstacle r=0.4 at distance 1.5 => d = 1
        pf = make_pf(q0=[0.0, 0.0], goal=goal_at(0, 0), obstacles=[{"position": [0.0, 1.5, 0.0], "radius": 0.4}])
        u = pf_potential(obs_for(pf), pf, PFParams(k_att=1.0, k_rep=0.5, d0=2.0))
        assert u == pytest.approx(0.5 * 0.5 * (1 - 0.5) ** 2, abs=1e-15)

    def test_pure_attraction(self):
        pf = make_pf(q0=[1.0, 0.0], goal=goal_at(0, 0))
        np.testing.assert_allclose(planner("potential_field", pf).compute_action(obs_for(pf)), (-1, 0))

    def test_symmetry(self):
        pf = make_pf(q0=[1.5, 0.0], goal=goal_at(4.0, 0.0), obstacles=[{"position": [0.0, 0.0, 0.0], "radius": 0.5}])
        a = planner("potential_field", pf).compute_action(obs_for(pf))
        assert a[1] == 0.0 and a[0] > 0

    def test_collision_state(self):
        pf = make_pf(obstacles=[{"position": [2.0, 0.0, 0.0], "radius": 0.5}])
        with pytest.raises(CollisionStateError):
            planner("potential_field", pf).compute_action(obs_for(pf, q=[1.9, 0.0]))

    def test_locality(self, rng):
        for _ in range(20):
            far = rng.uniform(2.0, 4.0) * np.array([np.cos(a := rng.uniform(0, 6.28)), np.sin(a), 0.0])
            pf = make_pf(q0=[0.0, 0.0], goal=goal_at(*rng.uniform(-1, 1, 2)),
                         obstacles=[{"position": list(far), "radius": 0.3}])
            bare = dataclasses.replace(pf, obstacles=())
            p = planner("potential_field", pf, d0=1.0)
            np.testing.assert_array_equal(p.compute_action(obs_for(pf)),
                                          planner("potential_field", bare, d0=1.0).compute_action(obs_for(bare)))

    def test_force_cap(self):
        pf = make_pf(q0=[0.0, 0.0], goal=goal_at(4.5, 4.5))
        a = planner("potential_field", pf, k_att=10.0, f_max=0.5).compute_action(obs_for(pf))
        assert np.linalg.norm(a) == pytest.approx(0.5)

    def test_converges_without_obstacles(self, rng):
        k_att, dt = 1.0, 0.1
        for goal in rng.uniform(-4, 4, (100, 2)):
            pf = make_pf(goal=goal_at(*goal), dt=dt, max_steps=int(10 / (k_att * dt)))
            result = run_trial(pf, planner("potential_field", pf, k_att=k_att, f_max=100.0), 0, MemorySink())
            assert result.status is Status.GOAL_REACHED


def numerical_forces(cp, params, h=1e-6):
    def u_at(**kw):
        return potential(dataclasses.replace(cp, **kw), params)

    f_att = np.zeros(3)
    for i in range(3):
        d = np.zeros(3)
        d[i] = h
        f_att[i] = -(u_at(attraction=cp.attraction + d) - u_at(attraction=cp.attraction - d)) / (2 * h)
    f_rep = np.zeros_like(cp.centers)
    for s in range(len(cp.centers)):
        for i in range(3):
            plus, minus = cp.centers.copy(), cp.centers.copy()
            plus[s, i] += h
            minus[s, i] -= h
            f_rep[s, i] = -(u_at(centers=plus) - u_at(centers=minus)) / (2 * h)
    return f_att, f_rep


def random_scene(rng):
    """A non-colliding planar-arm observation with obstacles near the arm."""
    chain = planar_arm_chain([1.0, 1.0], 0.1)
    while True:
        n_obs = int(rng.integers(1, 4))
        q = rng.uniform(-np.pi, np.pi, 2)
        centers = sphere_centers(chain, q)
        pos = rng.uniform(-2.5, 2.5, (n_obs, 3)) * (1, 1, 0.2)
        rad = rng.uniform(0.1, 0.4, n_obs)
        d = np.linalg.norm(centers[:, None] - pos[None], axis=-1) - (0.1 + rad[None])
        if d.min() > 0.05:
            desired = tuple(rng.uniform(-1.5, 1.5, 2)) + (0.0,)
            goal = GoalComposition((SubGoal("tip", desired, 0.05, 1.0, (0, 1), True),))
            obs = Observation(q, np.zeros(2), centers, chain.sphere_radii, pos, np.zeros_like(pos), rad, goal, 0.0)
            return chain, obs


def test_gradient_consistency(rng):
    for _ in range(100):
        chain, obs = random_scene(rng)
        goal = obs.goal.primary
        cp = ControlPoints(link_position(chain, obs.q, "tip"), np.array(goal.desired_position), goal.dims,
                           obs.sphere_centers, obs.sphere_radii, obs.obstacle_positions, obs.obstacle_radii)
        params = PFParams(k_att=float(rng.uniform(0.5, 2)), k_rep=float(rng.uniform(0.1, 1)),
                          d0=float(rng.uniform(0.5, 1.5)))
        f_att, f_rep = forces(cp, params)
        n_att, n_rep = numerical_forces(cp, params)
        np.testing.assert_allclose(f_att, n_att, atol=1e-5)
        np.testing.assert_allclose(f_rep, n_rep, atol=1e-5)


class TestRandomShooting:
    def test_zero_sigma(self):
        pf = make_pf()
        a = planner("random_shooting", pf, sigma=0.0).compute_action(obs_for(pf))
        np.testing.assert_array_equal(a, (0, 0))

    def test_single_sample(self):
        pf = make_pf()
        p = planner("random_shooting", pf, samples=1, seed=4)
        twin = planner("random_shooting", pf, samples=1, seed=4)
        U = twin.sample()
        np.testing.assert_array_equal(p.compute_action(obs_for(pf)), U[0, 0])

    def test_fresh_planner_determinism(self):
        pf = make_pf(obstacles=[{"position": [1.5, 0.2, 0.0], "radius": 0.3}])
        obs = obs_for(pf)
        actions = [planner("random_shooting", pf, seed=17).compute_action(obs) for _ in range(3)]
        np.testing.assert_array_equal(actions[0], actions[1])
        np.testing.assert_array_equal(actions[0], actions[2])

    def test_warm_start_shift(self):
        pf = make_pf()
        p = planner("random_shooting", pf, sigma=0.0, horizon=4)
        p.mean = np.arange(8, dtype=float).reshape(4, 2) * 0.1
        p.compute_action(obs_for(pf))
        np.testing.assert_allclose(p.mean, [[0.2, 0.3], [0.4, 0.5], [0.6, 0.7], [0.0, 0.0]])

    def test_argmin_scale_invariance(self, rng):
        pf = make_pf(obstacles=[{"position": [1.0, 0.3, 0.0], "radius": 0.3}])
        obs = obs_for(pf)
        U = np.clip(rng.normal(0, 1, (64, 10, 2)), -2, 2)
        base = RSParams(horizon=10, samples=64)
        costs = sequence_costs(U, obs, pf, base)
        for c in (0.001, 3.0, 1e4):
            scaled = dataclasses.replace(base, w_goal=c * base.w_goal, w_action=c * base.w_action,
                                         collision_penalty=c * base.collision_penalty)
            assert int(np.argmin(sequence_costs(U, obs, pf, scaled))) == int(np.argmin(costs))

    def test_costs_match_simulator_rollout(self, rng):
        pf = make_pf(obstacles=[{"position": [1.0, 0.4, 0.0], "radius": 0.3, "velocity": [0.0, -0.5, 0.0]}])
        obs = obs_for(pf)
        params = RSParams(horizon=8, samples=5)
        U = np.clip(rng.normal(0, 1.5, (5, 8, 2)), -2, 2)
        costs = sequence_costs(U, obs, pf, params)
        for k in range(5):
            state, o = reset(pf)
            hit = False
            for t in range(8):
                state = dataclasses.replace(state, status=Status.RUNNING)
                state, o, _ = step(state, U[k, t], pf)
                hit |= (np.linalg.norm(state.q - np.array(o.obstacle_positions[0, :2])) - 0.4) < params.collision_margin
            dist = np.linalg.norm(state.q - np.array([3.0, 0.0]))
            expected = dist + params.w_action * np.sum(U[k] ** 2) * pf.dt + params.collision_penalty * hit
            assert costs[k] == pytest.approx(expected, abs=1e-9)

    def test_tie_breaks_to_first(self):
        pf = make_pf()
        U = np.zeros((3, 5, 2))
        costs = sequence_costs(U, obs_for(pf), pf, RSParams(horizon=5, samples=3))
        assert costs[0] == costs[1] == costs[2]
        assert int(np.argmin(costs)) == 0


@given(st.sampled_from(["pd", "potential_field", "random_shooting"]), st.integers(0, 2**32),
       st.floats(-4.0, 4.0), st.floats(-4.0, 4.0), st.sampled_from(["velocity", "acceleration"]))
def test_actions_valid_and_deterministic(name, seed, x, y, mode):
    pf = make_pf(q0=[x, y], control_mode=mode, goal=goal_at(-x, 1.0))
    obs = obs_for(pf, qdot=[0.3, -0.3])
    a1 = planner(name, pf, seed=seed).compute_action(obs)
    a2 = planner(name, pf, seed=seed).compute_action(obs)
    np.testing.assert_array_equal(a1, a2)
    assert np.all(np.isfinite(a1))
    assert np.all(np.abs(a1) <= pf.action_limits)
