"""Action-perception cycle: reset, step, update, empirical priors."""

import numpy as np
import pytest

from belieftree.agent import Agent
from belieftree.env_dsprites import DSpritesEnv, EnvConfig, make_model
from belieftree.errors import ChildNotExpanded
from belieftree.inference import i_step
from belieftree.model import TemporalSliceBuilder, next_axis
from belieftree.planner import PlannerConfig
from belieftree.prediction import p_step
from belieftree.tensors import NamedTensor


def exact_identity_model(n=3):
    b = TemporalSliceBuilder("A_1", 2)
    b.add_state("S_x", [1 / n] * n)
    b.add_transition("S_x", NamedTensor((next_axis("S_x"), "S_x"), np.eye(n)), ["S_x"])
    b.add_observation("O_x", NamedTensor(("O_x", "S_x"), np.eye(n)), ["S_x"])
    return b.build()


@pytest.fixture()
def dsprites_setup():
    config = EnvConfig(granularity=8, rng_seed=11)
    env = DSpritesEnv(config)
    model = make_model(config)
    agent = Agent(model, PlannerConfig(planning_iterations=20))
    return env, agent


class TestReset:
    def test_identity_model_posterior_is_one_hot(self):
        model = exact_identity_model(3)
        agent = Agent(model, PlannerConfig(planning_iterations=1))
        agent.reset({"O_x": 1})
        np.testing.assert_allclose(agent.current_posteriors["S_x"].probs, [0, 1, 0])
        assert agent.root.visits == 1
        assert agent.root.multi_index == ()

    def test_dsprites_posteriors_decode_observations(self, dsprites_setup):
        env, agent = dsprites_setup
        obs = env.reset()
        agent.reset(obs)
        for obs_name, state_name in {
            "O_shape": "S_shape",
            "O_scale": "S_scale",
            "O_orientation": "S_orientation",
            "O_pos_x": "S_pos_x",
            "O_pos_y": "S_pos_y",
        }.items():
            posterior = agent.current_posteriors[state_name]
            assert posterior.argmax() == obs[obs_name]
            assert posterior.probs[obs[obs_name]] > 0.99

    def test_reset_is_idempotent(self):
        model = exact_identity_model(3)
        agent = Agent(model, PlannerConfig(planning_iterations=1))
        agent.reset({"O_x": 2})
        first = {k: v.probs.copy() for k, v in agent.current_posteriors.items()}
        agent.reset({"O_x": 2})
        for k, v in agent.current_posteriors.items():
            np.testing.assert_array_equal(v.probs, first[k])


class TestStep:
    def test_returns_legal_action(self, dsprites_setup):
        env, agent = dsprites_setup
        agent.reset(env.reset())
        action = agent.step()
        assert 0 <= action < 4
        assert agent.root.visits == 21  # budget + 1

    def test_iteration_log_length_matches_budget(self, dsprites_setup):
        env, agent = dsprites_setup
        agent.reset(env.reset())
        agent.step()
        assert len(agent.iteration_log) == 20

    def test_deterministic_under_fixed_inputs(self):
        config = EnvConfig(granularity=8, rng_seed=5)
        model = make_model(config)
        actions = []
        for _ in range(2):
            env = DSpritesEnv(EnvConfig(granularity=8, rng_seed=5))
            agent = Agent(model, PlannerConfig(planning_iterations=15))
            agent.reset(env.reset())
            actions.append(agent.step())
        assert actions[0] == actions[1]


class TestUpdate:
    def test_empirical_prior_is_chosen_childs_prediction(self, dsprites_setup):
        env, agent = dsprites_setup
        agent.reset(env.reset())
        action = agent.step()
        pre_root = agent.root
        expected_prior = p_step(agent.model, pre_root.beliefs, action).state_beliefs
        obs = env.execute(action)
        agent.update(action, obs)
        for name, belief in expected_prior.items():
            np.testing.assert_allclose(
                agent.current_priors[name].probs, belief.probs, atol=1e-12
            )
        assert agent.root is not pre_root
        assert agent.root.multi_index == ()

    def test_posterior_equals_istep_of_empirical_prior(self, dsprites_setup):
        env, agent = dsprites_setup
        agent.reset(env.reset())
        action = agent.step()
        obs = env.execute(action)
        agent.update(action, obs)
        redo = i_step(agent.model, agent.current_priors, obs)
        for name, belief in redo.items():
            np.testing.assert_allclose(
                agent.current_posteriors[name].probs, belief.probs, atol=1e-12
            )

    def test_update_without_expansion_raises(self):
        model = exact_identity_model()
        agent = Agent(model, PlannerConfig(planning_iterations=0))
        agent.reset({"O_x": 0})
        with pytest.raises(ChildNotExpanded):
            agent.update(0, {"O_x": 0})

    def test_zero_budget_step_raises_at_action_selection(self):
        from belieftree.errors import NotExpanded

        model = exact_identity_model()
        agent = Agent(model, PlannerConfig(planning_iterations=0))
        agent.reset({"O_x": 0})
        with pytest.raises(NotExpanded):
            agent.step()


class TestListeners:
    def test_events_fire_in_order(self, dsprites_setup):
        env, agent = dsprites_setup
        events = []
        agent.add_listener(lambda name, payload: events.append(name))
        agent.reset(env.reset())
        action = agent.step()
        agent.update(action, env.execute(action))
        assert events[0] == "reset"
        assert events[-1] == "update"
        assert "step" in events


class TestFullEpisode:
    def test_identity_likelihoods_track_observations_all_episode(self):
        config = EnvConfig(granularity=8, rng_seed=2)
        env = DSpritesEnv(config)
        agent = Agent(make_model(config), PlannerConfig(planning_iterations=10))
        obs = env.reset()
        agent.reset(obs)
        steps = 0
        while not env.done and steps < 10:
            action = agent.step()
            obs = env.execute(action)
            agent.update(action, obs)
            assert agent.current_posteriors["S_pos_x"].argmax() == obs["O_pos_x"]
            assert agent.current_posteriors["S_pos_y"].argmax() == obs["O_pos_y"]
            steps += 1
