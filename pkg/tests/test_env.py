"""Environment dynamics, rewards, and generated model parameters."""

import numpy as np
import pytest

from belieftree.env_dsprites import (
    DOWN,
    RIGHT,
    UP,
    DSpritesEnv,
    EnvConfig,
    gen_a,
    gen_b,
    gen_c,
    gen_d,
    goal_x_cell,
    make_model,
)
from belieftree.errors import (
    EpisodeFinished,
    EpisodeNotFinished,
    ValidationError,
)
from belieftree.model import next_axis
from belieftree.prediction import SliceBeliefs, p_step_states
from belieftree.tensors import one_hot


class TestConfig:
    def test_cardinalities_at_granularity_one(self):
        cfg = EnvConfig(granularity=1)
        assert cfg.n_x_cells == 32
        assert cfg.n_y_cells == 33
        # the full state space the model covers
        assert 33 * 32 * 3 * 40 * 6 == 760_320

    def test_rejects_bad_granularity(self):
        with pytest.raises(ValidationError):
            EnvConfig(granularity=3)

    @pytest.mark.parametrize("g,cells,shift", [(1, 32, 8), (2, 16, 4), (4, 8, 2), (8, 4, 1)])
    def test_cells_and_shift(self, g, cells, shift):
        cfg = EnvConfig(granularity=g)
        assert cfg.n_x_cells == cells
        assert cfg.absorbing_index == cells
        assert cfg.cell_shift == shift


class TestReset:
    def test_reproducible_with_fixed_seed(self):
        a = DSpritesEnv(EnvConfig(granularity=1, rng_seed=9)).reset()
        b = DSpritesEnv(EnvConfig(granularity=1, rng_seed=9)).reset()
        assert a == b

    def test_never_starts_absorbed(self):
        env = DSpritesEnv(EnvConfig(granularity=8, rng_seed=0))
        for _ in range(500):
            obs = env.reset()
            assert obs["O_pos_y"] != env.config.absorbing_index

    def test_covers_all_shapes(self):
        env = DSpritesEnv(EnvConfig(granularity=1, rng_seed=1))
        seen = {env.reset()["O_shape"] for _ in range(200)}
        assert seen == {0, 1, 2}

    def test_observation_map_matches_internal_cells(self):
        env = DSpritesEnv(EnvConfig(granularity=4, rng_seed=3))
        obs = env.reset()
        assert obs["O_pos_x"] == env.x_pixel // 4
        assert obs["O_pos_y"] == env.y_pixel // 4
        assert obs["O_shape"] == env.shape


class TestExecute:
    def _env_at(self, g, x_px, y_px, shape=0):
        env = DSpritesEnv(EnvConfig(granularity=g, rng_seed=0))
        env.reset()
        env.shape = shape
        env.x_pixel = x_px
        env.y_pixel = y_px
        return env

    def test_right_moves_one_coarse_cell_at_g8(self):
        env = self._env_at(8, 0, 0)
        obs = env.execute(RIGHT)
        assert obs["O_pos_x"] == 1

    def test_right_clamps_at_border(self):
        env = self._env_at(8, 31, 0)
        obs = env.execute(RIGHT)
        assert obs["O_pos_x"] == 3
        assert env.x_pixel == 31

    def test_down_from_bottom_area_absorbs_and_finishes(self):
        env = self._env_at(8, 0, 24)
        obs = env.execute(DOWN)
        assert env.absorbed and env.done
        assert obs["O_pos_y"] == env.config.absorbing_index

    def test_down_within_image_does_not_absorb(self):
        env = self._env_at(1, 0, 0)
        obs = env.execute(DOWN)
        assert not env.absorbed
        assert obs["O_pos_y"] == 8

    def test_up_clamps_at_top(self):
        env = self._env_at(1, 0, 3)
        obs = env.execute(UP)
        assert obs["O_pos_y"] == 0

    def test_execute_after_done_raises(self):
        env = self._env_at(8, 0, 24)
        env.execute(DOWN)
        with pytest.raises(EpisodeFinished):
            env.execute(DOWN)

    def test_timeout_sets_done(self):
        env = DSpritesEnv(EnvConfig(granularity=8, max_cycles=2, rng_seed=0))
        env.reset()
        env.y_pixel = 0
        env.execute(UP)
        assert not env.done
        env.execute(UP)
        assert env.done and not env.absorbed


class TestReward:
    def _finished_env(self, shape, x_px):
        env = DSpritesEnv(EnvConfig(granularity=8, rng_seed=0))
        env.reset()
        env.shape = shape
        env.x_pixel = x_px
        env.y_pixel = 31
        env.execute(DOWN)
        return env

    def test_square_at_left_corner_gets_plus_one(self):
        assert self._finished_env(0, 0).reward() == 1.0

    def test_square_at_antipode_gets_minus_one(self):
        assert self._finished_env(0, 31).reward() == -1.0

    def test_heart_at_right_corner_gets_plus_one(self):
        assert self._finished_env(2, 31).reward() == 1.0

    def test_linear_in_pixel_distance(self):
        assert self._finished_env(0, 8).reward() == pytest.approx(1 - 16 / 31)

    def test_timeout_reward_is_minus_one(self):
        env = DSpritesEnv(EnvConfig(granularity=8, max_cycles=1, rng_seed=0))
        env.reset()
        env.y_pixel = 0
        env.execute(UP)
        assert env.reward() == -1.0

    def test_reward_before_done_raises(self):
        env = DSpritesEnv(EnvConfig(granularity=8, rng_seed=0))
        env.reset()
        with pytest.raises(EpisodeNotFinished):
            env.reward()

    def test_reward_range(self):
        for shape in (0, 1, 2):
            for x in (0, 7, 15, 31):
                assert -1.0 <= self._finished_env(shape, x).reward() <= 1.0


class TestPSolved:
    def test_all_perfect(self):
        assert DSpritesEnv.p_solved(100.0, 100) == 1.0

    def test_all_failed(self):
        assert DSpritesEnv.p_solved(-100.0, 100) == 0.0

    def test_midpoint(self):
        assert DSpritesEnv.p_solved(0.0, 100) == 0.5


class TestGenerators:
    def test_gen_a_noisy_identity_shapes(self):
        a = gen_a(EnvConfig(granularity=8))
        assert a["O_pos_x"].values.shape == (4, 4)
        assert a["O_pos_y"].values.shape == (5, 5)
        assert a["O_orientation"].values.shape == (40, 40)
        # near-identity: heavy diagonal, strictly positive everywhere
        vals = a["O_pos_x"].values
        assert vals.min() > 0
        assert np.allclose(np.diag(vals), vals.max())
        np.testing.assert_allclose(vals.sum(axis=0), 1.0, atol=1e-12)

    def test_gen_b_shape_is_exact_identity_without_action(self):
        b = gen_b(EnvConfig(granularity=8))
        assert b["S_shape"].axes == (next_axis("S_shape"), "S_shape")
        np.testing.assert_array_equal(b["S_shape"].values, np.eye(3))

    def test_gen_b_absorbing_row_self_loop(self):
        cfg = EnvConfig(granularity=8)
        b_y = gen_b(cfg)["S_pos_y"]
        absorbing = cfg.absorbing_index
        for action in range(4):
            col = b_y.values[:, absorbing, action]
            assert col[absorbing] == 1.0 and col.sum() == 1.0

    def test_gen_c_peaks_at_goal_cell(self):
        cfg = EnvConfig(granularity=8)
        c = gen_c(cfg)["O_shape_pos_x_y"]
        vals = c.values
        assert vals.sum() == pytest.approx(1.0, abs=1e-9)
        for shape in range(3):
            idx = np.unravel_index(np.argmax(vals[shape]), vals[shape].shape)
            assert idx == (goal_x_cell(shape, cfg), cfg.absorbing_index)

    def test_gen_c_off_target_absorbing_is_least_preferred(self):
        cfg = EnvConfig(granularity=8)
        vals = gen_c(cfg)["O_shape_pos_x_y"].values
        absorbing = cfg.absorbing_index
        for shape in range(3):
            target = goal_x_cell(shape, cfg)
            off_target = [
                vals[shape, x, absorbing] for x in range(cfg.n_x_cells) if x != target
            ]
            image_min = vals[shape, :, :absorbing].min()
            assert max(off_target) < image_min

    def test_gen_d_uniform(self):
        d = gen_d(EnvConfig(granularity=2), uniform=True)
        np.testing.assert_allclose(d["S_pos_x"].probs, [1 / 16] * 16)
        np.testing.assert_allclose(d["S_pos_y"].probs, [1 / 17] * 17)

    def test_env_accessors_match_module_generators(self):
        cfg = EnvConfig(granularity=4, rng_seed=0)
        env = DSpritesEnv(cfg)
        np.testing.assert_array_equal(
            env.a()["O_shape"].values, gen_a(cfg)["O_shape"].values
        )
        np.testing.assert_array_equal(
            env.b()["S_pos_y"].values, gen_b(cfg)["S_pos_y"].values
        )

    def test_env_informative_priors_decode_state(self):
        cfg = EnvConfig(granularity=8, rng_seed=4)
        env = DSpritesEnv(cfg)
        env.reset()
        d = env.d(uniform=False)
        assert d["S_shape"].argmax() == env.shape
        assert d["S_pos_x"].argmax() == env.x_cell


class TestDynamicsModelAgreement:
    """One-hot propagation through the transitions equals env stepping."""

    def _check(self, model, cfg: EnvConfig, x_px: int, y_px: int, action: int) -> None:
        env = DSpritesEnv(cfg)
        env.reset()
        env.x_pixel, env.y_pixel = x_px, y_px
        before = SliceBeliefs(
            {
                "S_pos_x": one_hot("S_pos_x", cfg.n_x_cells, env.x_cell),
                "S_pos_y": one_hot("S_pos_y", cfg.n_y_cells, env.y_cell),
                "S_shape": one_hot("S_shape", 3, env.shape),
                "S_scale": one_hot("S_scale", 6, env.scale),
                "S_orientation": one_hot("S_orientation", 40, env.orientation),
            }
        )
        predicted = p_step_states(model, before, action)
        obs = env.execute(action)
        assert predicted["S_pos_x"].argmax() == obs["O_pos_x"]
        assert predicted["S_pos_y"].argmax() == obs["O_pos_y"]
        assert predicted["S_pos_x"].probs.max() == pytest.approx(1.0)
        assert predicted["S_pos_y"].probs.max() == pytest.approx(1.0)

    def test_exhaustive_at_granularity_eight(self):
        cfg = EnvConfig(granularity=8, rng_seed=0)
        model = make_model(cfg)
        for x_px in range(32):
            for y_px in range(32):
                for action in range(4):
                    self._check(model, cfg, x_px, y_px, action)

    def test_sampled_at_granularity_one(self):
        rng = np.random.default_rng(99)
        cfg = EnvConfig(granularity=1, rng_seed=0)
        model = make_model(cfg)
        for _ in range(1000):
            self._check(
                model,
                cfg,
                int(rng.integers(32)),
                int(rng.integers(32)),
                int(rng.integers(4)),
            )
