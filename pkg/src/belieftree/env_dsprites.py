"""Metadata-level dSprites environment and its model-parameter generators.

The underlying world is the dSprites metadata at full resolution: a shape
(square / ellipse / heart) with a scale, an orientation, and an (x, y)
pixel position on a 32x32 grid. The agent's chosen action is applied
``repeat`` times per cycle (eight by default), so positions change by
eight pixels per action-perception cycle. UP / LEFT / RIGHT clamp at the
image border; only DOWN can leave the image, into an absorbing row below
the bottom pixel row, which ends the episode.

What the agent *observes* is a coarse-grained version of the true
position: pixel coordinates pooled into cells of ``granularity`` pixels.
The y observation has one extra, maximal index for the absorbing row.
Indices grow downward (0 = top row), so the absorbing index is adjacent
to the bottom image row.

Rewards are granted on true pixel positions, not on the observed cells:
-1 for a timeout or for entering the absorbing row at the antipode of the
appropriate corner, rising linearly to +1 at the corner itself (bottom
LEFT pixel for squares, bottom RIGHT for ellipses and hearts). Residual
sub-cell offsets therefore cap the achievable score at coarse
granularities even for a perfect planner, which is exactly the ceiling
the benchmark measures.

The ``a`` / ``b`` / ``c`` / ``d`` generators build the matching model
parameters at observation (cell) resolution: noisy-identity likelihoods,
identity transitions for shape/scale/orientation, deterministic
clamped/absorbing shift tensors for the positions, and a joint preference
over (shape, x, y) peaking at the goal cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ActionOutOfRange,
    EpisodeFinished,
    EpisodeNotFinished,
    ValidationError,
)
from .model import TemporalSliceBuilder, TemporalSliceModel, next_axis
from .tensors import Categorical, NamedTensor, VarName
from .tensors import uniform as uniform_belief

IMAGE_SIZE = 32
N_SHAPES = 3
N_SCALES = 6
N_ORIENTATIONS = 40

SHAPE_SQUARE, SHAPE_ELLIPSE, SHAPE_HEART = 0, 1, 2

UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
ACTION_NAMES = ("UP", "DOWN", "LEFT", "RIGHT")
N_ACTIONS = 4

ACTION_VAR = "A_1"
S_SHAPE, S_SCALE, S_ORIENT = "S_shape", "S_scale", "S_orientation"
S_POS_X, S_POS_Y = "S_pos_x", "S_pos_y"
O_SHAPE, O_SCALE, O_ORIENT = "O_shape", "O_scale", "O_orientation"
O_POS_X, O_POS_Y = "O_pos_x", "O_pos_y"
PREFERENCE_KEY = "O_shape_pos_x_y"

# likelihood noise: keeps every observation possible so logarithms never
# see an exact zero, yet far too small to perturb argmax decoding
LIKELIHOOD_NOISE = 1e-3


@dataclass(frozen=True)
class EnvConfig:
    """Granularity of the observations and episode bookkeeping."""

    granularity: int = 1
    repeat: int = 8
    max_cycles: int = 50
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.granularity not in (1, 2, 4, 8):
            raise ValidationError("granularity must be one of 1, 2, 4, 8")
        if IMAGE_SIZE % self.granularity != 0:
            raise ValidationError("granularity must divide the image size")
        if self.repeat % self.granularity != 0:
            raise ValidationError(
                "repeat must be a multiple of granularity so cell dynamics "
                "stay deterministic"
            )
        if self.repeat < 1 or self.max_cycles < 1:
            raise ValidationError("repeat and max_cycles must be positive")

    @property
    def n_x_cells(self) -> int:
        return IMAGE_SIZE // self.granularity

    @property
    def n_y_cells(self) -> int:
        """Image rows plus the absorbing row (the maximal index)."""
        return IMAGE_SIZE // self.granularity + 1

    @property
    def absorbing_index(self) -> int:
        return IMAGE_SIZE // self.granularity

    @property
    def cell_shift(self) -> int:
        """Cells moved per action-perception cycle."""
        return self.repeat // self.granularity


@dataclass(frozen=True)
class EnvState:
    """Observable snapshot of the environment at cell resolution."""

    shape: int
    scale: int
    orientation: int
    x_cell: int
    y_cell: int
    done: bool
    cycles_elapsed: int


class DSpritesEnv:
    """One environment instance with its own seeded RNG."""

    def __init__(self, config: EnvConfig):
        self.config = config
        self._rng = np.random.default_rng(config.rng_seed)
        self.shape = 0
        self.scale = 0
        self.orientation = 0
        self.x_pixel = 0
        self.y_pixel = 0
        self.absorbed = False
        self.cycles_elapsed = 0
        self._started = False
        self._done = False

    # -- observation plumbing ------------------------------------------------

    @property
    def done(self) -> bool:
        return self._done

    @property
    def n_actions(self) -> int:
        return N_ACTIONS

    @property
    def x_cell(self) -> int:
        return self.x_pixel // self.config.granularity

    @property
    def y_cell(self) -> int:
        if self.absorbed:
            return self.config.absorbing_index
        return self.y_pixel // self.config.granularity

    @property
    def state(self) -> EnvState:
        return EnvState(
            shape=self.shape,
            scale=self.scale,
            orientation=self.orientation,
            x_cell=self.x_cell,
            y_cell=self.y_cell,
            done=self._done,
            cycles_elapsed=self.cycles_elapsed,
        )

    def observations(self) -> dict[VarName, int]:
        """Current observation map keyed by the model's variable names."""
        return {
            O_SHAPE: self.shape,
            O_SCALE: self.scale,
            O_ORIENT: self.orientation,
            O_POS_X: self.x_cell,
            O_POS_Y: self.y_cell,
        }

    # -- episode dynamics ------------------------------------------------------

    def reset(self) -> dict[VarName, int]:
        """Sample a fresh sprite uniformly; never starts in the absorbing row."""
        self.shape = int(self._rng.integers(N_SHAPES))
        self.scale = int(self._rng.integers(N_SCALES))
        self.orientation = int(self._rng.integers(N_ORIENTATIONS))
        self.x_pixel = int(self._rng.integers(IMAGE_SIZE))
        self.y_pixel = int(self._rng.integers(IMAGE_SIZE))
        self.absorbed = False
        self.cycles_elapsed = 0
        self._started = True
        self._done = False
        return self.observations()

    def execute(self, action: int) -> dict[VarName, int]:
        """Apply one action for a full cycle (``repeat`` pixel steps)."""
        if not self._started:
            raise EpisodeFinished("execute() before reset()")
        if self._done:
            raise EpisodeFinished("episode already finished")
        if not 0 <= action < N_ACTIONS:
            raise ActionOutOfRange(f"illegal action {action}")
        step = self.config.repeat
        if action == UP:
            self.y_pixel = max(self.y_pixel - step, 0)
        elif action == DOWN:
            new_y = self.y_pixel + step
            if new_y > IMAGE_SIZE - 1:
                self.absorbed = True
            else:
                self.y_pixel = new_y
        elif action == LEFT:
            self.x_pixel = max(self.x_pixel - step, 0)
        elif action == RIGHT:
            self.x_pixel = min(self.x_pixel + step, IMAGE_SIZE - 1)
        self.cycles_elapsed += 1
        if self.absorbed or self.cycles_elapsed >= self.config.max_cycles:
            self._done = True
        return self.observations()

    def reward(self) -> float:
        """Final reward: -1 on timeout, else linear in pixel distance."""
        if not self._done:
            raise EpisodeNotFinished("reward() before the episode ended")
        if not self.absorbed:
            return -1.0
        target = 0 if self.shape == SHAPE_SQUARE else IMAGE_SIZE - 1
        return 1.0 - 2.0 * abs(self.x_pixel - target) / (IMAGE_SIZE - 1)

    # -- evaluation metric -------------------------------------------------------

    @staticmethod
    def p_solved(total_rewards: float, n_runs: int) -> float:
        """Share of the task solved: (rewards + runs) / (2 * runs)."""
        if n_runs < 1:
            raise ValidationError("n_runs must be >= 1")
        return (total_rewards + n_runs) / (2.0 * n_runs)

    # -- model parameter shorthands ------------------------------------------------

    def a(self) -> dict[VarName, NamedTensor]:
        return gen_a(self.config)

    def b(self) -> dict[VarName, NamedTensor]:
        return gen_b(self.config)

    def c(self, precision: float = 1.0) -> dict[VarName, NamedTensor]:
        return gen_c(self.config, precision)

    def d(self, uniform: bool = True) -> dict[VarName, Categorical]:
        if uniform:
            return gen_d(self.config, uniform=True)
        return {
            S_SHAPE: _delta(S_SHAPE, N_SHAPES, self.shape),
            S_SCALE: _delta(S_SCALE, N_SCALES, self.scale),
            S_ORIENT: _delta(S_ORIENT, N_ORIENTATIONS, self.orientation),
            S_POS_X: _delta(S_POS_X, self.config.n_x_cells, self.x_cell),
            S_POS_Y: _delta(S_POS_Y, self.config.n_y_cells, self.y_cell),
        }


def _delta(var: VarName, cardinality: int, index: int) -> Categorical:
    probs = np.zeros(cardinality)
    probs[index] = 1.0
    return Categorical(var, probs)


def _noisy_identity(n: int) -> np.ndarray:
    return (1.0 - LIKELIHOOD_NOISE) * np.eye(n) + LIKELIHOOD_NOISE / n


def gen_a(config: EnvConfig) -> dict[VarName, NamedTensor]:
    """Noisy-identity likelihood for each modality (obs axis first)."""
    cards = {
        O_SHAPE: (S_SHAPE, N_SHAPES),
        O_SCALE: (S_SCALE, N_SCALES),
        O_ORIENT: (S_ORIENT, N_ORIENTATIONS),
        O_POS_X: (S_POS_X, config.n_x_cells),
        O_POS_Y: (S_POS_Y, config.n_y_cells),
    }
    return {
        obs: NamedTensor((obs, state), _noisy_identity(n))
        for obs, (state, n) in cards.items()
    }


def gen_b(config: EnvConfig) -> dict[VarName, NamedTensor]:
    """Transition tensors matching the cycle dynamics at cell resolution.

    Shape, scale and orientation forward their value unchanged (exact
    identity, no action axis). The positions shift by ``cell_shift`` cells
    under LEFT/RIGHT (x) and UP/DOWN (y), clamped at the image border
    except for DOWN past the bottom row, which lands in the absorbing
    index; the absorbing row maps to itself under every action.
    """
    x_cells = config.n_x_cells
    y_cells = config.n_y_cells
    absorbing = config.absorbing_index
    shift = config.cell_shift

    b_x = np.zeros((x_cells, x_cells, N_ACTIONS))
    for x in range(x_cells):
        for action in range(N_ACTIONS):
            if action == LEFT:
                nx = max(x - shift, 0)
            elif action == RIGHT:
                nx = min(x + shift, x_cells - 1)
            else:
                nx = x
            b_x[nx, x, action] = 1.0

    b_y = np.zeros((y_cells, y_cells, N_ACTIONS))
    for y in range(y_cells):
        for action in range(N_ACTIONS):
            if y == absorbing:
                ny = absorbing
            elif action == UP:
                ny = max(y - shift, 0)
            elif action == DOWN:
                ny = y + shift if y + shift <= absorbing - 1 else absorbing
            else:
                ny = y
            b_y[ny, y, action] = 1.0

    return {
        S_SHAPE: NamedTensor((next_axis(S_SHAPE), S_SHAPE), np.eye(N_SHAPES)),
        S_SCALE: NamedTensor((next_axis(S_SCALE), S_SCALE), np.eye(N_SCALES)),
        S_ORIENT: NamedTensor(
            (next_axis(S_ORIENT), S_ORIENT), np.eye(N_ORIENTATIONS)
        ),
        S_POS_X: NamedTensor((next_axis(S_POS_X), S_POS_X, ACTION_VAR), b_x),
        S_POS_Y: NamedTensor((next_axis(S_POS_Y), S_POS_Y, ACTION_VAR), b_y),
    }


def goal_x_cell(shape: int, config: EnvConfig) -> int:
    """Target x cell: leftmost for squares, rightmost otherwise."""
    return 0 if shape == SHAPE_SQUARE else config.n_x_cells - 1


def gen_c(config: EnvConfig, precision: float = 1.0) -> dict[VarName, NamedTensor]:
    """Joint preference over (shape, x, y) peaking at the goal cell.

    Log-preference is -precision times a distance to the goal. Image rows
    carry the dense gradient |x - x_target(shape)| + (rows above the
    bottom row + 1) that steers a small search budget. The goal cell
    (x_target in the absorbing row) has distance zero; every *other*
    absorbing cell is an undesirable terminal and carries an extra
    penalty larger than any image-row distance, so the planner never
    deems entering the absorbing row off-target acceptable. (Because an
    episode ends there, a factored transition model would otherwise
    believe it could keep moving in x after being absorbed and happily
    drop in early.)
    """
    x_cells = config.n_x_cells
    y_cells = config.n_y_cells
    absorbing = config.absorbing_index
    off_target_penalty = x_cells + y_cells + 2
    log_v = np.empty((N_SHAPES, x_cells, y_cells))
    for shape in range(N_SHAPES):
        target = goal_x_cell(shape, config)
        for x in range(x_cells):
            for y in range(y_cells):
                if y == absorbing:
                    dist = 0 if x == target else abs(x - target) + off_target_penalty
                else:
                    dist = abs(x - target) + (absorbing - y)
                log_v[shape, x, y] = -precision * dist
    v = np.exp(log_v)
    v /= v.sum()
    return {PREFERENCE_KEY: NamedTensor((O_SHAPE, O_POS_X, O_POS_Y), v)}


def gen_d(config: EnvConfig, uniform: bool = True) -> dict[VarName, Categorical]:
    """Priors over the states; uniform unless requested otherwise."""
    if not uniform:
        raise ValidationError(
            "informative priors require a live environment; use env.d(uniform=False)"
        )
    return {
        S_SHAPE: uniform_belief(S_SHAPE, N_SHAPES),
        S_SCALE: uniform_belief(S_SCALE, N_SCALES),
        S_ORIENT: uniform_belief(S_ORIENT, N_ORIENTATIONS),
        S_POS_X: uniform_belief(S_POS_X, config.n_x_cells),
        S_POS_Y: uniform_belief(S_POS_Y, config.n_y_cells),
    }


def make_model(
    config: EnvConfig, preference_precision: float = 1.0
) -> TemporalSliceModel:
    """Assemble the full five-modality slice model for this environment."""
    a = gen_a(config)
    b = gen_b(config)
    c = gen_c(config, preference_precision)
    d = gen_d(config, uniform=True)

    builder = TemporalSliceBuilder(ACTION_VAR, N_ACTIONS)
    builder.add_state(S_POS_X, d[S_POS_X]) \
        .add_state(S_POS_Y, d[S_POS_Y]) \
        .add_state(S_SHAPE, d[S_SHAPE]) \
        .add_state(S_SCALE, d[S_SCALE]) \
        .add_state(S_ORIENT, d[S_ORIENT])
    builder.add_observation(O_POS_X, a[O_POS_X], [S_POS_X]) \
        .add_observation(O_POS_Y, a[O_POS_Y], [S_POS_Y]) \
        .add_observation(O_SHAPE, a[O_SHAPE], [S_SHAPE]) \
        .add_observation(O_SCALE, a[O_SCALE], [S_SCALE]) \
        .add_observation(O_ORIENT, a[O_ORIENT], [S_ORIENT])
    builder.add_transition(S_POS_X, b[S_POS_X], [S_POS_X, ACTION_VAR]) \
        .add_transition(S_POS_Y, b[S_POS_Y], [S_POS_Y, ACTION_VAR]) \
        .add_transition(S_SHAPE, b[S_SHAPE], [S_SHAPE]) \
        .add_transition(S_SCALE, b[S_SCALE], [S_SCALE]) \
        .add_transition(S_ORIENT, b[S_ORIENT], [S_ORIENT])
    builder.add_preference([O_POS_X, O_POS_Y, O_SHAPE], c[PREFERENCE_KEY])
    return builder.build()
