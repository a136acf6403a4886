"""Named-axis dense tensors and categorical-distribution primitives.

Everything downstream (model CPTs, belief-propagation messages, predicted
beliefs, preference tables) is carried by two value types defined here:

* :class:`NamedTensor`: a dense nonnegative array whose axes are labelled
  by variable names, so contractions can be requested by name instead of
  by position.
* :class:`Categorical`: a single-variable probability vector.

Both are immutable after construction and safe to share across threads.
Cardinalities in this package are small (at most 40 per axis), so storage
is always dense.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, ShapeMismatch, UnknownAxis, ZeroMass

# Floor applied to log arguments. Likelihoods are kept noisy upstream so a
# true zero never reaches a logarithm in the benchmark; this is a second
# safety net.
LOG_FLOOR = 1e-32

# |sum - 1| tolerance for a vector to count as a probability distribution.
PROB_TOL = 1e-9

# Per-parent-configuration normalization tolerance for CPT slices.
CPT_TOL = 1e-6

VarName = str

STATE_PREFIX = "S_"
OBS_PREFIX = "O_"
ACTION_PREFIX = "A_"


def is_state_name(name: VarName) -> bool:
    return name.startswith(STATE_PREFIX)


def is_obs_name(name: VarName) -> bool:
    return name.startswith(OBS_PREFIX)


def is_action_name(name: VarName) -> bool:
    return name.startswith(ACTION_PREFIX)


@dataclass(frozen=True)
class NamedTensor:
    """Dense nonnegative array with axes labelled by variable names.

    ``axes`` is the ordered tuple of axis names; cardinalities are carried
    by ``values.shape``. Axis names must be unique within one tensor, all
    entries must be finite and >= 0, and lookup by a full name->index
    assignment is total.
    """

    axes: tuple[VarName, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "axes", tuple(self.axes))
        if len(self.axes) != vals.ndim:
            raise ShapeMismatch(
                f"{len(self.axes)} axis names for array of rank {vals.ndim}"
            )
        if len(set(self.axes)) != len(self.axes):
            raise ShapeMismatch(f"duplicate axis names in {self.axes}")
        if not np.all(np.isfinite(vals)):
            raise ShapeMismatch("tensor values must be finite")
        if vals.size and vals.min() < 0:
            raise ShapeMismatch("tensor values must be nonnegative")

    @classmethod
    def _unsafe(cls, axes: tuple[VarName, ...], values: np.ndarray) -> "NamedTensor":
        """Internal constructor skipping validation for trusted arrays."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "axes", axes)
        object.__setattr__(obj, "values", values)
        return obj

    @property
    def axis_cards(self) -> tuple[tuple[VarName, int], ...]:
        """(name, cardinality) pairs in axis order."""
        return tuple(zip(self.axes, self.values.shape))

    def axis_index(self, name: VarName) -> int:
        try:
            return self.axes.index(name)
        except ValueError:
            raise UnknownAxis(f"tensor has no axis {name!r}; axes are {self.axes}")

    def cardinality(self, name: VarName) -> int:
        return self.values.shape[self.axis_index(name)]

    def lookup(self, assignment: Mapping[VarName, int]) -> float:
        """Value at a full assignment of every axis."""
        idx = tuple(assignment[name] for name in self.axes)
        return float(self.values[idx])

    def slice_axis(self, name: VarName, index: int) -> "NamedTensor":
        """Fix one axis at ``index`` and drop it (observation clamping)."""
        pos = self.axis_index(name)
        if not 0 <= index < self.values.shape[pos]:
            raise ShapeMismatch(
                f"index {index} out of range for axis {name!r} "
                f"of cardinality {self.values.shape[pos]}"
            )
        taken = np.take(self.values, index, axis=pos)
        return NamedTensor._unsafe(
            self.axes[:pos] + self.axes[pos + 1:], taken
        )

    def rename_axis(self, old: VarName, new: VarName) -> "NamedTensor":
        pos = self.axis_index(old)
        axes = self.axes[:pos] + (new,) + self.axes[pos + 1:]
        if len(set(axes)) != len(axes):
            raise ShapeMismatch(f"renaming {old!r} to {new!r} duplicates an axis")
        return NamedTensor._unsafe(axes, self.values)


@dataclass(frozen=True)
class Categorical:
    """Probability distribution of a single named variable.

    Entries lie in [0, 1] and sum to 1 within ``PROB_TOL``.
    """

    var: VarName
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ShapeMismatch("probs must be a nonempty vector")
        if probs.min() < 0 or probs.max() > 1 + PROB_TOL:
            raise ShapeMismatch(f"probabilities out of [0, 1] for {self.var!r}")
        if abs(float(probs.sum()) - 1.0) > PROB_TOL:
            raise ShapeMismatch(
                f"probabilities of {self.var!r} sum to {probs.sum()!r}, not 1"
            )

    @classmethod
    def _unsafe(cls, var: VarName, probs: np.ndarray) -> "Categorical":
        obj = object.__new__(cls)
        object.__setattr__(obj, "var", var)
        object.__setattr__(obj, "probs", probs)
        return obj

    def __len__(self) -> int:
        return self.probs.size

    def argmax(self) -> int:
        return int(np.argmax(self.probs))


def normalize(var: VarName, weights: Iterable[float] | np.ndarray) -> Categorical:
    """Rescale a nonnegative weight vector into a Categorical.

    Raises :class:`ZeroMass` when the weights sum to zero, which downstream
    code treats as a numerically annihilated belief (e.g. an observation
    that is impossible under the model).
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ShapeMismatch("normalize expects a nonempty vector")
    if w.min() < 0:
        raise ShapeMismatch("normalize expects nonnegative weights")
    total = float(w.sum())
    if total <= 0.0:
        raise ZeroMass(f"all-zero weight vector for {var!r}")
    return Categorical._unsafe(var, w / total)


def uniform(var: VarName, cardinality: int) -> Categorical:
    return Categorical._unsafe(var, np.full(cardinality, 1.0 / cardinality))


def one_hot(var: VarName, cardinality: int, index: int) -> Categorical:
    if not 0 <= index < cardinality:
        raise ShapeMismatch(f"one_hot index {index} out of range 0..{cardinality - 1}")
    probs = np.zeros(cardinality)
    probs[index] = 1.0
    return Categorical._unsafe(var, probs)


def kl_divergence(p: Categorical, q: Categorical) -> float:
    """KL divergence sum(p * ln(p/q)) with the 0*ln(0/.) = 0 convention.

    q is clamped to ``LOG_FLOOR`` before the logarithm so degenerate
    preference entries cannot produce infinities.
    """
    if len(p) != len(q):
        raise DimensionMismatch(
            f"KL between cardinalities {len(p)} and {len(q)}"
        )
    return _kl_raw(p.probs, q.probs)


def _kl_raw(p: np.ndarray, q: np.ndarray) -> float:
    q = np.maximum(q, LOG_FLOOR)
    mask = p > 0
    # nonnegative by Gibbs' inequality; drop float-cancellation dust
    return max(float(np.sum(p[mask] * np.log(p[mask] / q[mask]))), 0.0)


def entropy(p: Categorical) -> float:
    """Shannon entropy -sum(p * ln p) in nats, with 0*ln(0) = 0."""
    probs = p.probs[p.probs > 0]
    return max(float(-np.sum(probs * np.log(probs))), 0.0)


def contract(t: NamedTensor, beliefs: Sequence[Categorical]) -> NamedTensor:
    """Sum out each belief's axis of ``t``, weighting by the belief.

    The result has exactly the axes of ``t`` minus the belief axes; every
    entry is the sum over eliminated configurations of
    ``t * prod(beliefs)``. This is the mean-field building block used by
    the prediction step and the expected-free-energy terms.
    """
    names = list(t.axes)
    vals = t.values
    for b in beliefs:
        try:
            pos = names.index(b.var)
        except ValueError:
            raise UnknownAxis(
                f"belief over {b.var!r} does not match any axis of {tuple(names)}"
            )
        if vals.shape[pos] != b.probs.size:
            raise ShapeMismatch(
                f"axis {b.var!r} has cardinality {vals.shape[pos]}, "
                f"belief has {b.probs.size}"
            )
        vals = np.tensordot(vals, b.probs, axes=([pos], [0]))
        names.pop(pos)
    return NamedTensor._unsafe(tuple(names), vals)
