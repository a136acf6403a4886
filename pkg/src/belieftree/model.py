"""Declarative builder and validated immutable model of one temporal slice.

A temporal-slice model declares, once, the variables of a slice and the
factors connecting them:

* states ``S_*`` with a prior vector and a transition CPT,
* observations ``O_*`` with a likelihood CPT over state parents,
* an action variable ``A_*`` with a fixed number of actions,
* prior preferences over disjoint subsets of the observations.

The builder mirrors the usual workflow: ``add_state`` / ``add_observation``
/ ``add_transition`` / ``add_preference`` chained, then a single ``build()``
that validates everything eagerly and returns an immutable model shared by
many trials.

Because a state is usually its own transition parent, the child axis of a
transition tensor is named with a trailing prime (``S_pos_x'``) to keep
axis names unique; :func:`next_axis` builds that name. ``add_transition``
accepts an unprimed child axis too, when the state is not among its own
parents, and canonicalizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadPrefix,
    DuplicateName,
    OverlappingSubsets,
    ShapeMismatch,
    UnknownObservation,
    UnknownParent,
    UnknownState,
    ValidationError,
)
from .tensors import (
    CPT_TOL,
    Categorical,
    NamedTensor,
    VarName,
    is_action_name,
    is_obs_name,
    is_state_name,
)

NEXT_AXIS_SUFFIX = "'"


def next_axis(name: VarName) -> VarName:
    """Axis name for a state's next-step value inside its transition CPT."""
    return name + NEXT_AXIS_SUFFIX


@dataclass(frozen=True)
class StateSpec:
    """Prior and transition mapping of one latent state."""

    prior_d: Categorical
    transition_b: NamedTensor  # child axis = next_axis(name), parents follow
    transition_parents: tuple[VarName, ...]

    @property
    def cardinality(self) -> int:
        return len(self.prior_d)


@dataclass(frozen=True)
class ObsSpec:
    """Likelihood mapping of one observation onto its state parents."""

    likelihood_a: NamedTensor  # child axis = the observation's own name
    parents: tuple[VarName, ...]

    @property
    def cardinality(self) -> int:
        return self.likelihood_a.values.shape[0]


@dataclass(frozen=True)
class PreferenceSpec:
    """Joint prior preference over a subset of observations."""

    obs_subset: tuple[VarName, ...]
    prefs_c: NamedTensor


@dataclass(frozen=True, eq=False)
class TemporalSliceModel:
    """Validated, immutable description of one temporal slice.

    Equality is by identity (models contain dicts); use
    :meth:`to_json_dict` to compare two models structurally.
    """

    action_var: VarName
    n_actions: int
    states: dict[VarName, StateSpec]
    observations: dict[VarName, ObsSpec]
    preferences: tuple[PreferenceSpec, ...]

    @property
    def state_names(self) -> tuple[VarName, ...]:
        return tuple(self.states)

    @property
    def obs_names(self) -> tuple[VarName, ...]:
        return tuple(self.observations)

    @property
    def default_preference_obs(self) -> tuple[VarName, ...]:
        """Observations with no declared preference; their risk is zero."""
        preferred = {o for p in self.preferences for o in p.obs_subset}
        return tuple(o for o in self.observations if o not in preferred)

    def cardinality(self, name: VarName) -> int:
        if name in self.states:
            return self.states[name].cardinality
        if name in self.observations:
            return self.observations[name].cardinality
        if name == self.action_var:
            return self.n_actions
        raise UnknownState(f"no variable named {name!r} in the model")

    def to_json_dict(self) -> dict:
        """JSON-serializable structural description (row-major values)."""

        def tensor_doc(t: NamedTensor) -> dict:
            return {
                "axes": [{"name": n, "cardinality": c} for n, c in t.axis_cards],
                "values": t.values.ravel(order="C").tolist(),
            }

        return {
            "action_var": self.action_var,
            "n_actions": self.n_actions,
            "states": {
                name: {
                    "prior": spec.prior_d.probs.tolist(),
                    "transition_parents": list(spec.transition_parents),
                    "transition": tensor_doc(spec.transition_b),
                }
                for name, spec in self.states.items()
            },
            "observations": {
                name: {
                    "parents": list(spec.parents),
                    "likelihood": tensor_doc(spec.likelihood_a),
                }
                for name, spec in self.observations.items()
            },
            "preferences": [
                {
                    "obs_subset": list(p.obs_subset),
                    "prefs": tensor_doc(p.prefs_c),
                }
                for p in self.preferences
            ],
        }


def _check_cpt_normalized(t: NamedTensor, child_axis: VarName, owner: str) -> None:
    """Every slice fixing all parent axes must sum to 1 over the child axis."""
    pos = t.axis_index(child_axis)
    sums = t.values.sum(axis=pos)
    if not np.allclose(sums, 1.0, atol=CPT_TOL, rtol=0.0):
        worst = float(np.abs(sums - 1.0).max())
        raise ValidationError(
            f"{owner}: CPT slices must sum to 1 over {child_axis!r} "
            f"(worst deviation {worst:.3g})"
        )


class TemporalSliceBuilder:
    """Accumulates variable declarations and validates them into a model."""

    def __init__(self, action_var: VarName, n_actions: int):
        if not is_action_name(action_var):
            raise BadPrefix(f"action variable {action_var!r} must start with 'A_'")
        if n_actions < 1:
            raise ValidationError("n_actions must be positive")
        self.action_var = action_var
        self.n_actions = int(n_actions)
        self._priors: dict[VarName, Categorical] = {}
        self._transitions: dict[VarName, tuple[NamedTensor, tuple[VarName, ...]]] = {}
        self._observations: dict[VarName, tuple[NamedTensor, tuple[VarName, ...]]] = {}
        self._preferences: list[tuple[tuple[VarName, ...], NamedTensor]] = []

    # -- declarations ---------------------------------------------------

    def add_state(self, name: VarName, d: Categorical | Iterable[float]) -> "TemporalSliceBuilder":
        """Declare a latent state with its prior parameter vector."""
        if not is_state_name(name):
            raise BadPrefix(f"state name {name!r} must start with 'S_'")
        if name in self._priors:
            raise DuplicateName(f"state {name!r} already declared")
        if not isinstance(d, Categorical):
            d = Categorical(name, np.asarray(list(d), dtype=np.float64))
        elif d.var != name:
            d = Categorical(name, d.probs)
        self._priors[name] = d
        return self

    def add_observation(
        self, name: VarName, a: NamedTensor, parents: Sequence[VarName]
    ) -> "TemporalSliceBuilder":
        """Declare an observation with likelihood ``a`` over ``parents``."""
        if not is_obs_name(name):
            raise BadPrefix(f"observation name {name!r} must start with 'O_'")
        if name in self._observations:
            raise DuplicateName(f"observation {name!r} already declared")
        parents = tuple(parents)
        for p in parents:
            if p not in self._priors:
                raise UnknownParent(f"observation {name!r}: unknown parent {p!r}")
        if len(set(parents)) != len(parents):
            raise ShapeMismatch(f"observation {name!r}: repeated parents")
        if set(a.axes) != {name, *parents}:
            raise ShapeMismatch(
                f"observation {name!r}: tensor axes {a.axes} must be "
                f"exactly {{{name!r}}} | parents"
            )
        for p in parents:
            if a.cardinality(p) != len(self._priors[p]):
                raise ShapeMismatch(
                    f"observation {name!r}: axis {p!r} cardinality "
                    f"{a.cardinality(p)} != state cardinality {len(self._priors[p])}"
                )
        self._observations[name] = (a, parents)
        return self

    def add_transition(
        self, name: VarName, b: NamedTensor, parents: Sequence[VarName]
    ) -> "TemporalSliceBuilder":
        """Declare how state ``name`` at the next step depends on ``parents``.

        ``parents`` may contain states of the previous slice and the action
        variable. The child axis of ``b`` is ``next_axis(name)``; a plain
        ``name`` child axis is accepted when unambiguous.
        """
        if name not in self._priors:
            raise UnknownState(f"transition for undeclared state {name!r}")
        if name in self._transitions:
            raise DuplicateName(f"transition for {name!r} already declared")
        parents = tuple(parents)
        if not parents:
            raise ValidationError(
                f"transition for {name!r} needs at least one parent"
            )
        for p in parents:
            if p != self.action_var and p not in self._priors:
                raise UnknownParent(f"transition for {name!r}: unknown parent {p!r}")
        if len(set(parents)) != len(parents):
            raise ShapeMismatch(f"transition for {name!r}: repeated parents")

        child = next_axis(name)
        if set(b.axes) == {name, *parents} and name not in parents:
            b = b.rename_axis(name, child)
        if set(b.axes) != {child, *parents}:
            raise ShapeMismatch(
                f"transition for {name!r}: tensor axes {b.axes} must be "
                f"{{{child!r}}} | parents"
            )
        if b.cardinality(child) != len(self._priors[name]):
            raise ShapeMismatch(
                f"transition for {name!r}: child cardinality "
                f"{b.cardinality(child)} != state cardinality {len(self._priors[name])}"
            )
        for p in parents:
            expected = self.n_actions if p == self.action_var else len(self._priors[p])
            if b.cardinality(p) != expected:
                raise ShapeMismatch(
                    f"transition for {name!r}: axis {p!r} cardinality "
                    f"{b.cardinality(p)} != {expected}"
                )
        self._transitions[name] = (b, parents)
        return self

    def add_preference(
        self, obs_subset: Sequence[VarName], c: NamedTensor
    ) -> "TemporalSliceBuilder":
        """Declare a joint prior preference over a subset of observations."""
        subset = tuple(obs_subset)
        if not subset:
            raise ValidationError("preference subset must be nonempty")
        for o in subset:
            if o not in self._observations:
                raise UnknownObservation(f"preference over undeclared {o!r}")
        already = {o for prev, _ in self._preferences for o in prev}
        overlap = already.intersection(subset)
        if overlap:
            raise OverlappingSubsets(
                f"observations {sorted(overlap)} already carry a preference"
            )
        if len(set(subset)) != len(subset):
            raise OverlappingSubsets(f"repeated observation in subset {subset}")
        if set(c.axes) != set(subset):
            raise ShapeMismatch(
                f"preference tensor axes {c.axes} must equal the subset {subset}"
            )
        for o in subset:
            a, _ = self._observations[o]
            if c.cardinality(o) != a.values.shape[a.axis_index(o)]:
                raise ShapeMismatch(
                    f"preference axis {o!r} cardinality mismatch"
                )
        self._preferences.append((subset, c))
        return self

    # -- validation -------------------------------------------------------

    def build(self) -> TemporalSliceModel:
        """Validate all declarations and freeze them into a model."""
        for name in self._priors:
            if name not in self._transitions:
                raise ValidationError(f"state {name!r} has no transition")

        states = {}
        for name, prior in self._priors.items():
            b, parents = self._transitions[name]
            _check_cpt_normalized(b, next_axis(name), f"transition of {name}")
            states[name] = StateSpec(prior, b, parents)

        observations = {}
        for name, (a, parents) in self._observations.items():
            _check_cpt_normalized(a, name, f"likelihood of {name}")
            observations[name] = ObsSpec(a, parents)

        preferences = []
        for subset, c in self._preferences:
            total = float(c.values.sum())
            if abs(total - 1.0) > CPT_TOL:
                raise ValidationError(
                    f"preference over {subset} sums to {total!r}, not 1"
                )
            preferences.append(PreferenceSpec(subset, c))

        _check_slice_graph_acyclic(observations)

        return TemporalSliceModel(
            action_var=self.action_var,
            n_actions=self.n_actions,
            states=states,
            observations=observations,
            preferences=tuple(preferences),
        )


def _check_slice_graph_acyclic(observations: dict[VarName, ObsSpec]) -> None:
    """Reject models whose per-slice likelihood factor graph has a cycle.

    Exactness of the sum-product inference step depends on the bipartite
    (states x likelihood-factors) graph being a forest. Prior factors have
    degree one and can never close a cycle, so only likelihood factors are
    examined: joining all parents of one factor through union-find finds a
    cycle exactly when two of them were already connected.
    """
    root: dict[VarName, VarName] = {}

    def find(x: VarName) -> VarName:
        while root.get(x, x) != x:
            root[x] = root.get(root[x], root[x])
            x = root[x]
        return x

    for name, spec in observations.items():
        anchors = [find(p) for p in spec.parents]
        if len(set(anchors)) != len(anchors):
            raise ValidationError(
                f"CyclicFactorGraph: likelihood of {name!r} closes a cycle "
                "in the slice factor graph"
            )
        for a in anchors[1:]:
            root[a] = anchors[0]
