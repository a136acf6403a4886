"""Mean-field forward prediction through one action (the P-step).

Given the per-state beliefs of a parent slice and an action, the first
stage pushes every state belief through its transition CPT (the action
enters as a one-hot contraction over the action axis, equivalent to
slicing the CPT at that action); the second stage pushes the predicted
state beliefs through every likelihood CPT. Correlations between parents
are ignored; each eliminated axis is weighted by that parent's marginal
alone, which is exact whenever a variable has a single parent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ActionOutOfRange
from .model import TemporalSliceModel
from .tensors import Categorical, VarName, contract, normalize, one_hot


@dataclass(frozen=True)
class SliceBeliefs:
    """Per-variable beliefs of one slice.

    ``obs_beliefs`` is empty for the root slice, whose observations are
    actual data rather than predictions.
    """

    state_beliefs: dict[VarName, Categorical]
    obs_beliefs: dict[VarName, Categorical] = field(default_factory=dict)


def p_step_states(
    model: TemporalSliceModel, parent: SliceBeliefs, action: int
) -> dict[VarName, Categorical]:
    """Predicted belief over each next-slice state under ``action``."""
    if not 0 <= action < model.n_actions:
        raise ActionOutOfRange(
            f"action {action} outside 0..{model.n_actions - 1}"
        )
    action_belief = one_hot(model.action_var, model.n_actions, action)
    predicted: dict[VarName, Categorical] = {}
    for name, spec in model.states.items():
        beliefs = [
            action_belief if p == model.action_var else parent.state_beliefs[p]
            for p in spec.transition_parents
        ]
        summed = contract(spec.transition_b, beliefs)
        # only the primed child axis remains; normalization guards the
        # 1e-6 CPT slack from compounding over long rollouts
        predicted[name] = normalize(name, summed.values)
    return predicted


def p_step_observations(
    model: TemporalSliceModel, state_beliefs: dict[VarName, Categorical]
) -> dict[VarName, Categorical]:
    """Predicted belief over each observation given predicted states."""
    predicted: dict[VarName, Categorical] = {}
    for name, spec in model.observations.items():
        beliefs = [state_beliefs[p] for p in spec.parents]
        summed = contract(spec.likelihood_a, beliefs)
        predicted[name] = normalize(name, summed.values)
    return predicted


def p_step(
    model: TemporalSliceModel, parent: SliceBeliefs, action: int
) -> SliceBeliefs:
    """Both stages: predicted state beliefs, then observation beliefs."""
    states = p_step_states(model, parent, action)
    observations = p_step_observations(model, states)
    return SliceBeliefs(states, observations)
