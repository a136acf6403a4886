"""Expected free energy of a predicted slice: risk plus ambiguity.

The cost assigned to a future slice decomposes into

* one risk term per declared preference subset: the KL divergence
  between the product of the predicted observation beliefs over that
  subset and the subset's preference table, and
* one ambiguity term per observation: the expected entropy of its
  likelihood rows under the product of the predicted parent beliefs.

Observations outside every preference subset contribute exactly zero
risk: liking whatever we predict is implemented by omission rather than
by materializing a preference equal to the prediction, so the zero is
numerically exact. Ambiguity is summed over all observations.

Entropy tables and preference logarithms depend only on the (immutable)
model, so they are computed once per model and memoized.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from functools import reduce
from typing import Mapping

import numpy as np

from .model import ObsSpec, PreferenceSpec, TemporalSliceModel
from .prediction import SliceBeliefs
from .tensors import LOG_FLOOR, Categorical, NamedTensor, VarName, contract


@dataclass(frozen=True)
class EfeBreakdown:
    """Total cost of a slice plus the terms it decomposes into.

    ``risk_terms`` is keyed by the preference subset (tuple of observation
    names); ``ambiguity_terms`` by observation name. The total always
    equals the sum of all exposed terms.
    """

    total: float
    risk_terms: dict[tuple[VarName, ...], float]
    ambiguity_terms: dict[VarName, float]

    def to_payload(self) -> dict:
        """Serialization used by the inspector's drill-down view."""
        return {
            "total": self.total,
            "risk": [
                {"vars": list(subset), "value": value}
                for subset, value in self.risk_terms.items()
            ],
            "ambiguity": [
                {"var": var, "value": value}
                for var, value in self.ambiguity_terms.items()
            ],
        }


def _mean_field_joint(
    axes: tuple[VarName, ...], obs_beliefs: Mapping[VarName, Categorical]
) -> np.ndarray:
    """Outer product of per-variable beliefs, ordered to match ``axes``."""
    vectors = [obs_beliefs[name].probs for name in axes]
    return reduce(np.multiply.outer, vectors)


def compute_risk(
    spec: PreferenceSpec, obs_beliefs: Mapping[VarName, Categorical]
) -> float:
    """KL between the predicted joint over the subset and its preference."""
    joint = _mean_field_joint(spec.prefs_c.axes, obs_beliefs)
    p = joint.ravel()
    q = np.maximum(spec.prefs_c.values.ravel(), LOG_FLOOR)
    mask = p > 0
    # KL is nonnegative; discard float-cancellation dust
    return max(float(np.sum(p[mask] * np.log(p[mask] / q[mask]))), 0.0)


def _row_entropy(likelihood: NamedTensor, child: VarName) -> NamedTensor:
    """Entropy of each child-axis slice, one value per parent config."""
    pos = likelihood.axis_index(child)
    vals = likelihood.values
    logs = np.where(vals > 0, np.log(np.maximum(vals, LOG_FLOOR)), 0.0)
    ent = np.maximum(-(vals * logs).sum(axis=pos), 0.0)
    axes = likelihood.axes[:pos] + likelihood.axes[pos + 1:]
    return NamedTensor._unsafe(axes, ent)


def compute_ambiguity(
    obs_name: VarName,
    spec: ObsSpec,
    parent_beliefs: Mapping[VarName, Categorical],
) -> float:
    """Expected likelihood-row entropy under the parent beliefs."""
    ent = _row_entropy(spec.likelihood_a, obs_name)
    if not spec.parents:
        return float(ent.values.reshape(()))
    weighted = contract(ent, [parent_beliefs[p] for p in spec.parents])
    return float(weighted.values.reshape(()))


class _EfeTables:
    """Per-model tables reused across every slice evaluation."""

    def __init__(self, model: TemporalSliceModel):
        self.log_prefs: dict[tuple[VarName, ...], np.ndarray] = {
            p.obs_subset: np.log(np.maximum(p.prefs_c.values.ravel(), LOG_FLOOR))
            for p in model.preferences
        }
        self.entropies: dict[VarName, NamedTensor] = {
            name: _row_entropy(spec.likelihood_a, name)
            for name, spec in model.observations.items()
        }


_TABLES: "weakref.WeakKeyDictionary[TemporalSliceModel, _EfeTables]"
_TABLES = weakref.WeakKeyDictionary()


def _tables_for(model: TemporalSliceModel) -> _EfeTables:
    tables = _TABLES.get(model)
    if tables is None:
        tables = _EfeTables(model)
        _TABLES[model] = tables
    return tables


def efe(model: TemporalSliceModel, beliefs: SliceBeliefs) -> EfeBreakdown:
    """Expected free energy of a slice with its full term breakdown."""
    tables = _tables_for(model)

    risk_terms: dict[tuple[VarName, ...], float] = {}
    for pref in model.preferences:
        joint = _mean_field_joint(pref.prefs_c.axes, beliefs.obs_beliefs).ravel()
        logq = tables.log_prefs[pref.obs_subset]
        mask = joint > 0
        risk = float(np.sum(joint[mask] * (np.log(joint[mask]) - logq[mask])))
        risk_terms[pref.obs_subset] = max(risk, 0.0)

    ambiguity_terms: dict[VarName, float] = {}
    for name, spec in model.observations.items():
        ent = tables.entropies[name]
        if spec.parents:
            weighted = contract(ent, [beliefs.state_beliefs[p] for p in spec.parents])
            ambiguity_terms[name] = float(weighted.values.reshape(()))
        else:
            ambiguity_terms[name] = float(ent.values.reshape(()))

    total = sum(risk_terms.values()) + sum(ambiguity_terms.values())
    return EfeBreakdown(total, risk_terms, ambiguity_terms)
