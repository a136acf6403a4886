"""Factored active-inference planning over temporal slices.

Public surface: named tensors and categorical utilities, the temporal
slice model builder, exact belief-propagation inference, mean-field
prediction, expected-free-energy evaluation, the UCT tree-search planner,
the action-perception agent, the dSprites benchmark environment, the
experiment harness, and the live inspector service.
"""

from .agent import Agent
from .efe import EfeBreakdown, compute_ambiguity, compute_risk, efe
from .env_dsprites import DSpritesEnv, EnvConfig, EnvState, make_model
from .harness import EpisodeRecord, ExperimentConfig, Report, run_experiment
from .inference import FactorGraph, Message, build_factor_graph, i_step, i_step_with_log
from .model import (
    ObsSpec,
    PreferenceSpec,
    StateSpec,
    TemporalSliceBuilder,
    TemporalSliceModel,
)
from .planner import (
    IterationRecord,
    PlannerConfig,
    TreeNode,
    expand_children,
    plan,
    select_action,
    select_node,
    uct_value,
)
from .prediction import SliceBeliefs, p_step, p_step_observations, p_step_states
from .tensors import (
    Categorical,
    NamedTensor,
    contract,
    entropy,
    kl_divergence,
    normalize,
    one_hot,
    uniform,
)

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "Categorical",
    "DSpritesEnv",
    "EfeBreakdown",
    "EnvConfig",
    "EnvState",
    "EpisodeRecord",
    "ExperimentConfig",
    "FactorGraph",
    "IterationRecord",
    "Message",
    "NamedTensor",
    "ObsSpec",
    "PlannerConfig",
    "PreferenceSpec",
    "Report",
    "SliceBeliefs",
    "StateSpec",
    "TemporalSliceBuilder",
    "TemporalSliceModel",
    "TreeNode",
    "build_factor_graph",
    "compute_ambiguity",
    "compute_risk",
    "contract",
    "efe",
    "entropy",
    "expand_children",
    "i_step",
    "i_step_with_log",
    "kl_divergence",
    "make_model",
    "normalize",
    "one_hot",
    "p_step",
    "p_step_observations",
    "p_step_states",
    "plan",
    "run_experiment",
    "select_action",
    "select_node",
    "uct_value",
    "uniform",
]
