"""The action-perception cycle tying inference, planning and acting together.

One cycle looks like the driving loop of any episodic task:

    obs = env.reset()
    agent.reset(obs)
    while not env.done:
        action = agent.step()
        obs = env.execute(action)
        agent.update(action, obs)

``reset`` runs the inference step on the initial observations and creates a
fresh planning root. ``step`` spends the planning budget on that root and
returns the chosen action. ``update`` adopts the chosen child's predicted
state beliefs as the empirical prior for the next time step, folds in the
new observations with another inference step, and discards the old tree in
favor of a fresh root.

Listeners can subscribe to ``reset`` / ``plan_iteration`` / ``step`` /
``update`` events; the inspector and the benchmark harness hook in there.
"""

from __future__ import annotations

from typing import Callable, Mapping

from .errors import ChildNotExpanded
from .inference import Message, i_step_with_log
from .model import TemporalSliceModel
from .planner import (
    IterationRecord,
    PlannerConfig,
    TreeNode,
    plan,
    run_iteration,
    select_action,
)
from .prediction import SliceBeliefs
from .tensors import Categorical, VarName

Listener = Callable[[str, dict], None]


class Agent:
    """Stateful wrapper around one model + planner configuration."""

    def __init__(self, model: TemporalSliceModel, config: PlannerConfig):
        self.model = model
        self.config = config
        self.current_priors: dict[VarName, Categorical] = {}
        self.current_posteriors: dict[VarName, Categorical] = {}
        self.root: TreeNode | None = None
        self.iteration_log: list[IterationRecord] = []
        self.last_message_log: list[Message] = []
        self._listeners: list[Listener] = []

    def add_listener(self, listener: Listener) -> None:
        self._listeners.append(listener)

    def _emit(self, event: str, payload: dict) -> None:
        for listener in self._listeners:
            listener(event, payload)

    # -- the three phases of the cycle -----------------------------------

    def reset(self, obs_values: Mapping[VarName, int]) -> None:
        """Start a trial: infer posteriors from the model priors."""
        priors = {name: spec.prior_d for name, spec in self.model.states.items()}
        self._begin_cycle(priors, obs_values)
        self._emit("reset", {"obs": dict(obs_values)})

    def step(self) -> int:
        """Spend the planning budget and return the selected action."""
        if self.root is None:
            raise ChildNotExpanded("step() before reset()")
        self.iteration_log = []
        action = plan(self.root, self.model, self.config, log=self.iteration_log)
        self._emit("step", {"action": action})
        return action

    def plan_iteration(self) -> IterationRecord:
        """Run a single planning iteration (used by the inspector)."""
        if self.root is None:
            raise ChildNotExpanded("plan_iteration() before reset()")
        record = run_iteration(self.root, self.model, self.config)
        self.iteration_log.append(record)
        self._emit("plan_iteration", {"record": record})
        return record

    def best_action(self) -> int:
        """Most-visited root action without further planning."""
        if self.root is None:
            raise ChildNotExpanded("best_action() before reset()")
        return select_action(self.root)

    def update(self, action: int, obs_values: Mapping[VarName, int]) -> None:
        """Adopt the chosen child's prediction as the next empirical prior."""
        if self.root is None or not self.root.children:
            raise ChildNotExpanded(
                "update() requires a prior step() that expanded the root"
            )
        child = self.root.children[action]
        self._begin_cycle(dict(child.beliefs.state_beliefs), obs_values)
        self._emit("update", {"action": action, "obs": dict(obs_values)})

    # -- shared plumbing ---------------------------------------------------

    def _begin_cycle(
        self,
        priors: Mapping[VarName, Categorical],
        obs_values: Mapping[VarName, int],
    ) -> None:
        posteriors, log = i_step_with_log(self.model, priors, obs_values)
        self.current_priors = dict(priors)
        self.current_posteriors = posteriors
        self.last_message_log = log
        self.iteration_log = []
        self.root = TreeNode(SliceBeliefs(posteriors, {}))
