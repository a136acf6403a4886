"""Tree search over future temporal slices.

Each planning iteration descends from the root by the UCT criterion until
it reaches a leaf, expands all of that leaf's children at once (one
prediction step per action), evaluates each child's expected free energy,
and adds the cheapest child's cost to the selected node and every ancestor
while incrementing their visit counts. After the iteration budget is
spent, the action of the most-visited root child is returned.

Children are initialized with ``visits = 1`` and ``cost_aggr`` equal to
their own EFE so the UCT mean is defined the moment they exist; the
backpropagation updates only the selected node and its ancestors. (The
alternative of ``visits = 0`` with an infinite exploration bonus is noted
but not implemented.) All ties break toward the lowest action index, so
planning is fully deterministic; the tree never mutates the model or the
root's beliefs, only its own bookkeeping fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .efe import EfeBreakdown, efe
from .errors import AlreadyExpanded, NotExpanded
from .model import TemporalSliceModel
from .prediction import SliceBeliefs, p_step


def node_id(multi_index: tuple[int, ...]) -> str:
    """Render an action sequence as a stable node id, e.g. ``"(1,3)"``."""
    return "(" + ",".join(str(a) for a in multi_index) + ")"


class TreeNode:
    """One temporal slice in the search tree."""

    __slots__ = (
        "multi_index",
        "beliefs",
        "action_from_parent",
        "cost_aggr",
        "visits",
        "efe_own",
        "children",
        "parent",
    )

    def __init__(
        self,
        beliefs: SliceBeliefs,
        multi_index: tuple[int, ...] = (),
        action_from_parent: int | None = None,
        cost_aggr: float = 0.0,
        visits: int = 1,
        efe_own: EfeBreakdown | None = None,
        parent: "TreeNode | None" = None,
    ):
        self.multi_index = multi_index
        self.beliefs = beliefs
        self.action_from_parent = action_from_parent
        self.cost_aggr = cost_aggr
        self.visits = visits
        self.efe_own = efe_own
        self.children: list[TreeNode] = []
        self.parent = parent

    @property
    def id(self) -> str:
        return node_id(self.multi_index)

    @property
    def mean_cost(self) -> float:
        return self.cost_aggr / self.visits

    def walk(self):
        """Yield this node and every descendant, depth-first."""
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class PlannerConfig:
    """Iteration budget and exploration constant of the tree search."""

    planning_iterations: int
    exploration_constant: float = 2.4

    def __post_init__(self) -> None:
        if self.planning_iterations < 0:
            raise ValueError("planning_iterations must be >= 0")
        if self.exploration_constant < 0:
            raise ValueError("exploration_constant must be >= 0")


@dataclass(frozen=True)
class IterationRecord:
    """What one planning iteration did, enough to replay the bookkeeping."""

    selected_id: str
    child_efes: tuple[float, ...]
    min_efe: float


def uct_value(child: TreeNode, parent_visits: int, c: float) -> float:
    """Negated mean cost plus the exploration bonus."""
    return -child.mean_cost + c * math.sqrt(math.log(parent_visits) / child.visits)


def select_node(root: TreeNode, c: float) -> TreeNode:
    """Descend by highest UCT until a node with no children is reached.

    Ties break toward the lowest action index.
    """
    node = root
    while node.children:
        best = node.children[0]
        best_value = uct_value(best, node.visits, c)
        for child in node.children[1:]:
            value = uct_value(child, node.visits, c)
            if value > best_value:
                best, best_value = child, value
        node = best
    return node


def expand_children(node: TreeNode, model: TemporalSliceModel) -> list[TreeNode]:
    """Create one evaluated child per action via the prediction step."""
    if node.children:
        raise AlreadyExpanded(f"node {node.id} already has children")
    for action in range(model.n_actions):
        beliefs = p_step(model, node.beliefs, action)
        own = efe(model, beliefs)
        node.children.append(
            TreeNode(
                beliefs,
                multi_index=node.multi_index + (action,),
                action_from_parent=action,
                cost_aggr=own.total,
                visits=1,
                efe_own=own,
                parent=node,
            )
        )
    return node.children


def backpropagate(expanded: TreeNode, children: list[TreeNode]) -> float:
    """Push the cheapest fresh child EFE up to the root; returns it.

    Adds ``min_a EFE(child_a)`` to ``cost_aggr`` of the expanded node and
    every ancestor and increments their visit counts; the children
    themselves keep their initialization.
    """
    m = min(child.efe_own.total for child in children)
    node: TreeNode | None = expanded
    while node is not None:
        node.cost_aggr += m
        node.visits += 1
        node = node.parent
    return m


def run_iteration(
    root: TreeNode, model: TemporalSliceModel, config: PlannerConfig
) -> IterationRecord:
    """One select / expand / evaluate / backpropagate cycle."""
    selected = select_node(root, config.exploration_constant)
    children = expand_children(selected, model)
    m = backpropagate(selected, children)
    return IterationRecord(
        selected_id=selected.id,
        child_efes=tuple(child.efe_own.total for child in children),
        min_efe=m,
    )


def select_action(root: TreeNode) -> int:
    """Action of the most-visited root child; ties to the lowest index."""
    if not root.children:
        raise NotExpanded("select_action before any expansion")
    best = root.children[0]
    for child in root.children[1:]:
        if child.visits > best.visits:
            best = child
    return best.action_from_parent


def plan(
    root: TreeNode,
    model: TemporalSliceModel,
    config: PlannerConfig,
    log: list[IterationRecord] | None = None,
) -> int:
    """Run the full iteration budget, then pick the action to execute."""
    for _ in range(config.planning_iterations):
        record = run_iteration(root, model, config)
        if log is not None:
            log.append(record)
    return select_action(root)


def serialize_tree(root: TreeNode) -> dict:
    """Tree snapshot for the inspector: one entry per node."""
    nodes = []
    for node in root.walk():
        nodes.append(
            {
                "id": node.id,
                "multi_index": list(node.multi_index),
                "action": node.action_from_parent,
                "visits": node.visits,
                "mean_cost": node.mean_cost,
                "efe": node.efe_own.to_payload() if node.efe_own else None,
                "children": [child.id for child in node.children],
            }
        )
    return {"root": root.id, "nodes": nodes}
