"""Exact sum-product inference over one temporal slice (the I-step).

Given priors over every state and an observed index for every observation,
this module builds a bipartite factor graph (one prior factor per state,
one likelihood factor per observation with the observed value clamped)
and runs two-pass belief propagation to obtain the exact per-state
posterior marginals.

The graph is a forest by construction (validated at model build time), so
a single leaf-to-root sweep followed by a root-to-leaf sweep is exact.
Messages are renormalized to sum 1 after each hop, which is harmless by
scale invariance and prevents underflow on long chains. Disconnected
components are processed independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import (
    IndexOutOfRange,
    MissingInbound,
    MissingObservation,
    MissingPrior,
    ZeroMass,
)
from .model import TemporalSliceModel
from .tensors import Categorical, NamedTensor, VarName, normalize

NodeId = str


def prior_factor_id(state: VarName) -> NodeId:
    return f"prior:{state}"


def likelihood_factor_id(obs: VarName) -> NodeId:
    return f"likelihood:{obs}"


@dataclass(frozen=True)
class Factor:
    """One factor node: a clamped tensor plus its variable neighbors."""

    id: NodeId
    tensor: NamedTensor
    neighbors: tuple[VarName, ...]


@dataclass(frozen=True)
class Message:
    """A directed message between a variable and a factor (either way)."""

    source: NodeId
    target: NodeId
    content: np.ndarray


@dataclass(frozen=True)
class FactorGraph:
    """Bipartite graph of state variables and clamped slice factors."""

    variable_nodes: tuple[VarName, ...]
    factors: tuple[Factor, ...]
    # variable -> ids of factor neighbors, in factor declaration order
    var_neighbors: dict[VarName, tuple[NodeId, ...]]
    # synthetic clamp messages (observation value -> its factor), logged so
    # an inspector can show what each observation injected into the graph
    clamp_messages: tuple[Message, ...] = field(default_factory=tuple)

    def factor_by_id(self, fid: NodeId) -> Factor:
        for f in self.factors:
            if f.id == fid:
                return f
        raise KeyError(fid)


def build_factor_graph(
    model: TemporalSliceModel,
    priors: Mapping[VarName, Categorical],
    obs_values: Mapping[VarName, int],
) -> FactorGraph:
    """Clamp the observations and assemble the slice factor graph.

    One prior factor per state and one likelihood factor per observation,
    the latter with its observation axis sliced at the observed index, so
    the factor count is exactly n_observations + n_states.
    """
    factors: list[Factor] = []
    clamp_log: list[Message] = []

    for name, spec in model.states.items():
        if name not in priors:
            raise MissingPrior(f"no prior supplied for state {name!r}")
        p = priors[name]
        if len(p) != spec.cardinality:
            raise MissingPrior(
                f"prior for {name!r} has cardinality {len(p)}, "
                f"expected {spec.cardinality}"
            )
        tensor = NamedTensor((name,), p.probs)
        factors.append(Factor(prior_factor_id(name), tensor, (name,)))

    for name, spec in model.observations.items():
        if name not in obs_values:
            raise MissingObservation(f"no observed value for {name!r}")
        index = int(obs_values[name])
        if not 0 <= index < spec.cardinality:
            raise IndexOutOfRange(
                f"observed index {index} out of range for {name!r} "
                f"(cardinality {spec.cardinality})"
            )
        clamped = spec.likelihood_a.slice_axis(name, index)
        factors.append(Factor(likelihood_factor_id(name), clamped, spec.parents))
        onehot = np.zeros(spec.cardinality)
        onehot[index] = 1.0
        clamp_log.append(Message(name, likelihood_factor_id(name), onehot))

    var_neighbors: dict[VarName, list[NodeId]] = {s: [] for s in model.states}
    for f in factors:
        for v in f.neighbors:
            var_neighbors[v].append(f.id)

    return FactorGraph(
        variable_nodes=tuple(model.states),
        factors=tuple(factors),
        var_neighbors={v: tuple(fs) for v, fs in var_neighbors.items()},
        clamp_messages=tuple(clamp_log),
    )


Inbox = Mapping[tuple[NodeId, NodeId], np.ndarray]


def variable_to_factor(
    graph: FactorGraph, x: VarName, f: NodeId, inbox: Inbox
) -> Message:
    """Product of all factor messages into ``x`` except the one from ``f``.

    The empty product (a leaf variable) is the all-ones vector.
    """
    card = None
    for fid in graph.var_neighbors[x]:
        t = graph.factor_by_id(fid).tensor
        card = t.values.shape[t.axis_index(x)]
        break
    content: np.ndarray | None = None
    for h in graph.var_neighbors[x]:
        if h == f:
            continue
        key = (h, x)
        if key not in inbox:
            raise MissingInbound(f"message {h} -> {x} not available yet")
        content = inbox[key] if content is None else content * inbox[key]
    if content is None:
        content = np.ones(card if card is not None else 1)
    return Message(x, f, content)


def factor_to_variable(
    graph: FactorGraph, f: NodeId, x: VarName, inbox: Inbox
) -> Message:
    """Marginalize the factor against inbound messages, leaving axis ``x``."""
    factor = graph.factor_by_id(f)
    vals = factor.tensor.values
    names = list(factor.tensor.axes)
    for y in factor.neighbors:
        if y == x:
            continue
        key = (y, f)
        if key not in inbox:
            raise MissingInbound(f"message {y} -> {f} not available yet")
        pos = names.index(y)
        vals = np.tensordot(vals, inbox[key], axes=([pos], [0]))
        names.pop(pos)
    return Message(f, x, np.atleast_1d(vals))


def _renormalized(v: np.ndarray) -> np.ndarray:
    # all-zero messages are kept as-is; they surface as ZeroMass at the end
    total = v.sum()
    return v / total if total > 0 else v


def run_belief_propagation(
    graph: FactorGraph,
) -> tuple[dict[VarName, np.ndarray], list[Message]]:
    """Two-pass sum-product over a forest.

    Returns the unnormalized per-variable marginals (product of inbound
    factor messages) and the ordered message log, clamp messages first.
    """
    # undirected adjacency over variable names and factor ids
    adjacency: dict[NodeId, list[NodeId]] = {v: list(graph.var_neighbors[v]) for v in graph.variable_nodes}
    for f in graph.factors:
        adjacency[f.id] = list(f.neighbors)

    messages: dict[tuple[NodeId, NodeId], np.ndarray] = {}
    log: list[Message] = list(graph.clamp_messages)
    visited: set[NodeId] = set()

    def send(src: NodeId, dst: NodeId) -> None:
        if src in graph.var_neighbors:
            msg = variable_to_factor(graph, src, dst, messages)
        else:
            msg = factor_to_variable(graph, src, dst, messages)
        content = _renormalized(msg.content)
        messages[(src, dst)] = content
        log.append(Message(src, dst, content))

    for start in graph.variable_nodes:
        if start in visited:
            continue
        # BFS from an arbitrary root variable of this component
        order: list[NodeId] = [start]
        parent: dict[NodeId, NodeId | None] = {start: None}
        visited.add(start)
        i = 0
        while i < len(order):
            node = order[i]
            i += 1
            for nb in adjacency[node]:
                if nb not in parent:
                    parent[nb] = node
                    visited.add(nb)
                    order.append(nb)
        # leaf-to-root sweep, then root-to-leaf
        for node in reversed(order):
            if parent[node] is not None:
                send(node, parent[node])
        for node in order:
            if parent[node] is not None:
                send(parent[node], node)

    # factors with no variable neighbors are constants: nothing to collect
    marginals: dict[VarName, np.ndarray] = {}
    for v in graph.variable_nodes:
        prod: np.ndarray | None = None
        for fid in graph.var_neighbors[v]:
            m = messages[(fid, v)]
            prod = m if prod is None else prod * m
        if prod is None:
            prod = np.ones(1)
        marginals[v] = prod
    return marginals, log


def i_step(
    model: TemporalSliceModel,
    priors: Mapping[VarName, Categorical],
    obs_values: Mapping[VarName, int],
) -> dict[VarName, Categorical]:
    """Exact posterior marginal over every state given the observations."""
    posteriors, _ = i_step_with_log(model, priors, obs_values)
    return posteriors


def i_step_with_log(
    model: TemporalSliceModel,
    priors: Mapping[VarName, Categorical],
    obs_values: Mapping[VarName, int],
) -> tuple[dict[VarName, Categorical], list[Message]]:
    """Like :func:`i_step` but also returns the ordered message log."""
    graph = build_factor_graph(model, priors, obs_values)
    marginals, log = run_belief_propagation(graph)
    posteriors: dict[VarName, Categorical] = {}
    for v, weights in marginals.items():
        try:
            posteriors[v] = normalize(v, weights)
        except ZeroMass:
            raise ZeroMass(
                f"posterior over {v!r} vanished: the observations have "
                "probability zero under the model"
            )
    return posteriors, log
