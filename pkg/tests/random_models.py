"""Seeded random temporal-slice models for property-style tests.

Likelihood parent sets are grown through a union-find so the per-slice
factor graph is a forest by construction; transition parents have no such
constraint (they connect consecutive slices, where cycles cannot form).
"""

from __future__ import annotations

import numpy as np

from belieftree.model import TemporalSliceBuilder, TemporalSliceModel, next_axis
from belieftree.tensors import Categorical, NamedTensor


def _random_cpt(rng: np.random.Generator, child_card: int, parent_cards: list[int]) -> np.ndarray:
    shape = (child_card, *parent_cards)
    vals = rng.uniform(0.05, 1.0, size=shape)
    return vals / vals.sum(axis=0, keepdims=True)


def random_belief(rng: np.random.Generator, var: str, card: int) -> Categorical:
    w = rng.uniform(0.05, 1.0, size=card)
    return Categorical(var, w / w.sum())


def random_model(
    rng: np.random.Generator,
    max_states: int = 5,
    max_obs: int = 4,
    max_card: int = 4,
    max_obs_parents: int = 2,
    single_parent_transitions: bool = False,
    n_preferences: int = 0,
) -> TemporalSliceModel:
    n_states = int(rng.integers(1, max_states + 1))
    n_obs = int(rng.integers(0, max_obs + 1))
    n_actions = int(rng.integers(2, 4))
    state_names = [f"S_v{i}" for i in range(n_states)]
    cards = {s: int(rng.integers(2, max_card + 1)) for s in state_names}

    builder = TemporalSliceBuilder("A_1", n_actions)
    for s in state_names:
        builder.add_state(s, random_belief(rng, s, cards[s]))

    # transitions: 1-2 state parents, sometimes the action
    for s in state_names:
        if single_parent_transitions:
            parents = [s]
        else:
            k = int(rng.integers(1, min(2, n_states) + 1))
            parents = list(rng.choice(state_names, size=k, replace=False))
            if rng.random() < 0.5:
                parents.append("A_1")
        parent_cards = [
            n_actions if p == "A_1" else cards[p] for p in parents
        ]
        b = NamedTensor(
            (next_axis(s), *parents), _random_cpt(rng, cards[s], parent_cards)
        )
        builder.add_transition(s, b, parents)

    # observations: forest-shaped parent sets via union-find
    component: dict[str, str] = {s: s for s in state_names}

    def find(x: str) -> str:
        while component[x] != x:
            component[x] = component[component[x]]
            x = component[x]
        return x

    obs_names = [f"O_v{i}" for i in range(n_obs)]
    obs_cards: dict[str, int] = {}
    for o in obs_names:
        first = str(rng.choice(state_names))
        parents = [first]
        want = int(rng.integers(1, max_obs_parents + 1))
        while len(parents) < want:
            used = {find(p) for p in parents}
            candidates = [s for s in state_names if find(s) not in used]
            if not candidates:
                break
            parents.append(str(rng.choice(candidates)))
        anchor = find(parents[0])
        for p in parents[1:]:
            component[find(p)] = anchor
        card = int(rng.integers(2, max_card + 1))
        obs_cards[o] = card
        a = NamedTensor((o, *parents), _random_cpt(rng, card, [cards[p] for p in parents]))
        builder.add_observation(o, a, parents)

    # optional singleton preferences over a random subset of observations
    chosen = list(obs_names)
    rng.shuffle(chosen)
    for o in chosen[:n_preferences]:
        w = rng.uniform(0.05, 1.0, size=obs_cards[o])
        builder.add_preference([o], NamedTensor((o,), w / w.sum()))

    return builder.build()


def random_state_beliefs(
    rng: np.random.Generator, model: TemporalSliceModel
) -> dict[str, Categorical]:
    return {
        name: random_belief(rng, name, spec.cardinality)
        for name, spec in model.states.items()
    }


def random_observation_values(
    rng: np.random.Generator, model: TemporalSliceModel
) -> dict[str, int]:
    return {
        name: int(rng.integers(spec.cardinality))
        for name, spec in model.observations.items()
    }
