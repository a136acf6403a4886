"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one ``[PASS]``/``[FAIL]`` line (run with ``pytest -s`` to
see them as they happen). The benchmark criterion runs the four full
100-simulation configurations and takes a few minutes; everything else is
fast.
"""

import functools
import json
import socket
import time

import numpy as np
import pytest

from belieftree.agent import Agent
from belieftree.efe import compute_ambiguity, efe
from belieftree.env_dsprites import DSpritesEnv, EnvConfig, make_model
from belieftree.harness import ExperimentConfig, run_experiment, write_jsonl
from belieftree.inference import i_step
from belieftree.inspector import make_service
from belieftree.model import TemporalSliceBuilder, next_axis
from belieftree.planner import PlannerConfig, TreeNode, plan
from belieftree.prediction import SliceBeliefs, p_step, p_step_states
from belieftree.tensors import Categorical, NamedTensor, kl_divergence, one_hot

from oracles import (
    enumerate_posteriors,
    mean_field_obs_oracle,
    mean_field_states_oracle,
)
from random_models import (
    random_model,
    random_observation_values,
    random_state_beliefs,
)


def criterion(label):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\n[FAIL] {label}")
                raise
            print(f"\n[PASS] {label}")
        return inner
    return wrap


def model_priors(model):
    return {name: spec.prior_d for name, spec in model.states.items()}


@criterion("inference exactness: 200 random models vs enumeration within 1e-9, < 10 s")
def test_inference_exactness():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    for _ in range(200):
        model = random_model(rng, max_states=5, max_obs=4, max_card=4)
        obs = random_observation_values(rng, model)
        priors = model_priors(model)
        posteriors = i_step(model, priors, obs)
        expected = enumerate_posteriors(model, priors, obs)
        for name, probs in expected.items():
            np.testing.assert_allclose(posteriors[name].probs, probs, atol=1e-9)
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.2f}s"


@criterion("prediction fidelity: 200 random models vs mean-field enumeration "
           "within 1e-12; single-parent exact within 1e-9")
def test_p_step_fidelity():
    rng = np.random.default_rng(2025)
    for _ in range(200):
        model = random_model(rng, max_states=4, max_obs=3)
        beliefs = random_state_beliefs(rng, model)
        action = int(rng.integers(model.n_actions))
        out = p_step(model, SliceBeliefs(beliefs), action)
        want_states = mean_field_states_oracle(model, beliefs, action)
        for name, probs in want_states.items():
            np.testing.assert_allclose(out.state_beliefs[name].probs, probs, atol=1e-12)
        want_obs = mean_field_obs_oracle(model, out.state_beliefs)
        for name, probs in want_obs.items():
            np.testing.assert_allclose(out.obs_beliefs[name].probs, probs, atol=1e-12)

    # single state parents: the mean-field prediction is the exact marginal
    rng = np.random.default_rng(2026)
    for _ in range(40):
        model = random_model(rng, max_states=4, single_parent_transitions=True)
        beliefs = random_state_beliefs(rng, model)
        action = int(rng.integers(model.n_actions))
        out = p_step_states(model, SliceBeliefs(beliefs), action)
        for name, spec in model.states.items():
            q = beliefs[name].probs
            exact = np.array(
                [
                    sum(
                        spec.transition_b.lookup({next_axis(name): c, name: p}) * q[p]
                        for p in range(spec.cardinality)
                    )
                    for c in range(spec.cardinality)
                ]
            )
            exact /= exact.sum()
            np.testing.assert_allclose(out[name].probs, exact, atol=1e-9)


@criterion("EFE correctness: matched-preference risk 0, undeclared exactly 0, "
           "deterministic ambiguity 0, singleton equivalence 1e-12, additivity 1e-9")
def test_efe_correctness():
    # (a) risk exactly 0 when the preference equals the mean-field joint,
    #     and undeclared observations contribute exactly 0
    b = TemporalSliceBuilder("A_1", 2)
    b.add_state("S_a", [0.5, 0.5]).add_state("S_b", [0.5, 0.5])
    for s in ("S_a", "S_b"):
        b.add_transition(s, NamedTensor((next_axis(s), s), np.eye(2)), [s])
    b.add_observation("O_a", NamedTensor(("O_a", "S_a"), np.eye(2)), ["S_a"])
    b.add_observation("O_b", NamedTensor(("O_b", "S_b"), np.eye(2)), ["S_b"])
    qa, qb = np.array([0.3, 0.7]), np.array([0.25, 0.75])
    b.add_preference(["O_a"], NamedTensor(("O_a",), qa))
    model = b.build()
    beliefs = SliceBeliefs(
        {"S_a": Categorical("S_a", qa), "S_b": Categorical("S_b", qb)},
        {"O_a": Categorical("O_a", qa), "O_b": Categorical("O_b", qb)},
    )
    breakdown = efe(model, beliefs)
    assert breakdown.risk_terms[("O_a",)] == 0.0
    assert ("O_b",) not in breakdown.risk_terms  # undeclared: exactly zero
    assert model.default_preference_obs == ("O_b",)
    assert breakdown.total == sum(breakdown.ambiguity_terms.values())

    # (b) ambiguity 0 for deterministic likelihoods
    for name, spec in model.observations.items():
        assert compute_ambiguity(name, spec, beliefs.state_beliefs) == 0.0

    # (c) singleton partitions equal the per-observation special case
    rng = np.random.default_rng(31415)
    for _ in range(100):
        m = random_model(rng, max_states=3, max_obs=3, n_preferences=3)
        parent = random_state_beliefs(rng, m)
        slice_beliefs = p_step(m, SliceBeliefs(parent), int(rng.integers(m.n_actions)))
        got = efe(m, slice_beliefs)
        direct = 0.0
        for pref in m.preferences:
            (obs_name,) = pref.obs_subset
            direct += kl_divergence(
                slice_beliefs.obs_beliefs[obs_name],
                Categorical(obs_name, pref.prefs_c.values),
            )
        for name, spec in m.observations.items():
            direct += compute_ambiguity(name, spec, slice_beliefs.state_beliefs)
        assert got.total == pytest.approx(direct, abs=1e-12)

        # (d) breakdown additivity
        parts = sum(got.risk_terms.values()) + sum(got.ambiguity_terms.values())
        assert got.total == pytest.approx(parts, abs=1e-9)


@criterion("planner invariants: visits/expansions/child counts for N in {1,10,50}; "
           "replay reconstructs every aggregated cost within 1e-9")
def test_planner_invariants():
    config = EnvConfig(granularity=8, rng_seed=0)
    model = make_model(config)
    obs = {"O_shape": 1, "O_scale": 2, "O_orientation": 3, "O_pos_x": 2, "O_pos_y": 1}
    for n_iter in (1, 10, 50):
        posteriors = i_step(model, model_priors(model), obs)
        root = TreeNode(SliceBeliefs(posteriors, {}))
        log = []
        action = plan(root, model, PlannerConfig(planning_iterations=n_iter), log=log)

        nodes = {node.id: node for node in root.walk()}
        expanded = [node for node in nodes.values() if node.children]
        assert root.visits == n_iter + 1
        assert len(expanded) == n_iter
        assert all(len(node.children) == 4 for node in expanded)
        chosen = root.children[action]
        assert all(chosen.visits >= sibling.visits for sibling in root.children)

        expected_cost = {
            nid: (node.efe_own.total if node.efe_own else 0.0)
            for nid, node in nodes.items()
        }
        for record in log:
            node = nodes[record.selected_id]
            while node is not None:
                expected_cost[node.id] += record.min_efe
                node = node.parent
        for nid, node in nodes.items():
            assert node.cost_aggr == pytest.approx(expected_cost[nid], abs=1e-9)


@criterion("dynamics/model agreement: exhaustive position x action at granularity 8; "
           "1000 sampled pairs at granularity 1")
def test_dynamics_model_agreement():
    def check(model, cfg, x_px, y_px, action):
        env = DSpritesEnv(cfg)
        env.reset()
        env.x_pixel, env.y_pixel = x_px, y_px
        before = SliceBeliefs(
            {
                "S_pos_x": one_hot("S_pos_x", cfg.n_x_cells, env.x_cell),
                "S_pos_y": one_hot("S_pos_y", cfg.n_y_cells, env.y_cell),
                "S_shape": one_hot("S_shape", 3, env.shape),
                "S_scale": one_hot("S_scale", 6, env.scale),
                "S_orientation": one_hot("S_orientation", 40, env.orientation),
            }
        )
        predicted = p_step_states(model, before, action)
        after = env.execute(action)
        assert predicted["S_pos_x"].argmax() == after["O_pos_x"]
        assert predicted["S_pos_y"].argmax() == after["O_pos_y"]
        assert predicted["S_pos_x"].probs.max() == pytest.approx(1.0, abs=1e-12)
        assert predicted["S_pos_y"].probs.max() == pytest.approx(1.0, abs=1e-12)

    cfg8 = EnvConfig(granularity=8, rng_seed=0)
    model8 = make_model(cfg8)
    for x_px in range(32):
        for y_px in range(32):
            for action in range(4):
                check(model8, cfg8, x_px, y_px, action)

    rng = np.random.default_rng(777)
    cfg1 = EnvConfig(granularity=1, rng_seed=0)
    model1 = make_model(cfg1)
    for _ in range(1000):
        check(
            model1, cfg1,
            int(rng.integers(32)), int(rng.integers(32)), int(rng.integers(4)),
        )


BENCHMARK_ROWS = (
    # granularity, planning iterations, reference P(solved), tolerance kind
    (8, 50, 0.895),
    (4, 50, 0.977),
    (2, 50, 0.996),
)


@criterion("benchmark reproduction: P(solved) within 0.05 of 0.895/0.977/0.996 "
           "at g=8/4/2 (50 iters) and >= 0.95 at g=1 (150 iters)")
def test_benchmark_reproduction():
    measured = {}
    for granularity, iterations, reference in BENCHMARK_ROWS:
        config = ExperimentConfig(
            granularity=granularity,
            planning_iterations=iterations,
            n_simulations=100,
            max_cycles=50,
            exploration_constant=2.4,
            preference_precision=1.0,
            rng_seed=0,
        )
        report = run_experiment(config)
        measured[(granularity, iterations)] = report.p_solved
        print(
            f"\n  g={granularity} iters={iterations}: P(solved)={report.p_solved:.4f} "
            f"(reference {reference}); mean episode {report.mean_time:.3f}s "
            f"(+/- {report.std_time:.3f}s, recorded, not asserted)"
        )
        assert abs(report.p_solved - reference) <= 0.05, (
            f"g={granularity}: {report.p_solved:.4f} not within 0.05 of {reference}"
        )

    config = ExperimentConfig(
        granularity=1, planning_iterations=150, n_simulations=100,
        max_cycles=50, exploration_constant=2.4, preference_precision=1.0,
        rng_seed=0,
    )
    report = run_experiment(config)
    print(
        f"\n  g=1 iters=150: P(solved)={report.p_solved:.4f} (reference 1.0); "
        f"mean episode {report.mean_time:.3f}s (recorded, not asserted)"
    )
    assert report.p_solved >= 0.95


@criterion("determinism: two same-seed harness runs write byte-identical JSONL")
def test_harness_determinism(tmp_path):
    config = ExperimentConfig(
        granularity=8, planning_iterations=25, n_simulations=20, rng_seed=4242
    )
    blobs = []
    for i in range(2):
        report = run_experiment(config)
        path = tmp_path / f"run{i}.jsonl"
        write_jsonl(report.records, str(path))
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]


@criterion("inspector protocol conformance: scripted reset -> step_planning x3 -> "
           "execute_best_action satisfies the planner invariants")
def test_inspector_protocol_conformance():
    config = EnvConfig(granularity=8, rng_seed=21)
    env = DSpritesEnv(config)
    agent = Agent(make_model(config), PlannerConfig(planning_iterations=6))
    service = make_service(env, agent, port=0)
    service.start_background()
    try:
        with socket.create_connection(("127.0.0.1", service.ndjson_port), timeout=5) as s:
            f = s.makefile("rw", encoding="utf-8")

            def call(i, cmd, args=None):
                f.write(json.dumps({"id": i, "cmd": cmd, "args": args or {}}) + "\n")
                f.flush()
                response = json.loads(f.readline())
                assert response["id"] == i and response["ok"] is True, response
                return response["payload"]

            call(0, "reset")
            for i in range(3):
                payload = call(i + 1, "step_planning", {"k": 1})
            tree = payload["tree"]
            root = next(n for n in tree["nodes"] if n["id"] == tree["root"])
            assert root["visits"] == 4  # three iterations + initial visit
            expanded = [n for n in tree["nodes"] if n["children"]]
            assert len(expanded) == 3
            assert all(len(n["children"]) == 4 for n in expanded)
            for node in tree["nodes"]:
                if node["efe"] is not None:
                    shown = sum(t["value"] for t in node["efe"]["risk"]) + sum(
                        t["value"] for t in node["efe"]["ambiguity"]
                    )
                    assert node["efe"]["total"] == pytest.approx(shown, abs=1e-9)

            outcome = call(9, "execute_best_action")
            assert outcome["action"] in range(4)
            fresh_root = next(
                n for n in outcome["tree"]["nodes"] if n["id"] == outcome["tree"]["root"]
            )
            assert fresh_root["visits"] == 1 and fresh_root["children"] == []
    finally:
        service.close()
