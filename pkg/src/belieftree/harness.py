"""Benchmark harness: run many seeded trials, report P(solved) and timing.

A trial builds one environment and one agent, runs action-perception
cycles until the episode ends, and records the reward, cycle count,
terminal status, and wall-clock time. Trials are seeded independently
from the experiment seed, so results are byte-identical across runs and
unaffected by how many worker processes ran them. Timing is the one
nondeterministic quantity, which is why JSONL record lines carry the
deterministic fields only and the wall-clock statistics live in the
summary.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from multiprocessing import get_context
from statistics import mean, pstdev

import numpy as np

from .agent import Agent
from .env_dsprites import DSpritesEnv, EnvConfig, make_model
from .planner import PlannerConfig


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark configuration (defaults mirror the reference setup)."""

    granularity: int = 1
    planning_iterations: int = 50
    n_simulations: int = 100
    max_cycles: int = 50
    exploration_constant: float = 2.4
    preference_precision: float = 1.0
    rng_seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class EpisodeRecord:
    """Outcome of one trial; ``seconds`` never reaches the JSONL output."""

    trial: int
    reward: float
    cycles: int
    seconds: float
    status: str  # goal | antipode | timeout

    def to_jsonl_dict(self) -> dict:
        return {
            "trial": self.trial,
            "reward": self.reward,
            "cycles": self.cycles,
            "status": self.status,
        }


@dataclass(frozen=True)
class Report:
    """Aggregated experiment outcome.

    ``traces`` holds step-level entries only when the experiment ran with
    trace collection enabled.
    """

    config: ExperimentConfig
    p_solved: float
    mean_time: float
    std_time: float
    records: tuple[EpisodeRecord, ...]
    traces: tuple[dict, ...] = ()

    def summary_dict(self) -> dict:
        return {
            "granularity": self.config.granularity,
            "planning_iterations": self.config.planning_iterations,
            "n_simulations": self.config.n_simulations,
            "max_cycles": self.config.max_cycles,
            "exploration_constant": self.config.exploration_constant,
            "preference_precision": self.config.preference_precision,
            "rng_seed": self.config.rng_seed,
            "p_solved": self.p_solved,
            "mean_time_seconds": self.mean_time,
            "std_time_seconds": self.std_time,
        }


def trial_seed(experiment_seed: int, trial: int) -> int:
    """Stable per-trial seed independent of worker scheduling."""
    ss = np.random.SeedSequence([experiment_seed, trial])
    return int(ss.generate_state(1)[0])


def _state_doc(env: DSpritesEnv) -> dict:
    state = env.state
    return {
        "shape": state.shape,
        "scale": state.scale,
        "orientation": state.orientation,
        "x_cell": state.x_cell,
        "y_cell": state.y_cell,
    }


def run_episode(
    config: ExperimentConfig, trial: int, trace: list[dict] | None = None
) -> EpisodeRecord:
    """One full trial: reset, cycle until done, score.

    When ``trace`` is given, one step-level dict per executed action is
    appended: {trial, step, state, action, reward, done}, with the reward
    present only on the final step.
    """
    env_config = EnvConfig(
        granularity=config.granularity,
        max_cycles=config.max_cycles,
        rng_seed=trial_seed(config.rng_seed, trial),
    )
    env = DSpritesEnv(env_config)
    model = make_model(env_config, config.preference_precision)
    agent = Agent(
        model,
        PlannerConfig(
            planning_iterations=config.planning_iterations,
            exploration_constant=config.exploration_constant,
        ),
    )

    start = time.perf_counter()
    obs = env.reset()
    agent.reset(obs)
    step = 0
    while not env.done:
        action = agent.step()
        obs = env.execute(action)
        agent.update(action, obs)
        if trace is not None:
            trace.append(
                {
                    "trial": trial,
                    "step": step,
                    "state": _state_doc(env),
                    "action": action,
                    "reward": env.reward() if env.done else None,
                    "done": env.done,
                }
            )
        step += 1
    seconds = time.perf_counter() - start

    reward = env.reward()
    if not env.absorbed:
        status = "timeout"
    elif reward > 0:
        status = "goal"
    else:
        status = "antipode"
    return EpisodeRecord(
        trial=trial,
        reward=reward,
        cycles=env.cycles_elapsed,
        seconds=seconds,
        status=status,
    )


def _episode_job(args: tuple) -> tuple[EpisodeRecord, list[dict]]:
    config, trial, with_trace = args
    trace: list[dict] = []
    record = run_episode(config, trial, trace=trace if with_trace else None)
    return record, trace


def run_experiment(config: ExperimentConfig, with_traces: bool = False) -> Report:
    """Run every trial (optionally in a worker pool) and aggregate."""
    jobs = [(config, t, with_traces) for t in range(config.n_simulations)]
    if config.workers > 1:
        ctx = get_context("fork")
        with ctx.Pool(config.workers) as pool:
            outcomes = pool.map(_episode_job, jobs)
    else:
        outcomes = [_episode_job(job) for job in jobs]
    outcomes.sort(key=lambda pair: pair[0].trial)
    records = [record for record, _ in outcomes]
    traces = [entry for _, trace in outcomes for entry in trace]

    total_reward = sum(r.reward for r in records)
    times = [r.seconds for r in records]
    return Report(
        config=config,
        p_solved=DSpritesEnv.p_solved(total_reward, len(records)),
        mean_time=mean(times),
        std_time=pstdev(times) if len(times) > 1 else 0.0,
        records=tuple(records),
        traces=tuple(traces),
    )


def write_jsonl(records: tuple[EpisodeRecord, ...] | list[EpisodeRecord], path: str) -> None:
    """Write one deterministic JSON object per trial, sorted by trial id."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in sorted(records, key=lambda r: r.trial):
            fh.write(json.dumps(record.to_jsonl_dict(), sort_keys=True))
            fh.write("\n")


def write_trace_jsonl(traces: tuple[dict, ...] | list[dict], path: str) -> None:
    """Write collected step-level trace entries as JSON lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for entry in traces:
            fh.write(json.dumps(entry, sort_keys=True))
            fh.write("\n")


def p_solved_from_jsonl(path: str) -> float:
    """Recompute the metric from a written record file."""
    rewards = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rewards.append(json.loads(line)["reward"])
    return DSpritesEnv.p_solved(sum(rewards), len(rewards))
