"""Command-line entry points: benchmark runs and the live inspector."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agent import Agent
from .env_dsprites import DSpritesEnv, EnvConfig, make_model
from .harness import ExperimentConfig, run_experiment, write_jsonl, write_trace_jsonl
from .inspector import make_service
from .planner import PlannerConfig


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--granularity", type=int, default=1,
                        help="observation coarse-graining factor (1, 2, 4 or 8)")
    parser.add_argument("--planning-iterations", type=int, default=50,
                        help="tree-search iterations per action")
    parser.add_argument("--max-cycles", type=int, default=50,
                        help="action-perception cycles before timeout")
    parser.add_argument("--exploration", type=float, default=2.4,
                        help="UCT exploration constant")
    parser.add_argument("--precision", type=float, default=1.0,
                        help="prior-preference precision")
    parser.add_argument("--seed", type=int, default=0, help="experiment seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="belieftree",
        description="Factored active-inference planning benchmark and inspector.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark experiment")
    _add_common_flags(run)
    run.add_argument("--simulations", type=int, default=100,
                     help="number of independent trials")
    run.add_argument("--out", type=Path, default=None,
                     help="write per-episode JSONL records here")
    run.add_argument("--trace", type=Path, default=None,
                     help="write step-level JSONL trace entries here")
    run.add_argument("--workers", type=int, default=1,
                     help="worker processes for independent trials")

    inspect = sub.add_parser("inspect", help="serve the live inspector")
    _add_common_flags(inspect)
    inspect.add_argument("--port", type=int, default=5800,
                         help="NDJSON command port")
    inspect.add_argument("--http-port", type=int, default=None,
                         help="optional HTTP bridge (POST /api) and UI port")
    inspect.add_argument("--ui-dir", type=Path, default=None,
                         help="directory with the built browser UI to serve")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        granularity=args.granularity,
        planning_iterations=args.planning_iterations,
        n_simulations=args.simulations,
        max_cycles=args.max_cycles,
        exploration_constant=args.exploration,
        preference_precision=args.precision,
        rng_seed=args.seed,
        workers=args.workers,
    )
    report = run_experiment(config, with_traces=args.trace is not None)
    try:
        if args.out is not None:
            write_jsonl(report.records, str(args.out))
        if args.trace is not None:
            write_trace_jsonl(report.traces, str(args.trace))
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(report.summary_dict(), sort_keys=True))
    return 0


def _default_ui_dir() -> Path | None:
    # repo checkout layout: frontend/ sits two levels above src/belieftree/
    candidate = Path(__file__).resolve().parents[2] / "frontend"
    return candidate if (candidate / "index.html").exists() else None


def _cmd_inspect(args: argparse.Namespace) -> int:
    env_config = EnvConfig(
        granularity=args.granularity,
        max_cycles=args.max_cycles,
        rng_seed=args.seed,
    )
    env = DSpritesEnv(env_config)
    model = make_model(env_config, args.precision)
    agent = Agent(
        model,
        PlannerConfig(
            planning_iterations=args.planning_iterations,
            exploration_constant=args.exploration,
        ),
    )
    ui_dir = args.ui_dir if args.ui_dir is not None else _default_ui_dir()
    service = make_service(
        env,
        agent,
        port=args.port,
        http_port=args.http_port,
        ui_dir=ui_dir,
    )
    print(
        json.dumps(
            {
                "ndjson_port": service.ndjson_port,
                "http_port": service.http_port,
                "ui": str(ui_dir) if (ui_dir and args.http_port) else None,
            }
        ),
        flush=True,
    )
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.close()
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "inspect":
        return _cmd_inspect(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
