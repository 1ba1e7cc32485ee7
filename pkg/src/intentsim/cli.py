"""Command-line entry points: batch experiments, single-episode tracing with
working-memory dumps, the live human-in-the-loop server, and metric recomputation
from result files."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import Config, apply_overrides, load_config
from .harness import (
    compute_metrics,
    read_results,
    report_text,
    run_batch,
    run_episode,
    write_report,
    write_results,
)
from .perception import NoiseModel
from .world import ScenarioError, load_scenario, sample_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCENARIO = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        raise SystemExit((EXIT_USAGE, f"{self.prog}: error: {message}"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="intentsim", description=__doc__)
    parser.add_argument("--config", type=Path, default=None,
                        help="YAML config file overriding nav.*/perception.*/atm.*/person.*/world.* keys")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="seeded batch experiment")
    run.add_argument("--scenario", type=Path, required=True)
    run.add_argument("--episodes", type=int, default=180)
    run.add_argument("--master-seed", type=int, default=0)
    run.add_argument("--pos-sigma", type=float, default=0.0)
    run.add_argument("--size-sigma", type=float, default=0.0)
    run.add_argument("--out", type=Path, required=True)

    trace = sub.add_parser("trace", help="single episode with full traces")
    trace.add_argument("--scenario", type=Path, required=True)
    trace.add_argument("--seed", type=int, default=0)
    trace.add_argument("--pos-sigma", type=float, default=0.0)
    trace.add_argument("--size-sigma", type=float, default=0.0)
    trace.add_argument("--out", type=Path, required=True)

    serve = sub.add_parser("serve", help="live human-in-the-loop mode")
    serve.add_argument("--scenario", type=Path, required=True)
    serve.add_argument("--port", type=int, default=8732)
    serve.add_argument("--host", default="127.0.0.1")

    metrics = sub.add_parser("metrics", help="recompute a report from results")
    metrics.add_argument("--in", dest="infile", type=Path, required=True)
    return parser


def _load_cfg(args) -> Config:
    cfg = Config()
    if args.config is not None:
        cfg = load_config(args.config, cfg)
    return cfg


def _cmd_run(args, cfg: Config) -> int:
    base = load_scenario(args.scenario)
    noise = NoiseModel(pos_sigma=args.pos_sigma, size_inflation_sigma=args.size_sigma)
    results, report, failures = run_batch(
        base, args.episodes, noise, args.master_seed, out_dir=args.out, cfg=cfg)
    sys.stdout.write(report_text(report, failures))
    return EXIT_OK


def _cmd_trace(args, cfg: Config) -> int:
    base = load_scenario(args.scenario)
    scenario = sample_scenario(base, args.seed)
    records: list[dict] = []
    dumps: list[tuple[int, str]] = []
    noise = NoiseModel(pos_sigma=args.pos_sigma, size_inflation_sigma=args.size_sigma,
                       seed=args.seed)
    result = run_episode(
        scenario, cfg, noise,
        trace=records.append,
        wm_dump_hook=lambda tick, text: dumps.append((tick, text)),
    )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", encoding="utf-8") as handle:
        handle.write(json.dumps({"episode": result.__dict__}) + "\n")
        for record in records:
            handle.write(json.dumps({"simulation": record}) + "\n")
        for tick, text in dumps:
            handle.write(json.dumps({"memory_dump": {"tick": tick, "text": text}}) + "\n")
    sys.stdout.write(f"episode seed={scenario.seed} truth={result.truth_collision} "
                     f"predicted={result.predicted_risky} action={result.action_found}\n"
                     f"trace written to {args.out}\n")
    return EXIT_OK


def _cmd_serve(args, cfg: Config) -> int:
    import uvicorn

    from .hitl import build_app

    scenario = load_scenario(args.scenario)
    app = build_app(scenario, cfg)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _cmd_metrics(args, cfg: Config) -> int:
    results = read_results(args.infile)
    report = compute_metrics(results)
    sys.stdout.write(report_text(report))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if isinstance(exc.code, tuple):
            code, message = exc.code
            print(message, file=sys.stderr)
            return code
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = _load_cfg(args)
    except (KeyError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handlers = {"run": _cmd_run, "trace": _cmd_trace, "serve": _cmd_serve,
                "metrics": _cmd_metrics}
    try:
        return handlers[args.command](args, cfg)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except FileNotFoundError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except KeyboardInterrupt:
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logging.exception("runtime failure")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
