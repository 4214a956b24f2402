"""Command-line entry points: run / aggregate / replay / serve."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, ContractViolation, GenerationError
from .harness import (
    ExperimentConfig,
    emit_curves,
    load_manifest,
    load_runs,
    replay_run,
    run_experiment,
)


def _load_config(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _cmd_run(args) -> int:
    raw = _load_config(args.config)
    if args.agent:
        raw["agents"] = [args.agent]
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.out:
        raw["out_dir"] = args.out
    cfg = ExperimentConfig.from_dict(raw)
    results = run_experiment(cfg, out_dir=cfg.out_dir, workers=args.workers)
    emit_curves(cfg, results, cfg.out_dir)
    print(f"wrote {len(results)} runs to {cfg.out_dir}")
    return 0


def _cmd_aggregate(args) -> int:
    cfg, _ = load_manifest(args.in_dir)
    results = load_runs(args.in_dir, cfg)
    curves = emit_curves(cfg, results, args.in_dir)
    print(f"aggregated {len(results)} runs into {len(curves)} curves under {args.in_dir}")
    return 0


def _cmd_replay(args) -> int:
    ok, message = replay_run(args.in_dir, args.run_id)
    print(message)
    return 0 if ok else 1


def _cmd_serve(args) -> int:
    import uvicorn

    from .live import LiveConfig, create_app

    app = create_app(LiveConfig(layout_seed=args.layout_seed, tick_ms=args.tick_ms,
                                ui_dir=args.ui))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hilrl",
                                     description="Human-in-the-loop RL workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--agent", choices=["dqn", "dqn-shaping", "deep-tamer", "dqn-tamer"])
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--workers", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_agg = sub.add_parser("aggregate", help="build curves from stored runs")
    p_agg.add_argument("--in", dest="in_dir", required=True)
    p_agg.set_defaults(func=_cmd_aggregate)

    p_rep = sub.add_parser("replay", help="re-execute one run and diff it")
    p_rep.add_argument("--run-id", required=True)
    p_rep.add_argument("--in", dest="in_dir", default="results")
    p_rep.set_defaults(func=_cmd_replay)

    p_srv = sub.add_parser("serve", help="start the live feedback service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.add_argument("--tick-ms", type=int, default=500)
    p_srv.add_argument("--layout-seed", type=int, default=0)
    p_srv.add_argument("--ui", default=None, help="directory with the built web UI")
    p_srv.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractViolation, GenerationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
