"""Command line entry point: run / serve / replay."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import List, Optional

from .controller import Mode
from .server import load_scenario, replay, run_headless, serve
from .sim import ScenarioConfig, ScenarioError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trafwarden",
        description="Gesture-directed four-way intersection simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="headless batch run")
    run_p.add_argument("--scenario", help="scenario file (defaults when omitted)")
    run_p.add_argument("--policy", choices=["round_robin", "queue_priority"],
                       default="round_robin")
    run_p.add_argument("--seed", type=int, help="override the scenario seed")
    run_p.add_argument("--out-dir", default="out")

    serve_p = sub.add_parser("serve", help="live session for the operator UI")
    serve_p.add_argument("--scenario")
    serve_p.add_argument("--bind", default="127.0.0.1:8765",
                         help="host:port to listen on")
    serve_p.add_argument("--fps", type=float, default=20.0,
                         help="state snapshots per second")

    replay_p = sub.add_parser("replay", help="re-run a recorded command trace")
    replay_p.add_argument("--trace", required=True)
    replay_p.add_argument("--scenario")
    replay_p.add_argument("--out-dir", default="out")
    return parser


def _scenario(path: Optional[str]) -> ScenarioConfig:
    if path is None:
        cfg = ScenarioConfig()
        cfg.validate()
        cfg.validate_demand()
        return cfg
    return load_scenario(path)


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=os.environ.get("TRAFWARDEN_LOG", "INFO").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _scenario(args.scenario)
            report = run_headless(cfg, Mode(args.policy),
                                  out_dir=args.out_dir, seed=args.seed)
            logging.getLogger("trafwarden").info(
                "run complete: %d crossed, mean delay %.3f s, conflicts %d",
                report.total.crossed, report.total.mean_delay, report.conflicts)
        elif args.command == "serve":
            cfg = _scenario(args.scenario)
            host, _, port = args.bind.rpartition(":")
            if not host or not port.isdigit():
                raise ScenarioError("bind", f"expected host:port, got {args.bind!r}")
            serve(cfg, host, int(port), fps=args.fps)
        else:
            cfg = _scenario(args.scenario)
            report = replay(args.trace, cfg, out_dir=args.out_dir)
            logging.getLogger("trafwarden").info(
                "replay complete: %d crossed, mean delay %.3f s",
                report.total.crossed, report.total.mean_delay)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
