"""Command-line entry point: ura siso|mimo|predict --config FILE [...]."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .errors import ConfigError, ResourceRefusalError
from .harness import load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ura",
        description="Unsourced random access link simulations and predictors; "
                    "emits CSV to --out or stdout.")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name, blurb in (("siso", "scalar-channel Monte Carlo"),
                        ("mimo", "block-fading MIMO Monte Carlo"),
                        ("predict", "closed-form complexity predictors")):
        s = sub.add_parser(name, help=blurb)
        s.add_argument("--config", required=True, help="JSON config file")
        s.add_argument("--out", help="output CSV path (default: stdout)")
        s.add_argument("--seed", type=int, help="override master_seed")
        s.add_argument("--trials", type=int, help="override trial count")
        s.add_argument("--workers", type=int, help="override worker count")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.scenario != args.scenario:
            raise ConfigError(f"scenario: config says {cfg.scenario!r} but the "
                              f"command is {args.scenario!r}")
        overrides = {}
        if args.out is not None:
            overrides["out"] = args.out
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.trials is not None:
            if args.trials < 1:
                raise ConfigError("trials: must be at least 1")
            overrides["trials"] = args.trials
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("workers: must be at least 1")
            overrides["workers"] = args.workers
        if overrides:
            cfg = replace(cfg, **overrides)
        text = run_experiment(cfg)
        if not cfg.out:
            sys.stdout.write(text)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ResourceRefusalError as e:
        print(f"resource refusal: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
