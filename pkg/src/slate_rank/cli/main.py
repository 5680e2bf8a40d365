"""Console entry point: argument parsing and exit-code mapping."""

import argparse
import sys

from ..errors import (ConfigError, DataError, MetricError, ShapeError,
                      TrainingError, UsageError)
from .commands import cmd_eval, cmd_prepare, cmd_sweep, cmd_train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slate-rank",
        description="Train and evaluate slate-aware ranking models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="build a dataset from MovieLens "
                       "ratings or the synthetic generator")
    p.add_argument("--config", required=True, help="INI run config")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train a model on a prepared dataset")
    p.add_argument("--config", required=True, help="INI run config")
    p.add_argument("--out", required=True, help="output run directory")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p.add_argument("--config", required=True, help="INI run config")
    p.add_argument("--out", required=True, help="output report directory")
    p.add_argument("--export-embeddings", action="store_true",
                   help="write paired encoder-head vectors and histograms")
    p.add_argument("--diversity", action="store_true",
                   help="compare top-k exposure concentration against "
                        "[eval] compare_checkpoint")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train across a grid of similarity "
                       "loss weights")
    p.add_argument("--config", required=True, help="INI run config")
    p.add_argument("--out", required=True, help="output table directory")
    p.add_argument("--seed", type=int, default=None,
                   help="run a single seed instead of the config list")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers per sweep")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, UsageError, DataError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TrainingError, MetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
