"""``mirlab`` command line: generate, train, compare, report (plus make-base for synthetic inputs).

Any flag may also be set through an environment variable named
``MIRLAB_<FLAG>``, e.g. ``MIRLAB_SEP_TIME_LIMIT=5``.  Command-line values win.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import ConfigError, MirlabError, ParseError, SchemaMismatch
from .harness import ExperimentConfig, cmd_compare, cmd_generate, cmd_report, cmd_train
from .instances import knapsack2, synthetic_base
from .mps import write_mps

ENV_PREFIX = "MIRLAB_"
EXIT_OK = 0
EXIT_PARSE = 3
EXIT_CONFIG = 4
EXIT_RUNTIME = 5


def _env(name: str, default):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _optional_int(text: str) -> int | None:
    return None if str(text).lower() in ("", "none", "0") else int(text)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=_env("out", "mirlab-out"), help="output directory")
    p.add_argument("--seed", type=int, default=int(_env("seed", 0)), help="root seed")
    p.add_argument("--workers", type=int, default=int(_env("workers", 1)))
    p.add_argument("--threshold", type=float, default=float(_env("threshold", 0.5)),
                   help="classifier probability cut-off")
    p.add_argument("-v", "--verbose", action="store_true")


def _loop(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sep-time-limit", type=float, default=float(_env("sep_time_limit", 600.0)),
                   help="seconds per separation solve")
    p.add_argument("--loop-time-limit", type=float, default=float(_env("loop_time_limit", 10800.0)),
                   help="seconds per cutting loop")
    p.add_argument("--max-rounds", type=_optional_int, default=_optional_int(_env("max_rounds", "none")))
    p.add_argument("--node-limit", type=_optional_int, default=_optional_int(_env("node_limit", 2000)),
                   help="branch-and-bound nodes per separation solve (0 = unlimited)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mirlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a family and run the full separator on it")
    g.add_argument("--base", default=_env("base", None), help="base MPS file or builtin:NAME")
    g.add_argument("--family-size", type=int, default=int(_env("family_size", 20)))
    g.add_argument("--min-gap", type=float, default=float(_env("min_gap", 5.0)),
                   help="keep variations closing at least this percentage")
    for flag in ("pos-mean", "pos-std", "neg-mean", "neg-std"):
        env = _env(flag, None)
        g.add_argument(f"--{flag}", type=float, default=None if env is None else float(env),
                       help="perturbation moment (default: empirical moment of the base objective)")
    _common(g)
    _loop(g)

    t = sub.add_parser("train", help="train the row classifier on a generated dataset")
    t.add_argument("dataset", help="dataset.csv written by generate")
    t.add_argument("--split", type=float, default=float(_env("split", 0.2)), help="test fraction")
    _common(t)

    c = sub.add_parser("compare", help="run the reduced separator and pair it with the full traces")
    c.add_argument("manifest", help="manifest.json written by generate")
    c.add_argument("model", help="model.json written by train")
    _common(c)
    _loop(c)

    r = sub.add_parser("report", help="aggregate compare.csv into per-round figure data")
    r.add_argument("compare", help="compare.csv written by compare")
    _common(r)

    b = sub.add_parser("make-base", help="write a synthetic base instance as MPS")
    b.add_argument("path")
    b.add_argument("--kind", choices=("synthetic", "knapsack2"), default="synthetic")
    b.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    kw = {"out": Path(args.out), "seed": args.seed, "workers": args.workers, "threshold": args.threshold}
    for name in ("base", "family_size", "min_gap", "split", "sep_time_limit", "loop_time_limit",
                 "max_rounds", "node_limit", "pos_mean", "pos_std", "neg_mean", "neg_std"):
        if hasattr(args, name):
            kw[name] = getattr(args, name)
    return ExperimentConfig(**kw)


def run(args: argparse.Namespace) -> None:
    if args.command == "make-base":
        general = knapsack2() if args.kind == "knapsack2" else synthetic_base(args.seed)
        write_mps(general, args.path)
        print(args.path)
        return
    config = config_from_args(args)
    if args.command == "generate":
        doc = cmd_generate(config)
        print(f"{len(doc['variations'])} variations: {len(doc['kept'])} kept, "
              f"{len(doc['discarded'])} discarded, {len(doc['failed'])} failed -> {config.out}")
    elif args.command == "train":
        res = cmd_train(args.dataset, config)
        for side in ("train", "test"):
            rep = res["reports"][side]
            print(f"{side}: accuracy={rep.accuracy} precision={rep.precision} recall={rep.recall}")
    elif args.command == "compare":
        rows = cmd_compare(args.manifest, args.model, config)
        print(f"{len(rows)} rows -> {config.out / 'compare.csv'}")
    elif args.command == "report":
        cmd_report(args.compare, config)
        print(f"-> {config.out / 'report.csv'}, {config.out / 'summary.csv'}")


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ValueError as exc:  # a bad MIRLAB_* value
        print(f"mirlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except (ParseError, SchemaMismatch, FileNotFoundError) as exc:
        print(f"mirlab: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigError as exc:
        print(f"mirlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MirlabError, OSError, RuntimeError) as exc:
        print(f"mirlab: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
