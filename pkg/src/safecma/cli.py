"""Command-line entry point: run experiments, drive sweeps, list problems,
and render figures from summary CSVs."""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

from . import plots, problems, runner


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--problem", choices=sorted(problems.BENCHMARKS))
    parser.add_argument("--dim", type=int)
    parser.add_argument("--safety", choices=problems.SAFETY_KINDS)
    parser.add_argument("--algo", choices=runner.ALGORITHMS)
    parser.add_argument("--budget", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", dest="out_dir")
    parser.add_argument("--n-seed", dest="n_seed", type=int)
    parser.add_argument("--sigma0", type=float)
    parser.add_argument("--lambda", dest="lam", type=int)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--zeta-init", dest="zeta_init", type=float)
    parser.add_argument("--t-data", dest="t_data", type=int)
    parser.add_argument("--l-min", dest="l_min", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--w-safe", dest="w_safe", type=float)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--label")


def _config_from_args(args) -> runner.ExperimentConfig:
    if args.config:
        config = runner.ExperimentConfig.from_json(args.config)
    else:
        config = runner.ExperimentConfig()
    for f in fields(runner.ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(config, f.name, value)
    config.validate()
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safecma")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment configuration")
    _add_run_flags(run_p)

    sweep_p = sub.add_parser("sweep", help="run a hyperparameter sweep")
    _add_run_flags(sweep_p)
    sweep_p.add_argument("--param", required=True, choices=sorted(runner.SWEEPABLE))
    sweep_p.add_argument("--values", nargs="+", type=float,
                         help="override the default sweep values")

    sub.add_parser("list-problems", help="list benchmark problems and safety kinds")

    plot_p = sub.add_parser("plot", help="render figures from summary CSVs")
    plot_p.add_argument("--summary", nargs="+", required=True)
    plot_p.add_argument("--out", required=True)
    plot_p.add_argument("--mode", choices=("compare", "sweep"), default="compare")
    plot_p.add_argument("--title")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if args.command == "list-problems":
            for name in sorted(problems.BENCHMARKS):
                print(name)
            print("safety kinds:", ", ".join(problems.SAFETY_KINDS))
            return 0

        if args.command == "run":
            config = _config_from_args(args)
            summary = runner.run_experiment(config)
            print(summary)
            return 0

        if args.command == "sweep":
            config = _config_from_args(args)
            values = args.values
            if values is not None and args.param == "t_data":
                values = [int(v) for v in values]
            for path in runner.sweep(config, args.param, values):
                print(path)
            return 0

        if args.command == "plot":
            out = plots.render(args.summary, args.out, mode=args.mode, title=args.title)
            print(out)
            return 0
    except (ValueError, KeyError, FileNotFoundError,
            plots.SummarySchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
