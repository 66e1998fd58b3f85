"""Command-line entry point: ``etsc run | stats | folds``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .bench import EXIT_FATAL, RunConfig, run_experiment
from .core import DatasetError, dataset_stats, impute_missing, load_dataset, stratified_folds

# flag -> (algorithm ids, parameter name)
OVERRIDES = {
    "teaser_s": (("teaser", "teaser-z"), "n_prefixes"),
    "teaser_nu": (("teaser", "teaser-z"), "nu"),
    "ecec_n": (("ecec",), "n_prefixes"),
    "ecec_alpha": (("ecec",), "alpha"),
    "ecok_k": (("economy-k",), "k"),
    "ecok_lambda": (("economy-k",), "lam"),
    "ecok_cost": (("economy-k",), "time_cost"),
}


def _k_list(text: str):
    values = [int(v) for v in text.split(",") if v.strip()]
    return values[0] if len(values) == 1 else values


def _add_dataset_args(p):
    p.add_argument("dataset", help="path to a .csv or .ts dataset")
    p.add_argument("--format", choices=["csv", "ts"], default=None)
    p.add_argument("--dims", type=int, default=1, help="variables per row (csv only)")
    p.add_argument("--has-source", action="store_true", help="csv rows carry a source id column")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etsc", description="Early time-series classification benchmark")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark config")
    run.add_argument("--config", required=True)
    run.add_argument("--output-dir", default=None, help="overrides output_dir in the config")
    run.add_argument("--teaser-s", type=int, help="TEASER prefix count")
    run.add_argument("--teaser-znorm", action="store_true", help="z-normalize inside plain 'teaser' as well")
    run.add_argument("--teaser-nu", type=float, help="TEASER master rejection fraction")
    run.add_argument("--ecec-n", type=int, help="ECEC prefix count")
    run.add_argument("--ecec-alpha", type=float, help="ECEC accuracy weight")
    run.add_argument("--ecok-k", type=_k_list, help="ECONOMY-K cluster count(s), e.g. 1,2,3")
    run.add_argument("--ecok-lambda", type=float, help="ECONOMY-K sigmoid sharpness")
    run.add_argument("--ecok-cost", type=float, help="ECONOMY-K cost per time point")
    run.add_argument("--multivariate", choices=["vote"], default="vote",
                     help="how univariate algorithms handle multivariate data")

    stats = sub.add_parser("stats", help="print dataset statistics and categories")
    _add_dataset_args(stats)

    folds = sub.add_parser("folds", help="print a stratified fold assignment")
    _add_dataset_args(folds)
    folds.add_argument("--k", type=int, default=5)
    folds.add_argument("--seed", type=int, default=0)
    folds.add_argument("--by-source", action="store_true", help="stratify on source id instead of class")
    return parser


def apply_overrides(cfg: RunConfig, args) -> None:
    for flag, (ids, param) in OVERRIDES.items():
        value = getattr(args, flag)
        if value is None:
            continue
        for a in cfg.algorithms:
            if a["id"] in ids:
                a["params"][param] = value
    if args.teaser_znorm:
        for a in cfg.algorithms:
            if a["id"] == "teaser":
                a["params"]["znorm"] = True


def _load(args):
    return impute_missing(load_dataset(args.dataset, args.format, args.dims, args.has_source))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = RunConfig.from_json(args.config)
            if args.output_dir:
                cfg.output_dir = args.output_dir
            apply_overrides(cfg, args)
            records, code = run_experiment(cfg)
            ok = sum(r.status == "ok" for r in records)
            print(f"{ok}/{len(records)} jobs ok; reports in {cfg.output_dir}")
            return code
        d = _load(args)
        if args.command == "stats":
            print(json.dumps({"name": d.name, **dataset_stats(d).to_dict()}, indent=2))
        else:
            plan = stratified_folds(d, args.k, args.seed, key="source_id" if args.by_source else "class")
            print(json.dumps(plan.to_dict(), indent=2))
        return 0
    except (DatasetError, ValueError, OSError) as exc:
        print(f"etsc: error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
