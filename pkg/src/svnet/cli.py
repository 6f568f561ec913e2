"""``svnet`` command line: generate, infer, analyze, report.

Exit status is 0 on success, 1 on a configuration error and 2 on a data
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, DataError
from .fdr import FDR_MODES
from .ingest import write_attributes, write_calendar, write_transactions
from .links import UNIVERSES
from .pipeline import PipelineConfig, run_analyze, run_infer, run_report
from .synthetic import ScenarioConfig, generate

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2


def _pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--transactions")
    p.add_argument("--attributes")
    p.add_argument("--calendar")
    p.add_argument("--mature", help="comma-separated mature security ids")
    p.add_argument("--data-end", help="last date covered by the data (default: latest trade)")
    p.add_argument("--theta", type=float)
    p.add_argument("--min-days", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--fdr-mode", choices=FDR_MODES)
    p.add_argument("--universe", choices=UNIVERSES)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--no-expression", action="store_true", help="skip attribute expression in analyze")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svnet", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset with ground truth")
    g.add_argument("scenario", help="scenario JSON file")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, help="override the scenario seed")

    for name, text in (("infer", "validated networks and clusters per security and window"),
                       ("analyze", "cluster similarity, expression and summary tables"),
                       ("report", "FDR curves and a text digest")):
        _pipeline_flags(sub.add_parser(name, help=text))
    return parser


def _config(args: argparse.Namespace) -> PipelineConfig:
    mature = None if args.mature is None else [m for m in args.mature.split(",") if m]
    return PipelineConfig.load(
        args.config,
        transactions=args.transactions, attributes=args.attributes, calendar=args.calendar,
        mature=mature, data_end=args.data_end, theta=args.theta, min_days=args.min_days, alpha=args.alpha,
        fdr_mode=args.fdr_mode, universe=args.universe, trials=args.trials, seed=args.seed,
        workers=args.workers, out=args.out, expression=False if args.no_expression else None,
    )


def cmd_generate(args: argparse.Namespace) -> None:
    try:
        with open(args.scenario, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"scenario file {args.scenario} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.scenario}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{args.scenario}: expected a JSON object")
    if args.seed is not None:
        raw["seed"] = args.seed
    scen = generate(ScenarioConfig.from_dict(raw))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "transactions.csv", "w", encoding="utf-8", newline="") as fh:
        write_transactions(scen.transactions, fh)
    with open(out / "attributes.csv", "w", encoding="utf-8", newline="") as fh:
        write_attributes(scen.attributes, fh)
    with open(out / "calendar.csv", "w", encoding="utf-8", newline="") as fh:
        write_calendar({k: v for k, v in scen.ipo_dates.items() if k not in scen.mature}, fh)
    with open(out / "ground_truth.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(scen.ground_truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    config = {"transactions": "transactions.csv", "attributes": "attributes.csv", "calendar": "calendar.csv",
              "mature": scen.mature, "data_end": scen.data_end.isoformat(), "seed": raw.get("seed", 0)}
    with open(out / "config.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "generate":
            cmd_generate(args)
            return EXIT_OK
        cfg = _config(args)
        if args.command == "infer":
            run_infer(cfg)
        elif args.command == "analyze":
            summary = run_analyze(cfg)
            for notice in summary["notices"]:
                print(f"notice: {notice}", file=sys.stderr)
        else:
            sys.stdout.write(run_report(cfg))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
