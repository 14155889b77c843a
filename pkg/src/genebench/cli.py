"""Command-line entry points.

Subcommands: simulate (write a synthetic labeled dataset), run (execute a
config), stability (subsample stability protocol), report (re-emit tables
from a saved bundle).  Exit codes: 0 success, 1 config/parse error,
2 partial cell failures (bundle still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import runner
from .runner import ConfigError, DatasetParseError, ExperimentConfig
from .simkit import gen_cohort, label, make_disease_spec


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genebench")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a synthetic labeled dataset to a CSV file")
    sim.add_argument("--disease", type=int, required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output CSV path")

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int, default=None, help="override master_seed")
    run_p.add_argument("--out", default=None, help="override output_dir")
    run_p.add_argument("--format", choices=("csv", "markdown"), default="markdown")

    stab = sub.add_parser("stability", help="run the subsample stability protocol")
    stab.add_argument("--config", required=True)
    stab.add_argument("--seed", type=int, default=None)
    stab.add_argument("--out", default=None)

    rep = sub.add_parser("report", help="re-emit tables from a saved bundle")
    rep.add_argument("--bundle", required=True, help="directory holding bundle.json")
    rep.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    rep.add_argument("--out", default=None)
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    if overrides:
        import dataclasses
        config = dataclasses.replace(config, **overrides)
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            matrix = gen_cohort(args.n, args.p, seed=args.seed)
            data = label(make_disease_spec(args.disease, matrix), matrix)
            runner.save_dataset(data, args.out)
            print(f"wrote {args.out} ({data.n_patients} patients x {matrix.n_genes} genes)")
            return 0

        if args.command == "run":
            config = _load_config(args)
            bundle = runner.run(config)
            paths = runner.emit_report(bundle, args.format, config.output_dir)
            print(f"bundle: {Path(config.output_dir) / 'bundle.json'}")
            for p in paths:
                print(f"report: {p}")
            if bundle.n_failures:
                print(f"{bundle.n_failures} cell(s) failed", file=sys.stderr)
                return 2
            return 0

        if args.command == "stability":
            config = _load_config(args)
            if config.stability is None:
                raise ConfigError("config has no 'stability' section")
            bundle = runner.run(config)
            out = Path(config.output_dir)
            print(f"bundle: {out / 'bundle.json'}")
            if bundle.stability is not None:
                print(f"mean pairwise jaccard: {bundle.stability['mean_jaccard']:.6g}")
                for sel, acc in zip(bundle.stability["selections"],
                                    bundle.stability["accuracies"]):
                    print(f"  accuracy={acc:.6g} genes={';'.join(sel)}")
            return 2 if bundle.n_failures else 0

        if args.command == "report":
            bundle_path = Path(args.bundle) / "bundle.json"
            if not bundle_path.exists():
                bundle_path = Path(args.bundle)
            raw = json.loads(bundle_path.read_text())
            bundle = runner.ReportBundle(
                provenance=raw.get("provenance", {}),
                cells=raw.get("cells", []),
                stability=raw.get("stability"),
            )
            out = args.out or bundle_path.parent
            for p in runner.emit_report(bundle, args.format, out):
                print(f"report: {p}")
            return 0
    except (ConfigError, DatasetParseError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
