"""``mlae-lab`` command line entry point.

Exit codes: 0 success, 2 configuration error, 3 simulation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .bench import ConfigError, ExperimentConfig, compile_report_for, emit_report, run_experiment
from .estimator import HitRecord, mle_estimate
from .loader import LoaderError, angles_for, load
from .qsim import SimulationError
from .transpiler import TranspileError

EXIT_CONFIG = 2
EXIT_SIMULATION = 3


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_load(args) -> None:
    try:
        values = json.loads(args.vector)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--vector is not JSON: {exc}") from exc
    try:
        tree = angles_for(values)
    except LoaderError as exc:
        raise ConfigError(str(exc)) from exc
    doc = {"angles": [list(level) for level in tree.levels], "circuit": load(values).to_dict()}
    print(json.dumps(doc, indent=2))


def cmd_estimate(args) -> None:
    if args.hits is not None:
        try:
            record = HitRecord.from_dict(json.loads(Path(args.hits).read_text()))
        except (OSError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"cannot read hit record: {exc}") from exc
        print(mle_estimate(record).to_json())
        return
    if args.config is None:
        raise ConfigError("estimate needs --config or --hits")
    result = run_experiment(_config(args), workers=args.workers)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["instance_id", "M", "a_true", "a_hat", "abs_error"])
    for r in result.rows():
        if r["method"] == "mle":
            w.writerow([r["instance_id"], r["M"], repr(r["a_true"]), repr(r["a_hat"]), repr(r["abs_error"])])


def cmd_bench(args) -> None:
    cfg = _config(args)
    result = run_experiment(cfg, workers=args.workers)
    written = emit_report(result, args.out)
    rep = compile_report_for(cfg)
    report_path = Path(args.out) / "report.csv"
    report_path.write_text(rep.to_csv())
    for p in written + [report_path]:
        print(p)


def cmd_compile_report(args) -> None:
    rep = compile_report_for(_config(args))
    if args.out is None:
        sys.stdout.write(rep.to_csv())
        print(rep.to_json())
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(rep.to_csv())
    (out / "report.json").write_text(rep.to_json() + "\n")
    print(out / "report.csv")
    print(out / "report.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlae-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("load", help="print the unary loader circuit for a unit vector")
    p.add_argument("--vector", required=True, help="JSON array, e.g. '[0.6, 0.8]'")
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("estimate", help="print per-level MLE estimates as CSV")
    p.add_argument("--config")
    p.add_argument("--hits", help="hit-record JSON; prints a single estimate instead")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="run an experiment and write results.csv, summary.json, report.csv")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("compile-report", help="depth and gate counts per Grover power")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_compile_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, LoaderError, TranspileError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    return 0


if __name__ == "__main__":
    sys.exit(main())
