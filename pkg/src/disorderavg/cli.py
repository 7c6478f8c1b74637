"""Command-line entry point.

Commands: run, compare, list-bundled, validate. Exit codes: 0 success,
1 usage or config error, 2 numerical failure during a run. The worker count
for Monte Carlo averaging honours the DISORDERAVG_THREADS environment
variable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .ode import StepSizeCollapse
from .runner import (ConfigError, bundled_configs, compare_runs, load_config,
                     run_experiment, verify_bundle)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


def _cmd_run(args) -> int:
    path = Path(args.config)
    if not path.exists():
        registry = bundled_configs()
        if args.config in registry:
            path = registry[args.config]
        else:
            print(f"error: no such config file or bundled name: {args.config}",
                  file=sys.stderr)
            return EXIT_USAGE
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = args.output or (Path.cwd() / f"run_{path.stem}")
    try:
        result = run_experiment(cfg, out_dir, workers=args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StepSizeCollapse, RuntimeError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"run complete: {result.directory}")
    for key in sorted(result.summary):
        print(f"  {key}: {result.summary[key]}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    try:
        report = compare_runs(args.run_a, args.run_b,
                              fidelity_threshold=args.fidelity_threshold,
                              purity_dev_threshold=args.purity_threshold)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"min fidelity          : {report['min_fidelity']:.6f} "
          f"(at t={report['min_fidelity_time']:g})")
    print(f"max |purity ratio - 1|: {report['max_purity_ratio_dev']:.4f} "
          f"(at t={report['max_purity_ratio_dev_time']:g})")
    print(f"max coherence gap     : {report['max_coherence_gap']:.3e}")
    flags = []
    if not report["fidelity_ok"]:
        flags.append(f"fidelity below threshold {report['fidelity_threshold']}")
    if not report["purity_ok"]:
        flags.append(f"purity deviation above {report['purity_dev_threshold']}")
    for flag in flags:
        print(f"FLAG: {flag}")
    print("comparison OK" if not flags else "comparison found threshold breaches")
    return EXIT_OK


def _cmd_list_bundled(_args) -> int:
    for name, path in bundled_configs().items():
        print(f"{name}\t{path}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    target = Path(args.target)
    try:
        if target.is_dir():
            verify_bundle(target)
            print(f"result bundle OK: {target}")
        else:
            registry = bundled_configs()
            path = registry.get(args.target, target)
            from .runner import build_model
            cfg = load_config(path)
            build_model(cfg)  # raises ConfigError on invariant violations
            print(f"config OK: {path}")
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="disorderavg",
        description="Disorder-averaged dynamics: master equation vs direct averaging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a TOML config or a bundled name")
    p_run.add_argument("-o", "--output", help="output directory")
    p_run.add_argument("--workers", type=int, default=None,
                       help="Monte Carlo worker threads (default: env or cpu count)")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="compare two result bundles")
    p_cmp.add_argument("run_a")
    p_cmp.add_argument("run_b")
    p_cmp.add_argument("--fidelity-threshold", type=float, default=0.999)
    p_cmp.add_argument("--purity-threshold", type=float, default=0.10)
    p_cmp.set_defaults(func=_cmd_compare)

    p_ls = sub.add_parser("list-bundled", help="list bundled configs")
    p_ls.set_defaults(func=_cmd_list_bundled)

    p_val = sub.add_parser("validate", help="validate a config or result bundle")
    p_val.add_argument("target", help="config path, bundled name, or run directory")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
