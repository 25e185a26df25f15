"""Command-line entry point: ``exchange-mcmc {run,validate,generate-ising}``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import ising, kernels
from .config import ConfigError, load_config
from .harness import emit_csv, generate_ising_data, run_experiment, sweep_points
from .model import DomainError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

logger = logging.getLogger("exchange_mcmc")


def _parser():
    p = argparse.ArgumentParser(prog="exchange-mcmc",
                                description="Samplers for doubly-intractable posteriors.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment sweep and write a CSV")
    run.add_argument("config")
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE",
                     help="override a config field, e.g. --set sampler.T=500 (repeatable)")
    run.add_argument("--csv", help="output path (overrides output.csv; '-' for stdout)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    run.add_argument("--detail", help="write per-row chains to this .npz file")

    val = sub.add_parser("validate", help="check a config and print the sweep size")
    val.add_argument("config")
    val.add_argument("--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE")

    gen = sub.add_parser("generate-ising", help="draw an exact Ising lattice by CFTP")
    gen.add_argument("--width", type=int, required=True)
    gen.add_argument("--height", type=int, required=True)
    gen.add_argument("--theta-J", dest="theta_J", type=float, required=True)
    gen.add_argument("--theta-h", dest="theta_h", type=float, default=0.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default="-", help="output path ('-' for stdout)")
    return p


def _cmd_validate(args):
    cfg = load_config(args.config, args.overrides)
    points = sweep_points(cfg)
    print(f"ok: {len(points)} sweep points x {cfg.n_replicates} replicates = "
          f"{len(points) * cfg.n_replicates} rows")
    return EXIT_OK


def _cmd_run(args):
    cfg = load_config(args.config, args.overrides)
    if args.jobs < 1:
        raise ConfigError("--jobs", "must be >= 1")
    logger.info("backend: %s", kernels.BACKEND)
    rows, traces = run_experiment(cfg, jobs=args.jobs)
    dest = args.csv or cfg.csv or "-"
    text = emit_csv(rows)
    if dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).parent.mkdir(parents=True, exist_ok=True)
        Path(dest).write_text(text)
    detail = args.detail or (str(Path(dest).with_suffix(".npz")) if cfg.detail and dest != "-" else None)
    if detail and traces:
        np.savez_compressed(detail, **{f"row{i}": t for i, t in traces.items()})
    failed = sum(1 for r in rows if r.error)
    if failed:
        logger.warning("%d of %d rows recorded errors", failed, len(rows))
    return EXIT_OK


def _cmd_generate(args):
    if args.width < 1 or args.height < 1:
        raise ConfigError("--width/--height", "must be positive")
    lattice = generate_ising_data(args.width, args.height, args.theta_J, args.theta_h, args.seed)
    if args.out == "-":
        sys.stdout.write(ising.format_lattice(lattice))
    else:
        ising.write_lattice(lattice, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "validate": _cmd_validate, "generate-ising": _cmd_generate}[args.command]
    try:
        return handler(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
