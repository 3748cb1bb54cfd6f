"""Command line: ``cfiot run <config>``, ``cfiot validate``, ``cfiot sweep <config>``."""

from __future__ import annotations

import argparse
import configparser
import itertools
import logging
import sys
from pathlib import Path

from .experiment import ConfigError, config_from_parser, run_experiment, write_outputs
from .mcval import format_report
from .validation import FULL_GRID, QUICK_GRID, run_suite

log = logging.getLogger("cfiot")


def _common(parser):
    parser.add_argument("--seed", type=int, default=None, help="base seed (overrides config)")
    parser.add_argument("--realizations", type=int, default=None,
                        help="network realizations (validate: Monte Carlo samples)")
    parser.add_argument("--out-dir", type=Path, default=Path("results"))
    parser.add_argument("--threads", type=int, default=1, help="worker count")


def build_parser():
    parser = argparse.ArgumentParser(prog="cfiot", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a config file")
    run.add_argument("config", type=Path)
    _common(run)

    val = sub.add_parser("validate", help="closed forms versus the Monte Carlo oracle")
    val.add_argument("--grid", choices=("quick", "full"), default="quick")
    _common(val)

    sweep = sub.add_parser("sweep", help="grid of experiments around a base config")
    sweep.add_argument("config", type=Path)
    sweep.add_argument("--vary", action="append", default=[], metavar="SECTION.KEY=V1,V2",
                       help="values to sweep; repeatable, combined as a Cartesian product")
    _common(sweep)
    return parser


def _read_parser(path):
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read config file {path}")
    return parser


def _apply_overrides(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.realizations is not None:
        changes["n_realizations"] = args.realizations
    return cfg.replace(**changes) if changes else cfg


def _run_one(cfg, out_dir, threads):
    result = run_experiment(cfg, n_jobs=threads)
    paths = write_outputs(result, out_dir)
    sys.stdout.write(result.summary())
    for kind, path in paths.items():
        log.info("wrote %s: %s", kind, path)
    return result


def cmd_run(args):
    cfg = _apply_overrides(config_from_parser(_read_parser(args.config)), args)
    result = _run_one(cfg, args.out_dir, args.threads)
    return 2 if result.flagged else 0


def _sweep_axes(parser, vary):
    axes = []
    if parser.has_section("sweep"):
        for key, raw in parser.items("sweep"):
            axes.append((key, [v.strip() for v in raw.split(",") if v.strip()]))
    for item in vary:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--vary expects SECTION.KEY=V1,V2, got {item!r}")
        axes.append((key.strip(), [v.strip() for v in raw.split(",") if v.strip()]))
    for key, values in axes:
        if "." not in key or not values:
            raise ConfigError(f"bad sweep axis {key!r}")
    return axes


def cmd_sweep(args):
    base = _read_parser(args.config)
    axes = _sweep_axes(base, args.vary)
    if not axes:
        raise ConfigError("nothing to sweep: add a [sweep] section or --vary")
    status = 0
    for combo in itertools.product(*(values for _, values in axes)):
        parser = configparser.ConfigParser()
        parser.read_dict({s: dict(base.items(s)) for s in base.sections() if s != "sweep"})
        parts = []
        for (key, _), value in zip(axes, combo):
            section, name = key.split(".", 1)
            if not parser.has_section(section):
                parser.add_section(section)
            parser.set(section, name, value)
            parts.append(f"{name}-{value}")
        cfg = _apply_overrides(config_from_parser(parser), args)
        out = args.out_dir / "_".join(parts)
        log.info("sweep point %s", out.name)
        if _run_one(cfg, out, args.threads).flagged:
            status = 2
    return status


def cmd_validate(args):
    grid = FULL_GRID if args.grid == "full" else QUICK_GRID
    n_samples = args.realizations or 10**5
    seed = 0 if args.seed is None else args.seed

    def progress(row):
        sys.stdout.write(format_report([row]))
        sys.stdout.flush()

    rows = run_suite(grid, n_samples, seed, n_jobs=args.threads, progress=progress)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    report = args.out_dir / "validation_report.txt"
    report.write_text(format_report(rows), encoding="utf-8")
    n_fail = sum(not row["passed"] for row in rows)
    sys.stdout.write(f"{len(rows) - n_fail}/{len(rows)} checks passed; report: {report}\n")
    return 1 if n_fail else 0


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "sweep": cmd_sweep}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        sys.stderr.write("--threads must be at least 1\n")
        return 64
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 64


if __name__ == "__main__":
    sys.exit(main())
