"""Command-line front end.

Subcommands
-----------
``experiment <config.json>``  run a JSON-configured experiment and write tables
``table6 <preset>``            run a built-in reference table preset
``kernels``                    print the kernel moment table
``bandwidth <rule> <file>``    print the bandwidth a rule selects for a data file

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
The environment variable ``SMOOTHSAA_SEED`` overrides the config seed;
an explicit ``--seed`` flag overrides both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bandwidth as bw
from . import kernels as K
from . import output as out
from . import presets
from .experiments import (
    EstimatorSpec,
    ExperimentConfig,
    HarnessError,
    Normal,
    run_replications,
    summarize,
)
from .smoothing import EvaluationError
from .solvers import SolverError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


class ConfigError(Exception):
    """Bad command line, config file, or preset name."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smoothsaa", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--format", action="append", choices=("csv", "md", "svg"),
                       default=None, help="output format (repeatable)")
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads, 0 = auto; never changes results")
        p.add_argument("--replications", type=int, default=None,
                       help="override replication count (smoke runs)")

    p_exp = sub.add_parser("experiment", help="run a JSON experiment config")
    p_exp.add_argument("config_file", nargs="?", type=Path, default=None)
    p_exp.add_argument("--config", type=Path, default=None, help="config file path")
    add_common(p_exp)

    p_tab = sub.add_parser("table6", help="run a built-in reference table preset")
    p_tab.add_argument("preset", help=f"one of: {', '.join(sorted(presets.PRESETS))}")
    add_common(p_tab)

    sub.add_parser("kernels", help="print the kernel moment table")

    p_bw = sub.add_parser("bandwidth", help="print the bandwidth a rule selects")
    p_bw.add_argument("rule", help="plugin106 | sheather-jones | silverman | rate")
    p_bw.add_argument("data_file", type=Path)
    p_bw.add_argument("--scale", type=float, default=1.0, help="C for the rate rule")
    p_bw.add_argument("--eps", type=float, default=0.1, help="eps for the rate rule")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HarnessError, SolverError, EvaluationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _dispatch(args) -> int:
    if args.command == "kernels":
        return _cmd_kernels()
    if args.command == "bandwidth":
        return _cmd_bandwidth(args)
    if args.command == "table6":
        return _cmd_table6(args)
    return _cmd_experiment(args)


def _cmd_kernels() -> int:
    kerns = [K.uniform(), K.epanechnikov(), K.gaussian()]
    names = [k.name for k in kerns]
    print("moment      " + "  ".join(f"{n:>14}" for n in names))
    print("m2          " + "  ".join(f"{k.m2():14.4f}" for k in kerns))
    for a in (0.5, 1.0, 1.5, 2.0):
        print(f"mbar({a:.1f})   " + "  ".join(f"{k.mbar(a):14.4f}" for k in kerns))
    return EXIT_OK


def _cmd_bandwidth(args) -> int:
    if not args.data_file.exists():
        raise ConfigError(f"data file not found: {args.data_file}")
    try:
        data = np.loadtxt(args.data_file, ndmin=1)
    except ValueError as exc:
        raise ConfigError(f"could not parse {args.data_file}: {exc}") from exc
    rule = args.rule.lower()
    try:
        if rule in ("plugin106", "sheather-jones", "sj"):
            h = bw.plugin_106(data)
        elif rule == "silverman":
            h = bw.silverman(data)
        elif rule == "rate":
            h = bw.rate_rule(data.size, args.scale, args.eps)
        else:
            raise ConfigError(f"unknown bandwidth rule: {args.rule}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"{h!r}")
    return EXIT_OK


def _resolve_seed(args, config_seed: int) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SMOOTHSAA_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"SMOOTHSAA_SEED is not an integer: {env!r}") from exc
    return config_seed


def _cmd_table6(args) -> int:
    if args.preset not in presets.PRESETS:
        raise ConfigError(
            f"unknown preset: {args.preset} (choose from {', '.join(sorted(presets.PRESETS))})"
        )
    seed = _resolve_seed(args, presets.DEFAULT_MASTER_SEED)
    configs = presets.preset_configs(args.preset, master_seed=seed,
                                     replications=args.replications)
    rows = _run_configs(configs, args.threads)
    paths = out.emit_outputs(
        rows,
        args.out,
        args.preset,
        formats=tuple(args.format or ("csv", "md")),
        caption=f"AVaR table: {args.preset}, seed {seed}",
        column_order=presets.COLUMN_LABELS,
    )
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    path = args.config or args.config_file
    if path is None:
        raise ConfigError("experiment needs a config file (positional or --config)")
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    spec = _parse_config(raw, path)
    seed = _resolve_seed(args, spec["master_seed"])
    configs = [
        ExperimentConfig(
            distribution=spec["distribution"],
            n=n,
            replications=args.replications or spec["replications"],
            alpha=spec["alpha"],
            estimators=spec["estimators"],
            problem=spec["problem"],
            master_seed=seed,
        )
        for n in spec["n_list"]
    ]
    rows = _run_configs(configs, args.threads)
    name = spec["name"] or path.stem
    column_order = tuple(e.label for e in spec["estimators"])
    paths = out.emit_outputs(
        rows,
        args.out,
        name,
        formats=tuple(args.format or spec["formats"]),
        caption=f"{name}, seed {seed}",
        column_order=column_order,
    )
    for p in paths:
        print(p)
    return EXIT_OK


def _run_configs(configs, threads) -> list[dict]:
    rows: list[dict] = []
    for config in configs:
        stats = run_replications(config, threads=threads)
        rows.extend(summarize(stats, config.true_theta()))
    return rows


def _parse_config(raw: dict, path: Path) -> dict:
    try:
        dist_raw = raw.get("distribution", {"kind": "normal", "mu": 0.0, "sigma2": 1.0})
        if dist_raw.get("kind", "normal") != "normal":
            raise ConfigError(f"unsupported distribution kind: {dist_raw.get('kind')!r}")
        distribution = Normal(float(dist_raw["mu"]), float(dist_raw["sigma2"]))
        n_list = [int(n) for n in raw["N_list"]]
        estimators = tuple(_parse_estimator(e) for e in raw["estimators"])
        return {
            "distribution": distribution,
            "n_list": n_list,
            "replications": int(raw.get("replications", 1000)),
            "alpha": float(raw.get("alpha", 0.05)),
            "estimators": estimators,
            "problem": raw.get("problem", "avar"),
            "master_seed": int(raw.get("master_seed", presets.DEFAULT_MASTER_SEED)),
            "name": raw.get("outputs", {}).get("name", ""),
            "formats": tuple(raw.get("outputs", {}).get("formats", ("csv", "md"))),
        }
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config {path}: {exc!r}") from exc


def _parse_estimator(raw: dict) -> EstimatorSpec:
    kernel_kind = raw.get("kernel")
    if kernel_kind is None or str(kernel_kind).upper() == "SAA":
        return EstimatorSpec(raw.get("label", "SAA"))
    kernel = K.Kernel(str(kernel_kind))
    rule_kind = raw.get("bandwidth_rule", "fixed")
    if rule_kind == "fixed":
        rule = bw.fixed(float(raw["h"]))
        default_label = f"{raw['h']:g}"
    elif rule_kind in ("silverman", "plugin106", "bias_matched", "rate"):
        rule = bw.BandwidthRule(
            rule_kind,
            scale=float(raw.get("scale", 1.0)),
            eps=float(raw.get("eps", 0.1)),
            pilot_fraction=float(raw.get("pilot_fraction", 0.5)),
        )
        default_label = {"silverman": "S Rule", "plugin106": "S-J Rule"}.get(rule_kind, rule_kind)
    else:
        raise ConfigError(f"unknown bandwidth rule: {rule_kind!r}")
    return EstimatorSpec(raw.get("label", default_label), kernel, rule)


if __name__ == "__main__":
    sys.exit(main())
