"""Command-line surface.

Subcommands: run (single scenario), sweep (grid), cluster (standalone
clustering of a feature CSV), validate (config check only). Exit codes:
0 success, 1 usage or validation error, 2 runtime error.

--config accepts either a plain key=value config file or a manifest JSON
emitted by an earlier run; re-running a manifest reproduces its CSV byte for
byte.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from random import Random

import numpy as np

from .clustering import normalize_features, run_wfcm
from .config import ConfigError, SimConfig, parse_config
from .engine import run_scenario
from .report import (build_manifest, load_manifest_config, make_record,
                     write_csv, write_json, write_plotdata)
from .sweep import PARAM_NAMES, default_grid, sweep


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def parse_seeds(text: str):
    """'1..10' -> 1..10 inclusive; '1,4,9' -> listed; '7' -> [7]."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise UsageError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    return [int(part) for part in text.split(",") if part]


def _build_parser() -> _Parser:
    parser = _Parser(prog="wbansim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file or run manifest JSON")
    common.add_argument("--scenario", choices=("density", "rate"))
    common.add_argument("--protocol", choices=("qqmr", "greedy", "both"))
    common.add_argument("--seeds", help="seed list: N, N,M,..., or N..M")
    common.add_argument("--nodes", type=int, help="override node count")
    common.add_argument("--rate", type=float, help="override send rate")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("csv", "json", "plotdata", "all"),
                        default="all")
    common.add_argument("--jobs", type=int, default=1,
                        help="parallel sweep workers")

    sub.add_parser("run", parents=[common], help="single scenario run")
    sub.add_parser("sweep", parents=[common], help="parameter grid sweep")
    clu = sub.add_parser("cluster", parents=[common],
                         help="cluster a feature CSV")
    clu.add_argument("features", help="CSV of rows: delay,free,error,energy")
    sub.add_parser("validate", parents=[common], help="check a config file")
    return parser


def _load_config(args):
    """Resolved config plus any manifest-supplied seeds."""
    manifest_seeds = None
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        if path.suffix == ".json":
            cfg, manifest_seeds = load_manifest_config(path)
        else:
            cfg = parse_config(path)
    else:
        cfg = SimConfig()
    if args.nodes is not None:
        cfg = replace(cfg, node_count=args.nodes)
    if args.rate is not None:
        cfg = replace(cfg, send_rate=args.rate)
    cfg.validate()
    return cfg, manifest_seeds


def _resolve_seeds(args, manifest_seeds):
    if args.seeds:
        return parse_seeds(args.seeds)
    if manifest_seeds:
        return manifest_seeds
    return [SimConfig().rng_seed]


def _protocol_list(args):
    name = args.protocol or "qqmr"
    return ["qqmr", "greedy"] if name == "both" else [name]


def _emit(records, cfg, seeds, scenario, protocols, args):
    if not args.out:
        for rec in records:
            print(f"{rec.protocol} {rec.param_name}={rec.param_value} "
                  f"seed={rec.seed} pdr={rec.pdr_pct:.2f}% eed={rec.eed_s} "
                  f"ro={rec.ro:.3f} ec={rec.ec_j:.4f} hc={rec.hc}")
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if args.format in ("csv", "all"):
        written.append(write_csv(records, out / "results.csv"))
    if args.format in ("plotdata", "all"):
        written.extend(write_plotdata(records, out / "plotdata"))
    manifest = build_manifest(cfg, seeds, scenario, protocols,
                              [str(p) for p in written])
    if args.format in ("json", "all"):
        write_json(records, manifest, out / "results.json")
    write_json([], manifest, out / "manifest.json")


def _cmd_run(args) -> int:
    cfg, manifest_seeds = _load_config(args)
    seeds = _resolve_seeds(args, manifest_seeds)
    protocols = _protocol_list(args)
    scenario = args.scenario or "density"
    param_name = PARAM_NAMES[scenario]
    param_value = cfg.node_count if scenario == "density" else cfg.send_rate

    records = []
    for protocol in protocols:
        for seed in seeds:
            report = run_scenario(replace(cfg, rng_seed=seed), protocol)
            records.append(make_record(report, scenario, param_name,
                                       param_value, seed))
    _emit(records, cfg, seeds, scenario, protocols, args)
    return 0


def _cmd_sweep(args) -> int:
    cfg, manifest_seeds = _load_config(args)
    seeds = _resolve_seeds(args, manifest_seeds)
    protocols = _protocol_list(args)
    scenario = args.scenario or "density"
    records = sweep(scenario, protocols, seeds, base=cfg,
                    grid=default_grid(scenario), jobs=args.jobs)
    _emit(records, cfg, seeds, scenario, protocols, args)
    return 0


def _cmd_cluster(args) -> int:
    cfg, _ = _load_config(args)
    rows = []
    with open(args.features, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if any(not _is_number(p) for p in parts):
                continue  # header line
            rows.append([float(p) if p.strip() else float("nan")
                         for p in parts])
    if not rows:
        raise ConfigError(f"no feature rows in {args.features}")
    X = np.array(rows, dtype=float)
    if X.shape[1] != 4:
        raise ConfigError(f"expected 4 feature columns, got {X.shape[1]}")
    model = run_wfcm(normalize_features(X), cfg, Random(cfg.rng_seed))
    lines = ["row,u_emergency,u_error_sensitive,u_normal,assigned"]
    for idx, row in enumerate(model.memberships):
        best = int(np.argmax(row))
        lines.append(f"{idx},{row[0]!r},{row[1]!r},{row[2]!r},{best}")
    text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "memberships.csv").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _is_number(text: str) -> bool:
    text = text.strip()
    if not text:
        return True  # empty cell = missing value
    try:
        float(text)
        return True
    except ValueError:
        return False


def _cmd_validate(args) -> int:
    if not args.config:
        raise ConfigError("validate requires --config")
    _load_config(args)
    return 0


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "cluster":
            return _cmd_cluster(args)
        if args.command == "validate":
            return _cmd_validate(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
