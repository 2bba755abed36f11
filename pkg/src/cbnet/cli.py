"""Experiment runner and protocol server command line.

Subcommands:
  run               execute (sweep point x seed) lifetime traces, write CSVs
                    and a summary JSON of lifetime/throughput statistics
  serve             expose the node-selection environment over stdio or TCP
  validate-config   check a config file / overrides and report problems
  positions-import  validate a node-position CSV (`id,x,y`) for later runs

Config values come from an optional JSON file whose keys mirror the
NetworkConfig field names, overridden by repeated `--set key=value` flags
and the short aliases below. CBNET_SEED in the environment overrides the
master seed.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, NetworkConfig
from .env import EnvServer
from .lifecycle import CB_POLICIES, ROUTINGS, lifetime_metrics, simulate_lifetime
from .netmodel import load_positions_csv

ALIASES = {
    "e0": "initial_energy",
    "n": "node_count",
    "r": "monitor_radius",
    "kappa": "phase_error_kappa",
    "mc": "mc_samples",
    "ncb": "cb_node_count",
}


@dataclasses.dataclass
class ExperimentSpec:
    config: NetworkConfig
    routing: str = "omrp"
    cb_policy: str = "none"
    seeds: tuple[int, ...] = (0,)
    sweep_field: str | None = None
    sweep_values: tuple = ()
    output_dir: str = "results"
    max_rounds: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.routing not in ROUTINGS:
            raise ConfigError("routing", f"must be one of {ROUTINGS}")
        if self.cb_policy not in CB_POLICIES or self.cb_policy == "external":
            raise ConfigError("cb_policy", "must be a scripted policy or 'none'")
        if len(self.seeds) == 0:
            raise ConfigError("seeds", "must not be empty")


def _sweep_points(spec: ExperimentSpec):
    if spec.sweep_field is None:
        yield None, spec.config
    else:
        for value in spec.sweep_values:
            yield value, spec.config.replace(**{spec.sweep_field: value})


def _run_one(task):
    label, config, routing, cb_policy, seed, max_rounds = task
    trace = simulate_lifetime(config, routing, cb_policy, seed, max_rounds)
    return label, seed, trace, lifetime_metrics(trace)


def run_experiment(spec: ExperimentSpec) -> dict:
    """Execute all traces, write per-trace CSVs plus summary.json; returns
    the summary dict. Reruns of the same spec rewrite identical bytes."""
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = []
    for value, config in _sweep_points(spec):
        label = "base" if value is None else f"{spec.sweep_field}={value}"
        for seed in spec.seeds:
            tasks.append((label, config, spec.routing, spec.cb_policy,
                          seed, spec.max_rounds))
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    summary: dict = {
        "routing": spec.routing,
        "cb_policy": spec.cb_policy,
        "seeds": list(spec.seeds),
        "points": {},
    }
    by_label: dict[str, list] = {}
    for label, seed, trace, metrics in results:
        safe = label.replace("=", "-")
        trace.write_csv(out / f"trace_{safe}_seed{seed}.csv")
        by_label.setdefault(label, []).append(metrics)
    for label, metric_list in by_label.items():
        point = {}
        for key in ("fnd", "hnd", "and", "lifetime_quantile",
                    "total_delivered_bits", "rounds"):
            values = [m[key] for m in metric_list]
            point[key] = {
                "mean": float(np.mean(values)),
                "median": float(np.median(values)),
                "min": float(np.min(values)),
                "max": float(np.max(values)),
            }
        summary["points"][label] = point
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _parse_seeds(text: str) -> tuple[int, ...]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(tok) for tok in text.split(",") if tok)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _build_config(args) -> NetworkConfig:
    values: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            values.update(json.load(fh))
    for assignment in args.set or []:
        if "=" not in assignment:
            raise ConfigError(assignment, "expected key=value")
        key, raw = assignment.split("=", 1)
        key = ALIASES.get(key, key)
        values[key] = _parse_value(raw)
    for alias, field_name in ALIASES.items():
        flag = getattr(args, alias, None)
        if flag is not None:
            values[field_name] = flag
    env_seed = os.environ.get("CBNET_SEED")
    if env_seed is not None:
        values["master_seed"] = int(env_seed)
    return NetworkConfig.from_dict(values)


def _add_config_args(parser):
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config field (repeatable)")
    parser.add_argument("--e0", type=float, help="initial energy per node (J)")
    parser.add_argument("--n", type=int, help="node count")
    parser.add_argument("--r", type=float, help="monitor radius (m)")
    parser.add_argument("--kappa", type=float, help="phase error concentration")
    parser.add_argument("--mc", type=int, help="geometry Monte Carlo samples")
    parser.add_argument("--ncb", type=int, help="beamforming group size")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cbnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run lifetime experiments")
    _add_config_args(p_run)
    p_run.add_argument("--routing", default="omrp", choices=ROUTINGS)
    p_run.add_argument("--cb", default="none",
                       choices=[p for p in CB_POLICIES if p != "external"])
    p_run.add_argument("--seeds", default="0", type=_parse_seeds,
                       help="e.g. 0..19 or 0,3,7")
    p_run.add_argument("--sweep", help="e.g. r=4,6,8,10 or n=200,400")
    p_run.add_argument("--out", default="results")
    p_run.add_argument("--max-rounds", type=int, default=None)
    p_run.add_argument("--workers", type=int, default=1)

    p_serve = sub.add_parser("serve", help="serve the selection environment")
    _add_config_args(p_serve)
    p_serve.add_argument("--routing", default="omrp", choices=ROUTINGS)
    p_serve.add_argument("--listen", metavar="HOST:PORT",
                         help="TCP endpoint (default: stdio)")
    p_serve.add_argument("--deterministic", action="store_true",
                         help="top-k selection instead of sampling")

    p_val = sub.add_parser("validate-config", help="check configuration")
    _add_config_args(p_val)

    p_pos = sub.add_parser("positions-import", help="validate a position CSV")
    p_pos.add_argument("csv_path")
    p_pos.add_argument("--out", help="write the normalized CSV here")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "validate-config":
        config = _build_config(args)
        print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
        return 0

    if args.command == "positions-import":
        points = load_positions_csv(args.csv_path)
        print(f"{points.shape[0]} nodes; "
              f"x in [{points[:, 0].min():g}, {points[:, 0].max():g}], "
              f"y in [{points[:, 1].min():g}, {points[:, 1].max():g}]")
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write("id,x,y\n")
                for i, (x, y) in enumerate(points):
                    fh.write(f"{i},{float(x)!r},{float(y)!r}\n")
        return 0

    if args.command == "serve":
        config = _build_config(args)
        server = EnvServer(config, args.routing,
                           sample_actions=not args.deterministic)
        if args.listen:
            host, port = args.listen.rsplit(":", 1)
            server.serve_tcp(host, int(port),
                             announce=lambda addr: print(
                                 f"listening on {addr[0]}:{addr[1]}",
                                 file=sys.stderr, flush=True))
        else:
            server.serve_stdio()
        return 0

    if args.command == "run":
        config = _build_config(args)
        sweep_field = None
        sweep_values: tuple = ()
        if args.sweep:
            key, raw = args.sweep.split("=", 1)
            sweep_field = ALIASES.get(key, key)
            sweep_values = tuple(_parse_value(tok) for tok in raw.split(","))
        spec = ExperimentSpec(
            config=config,
            routing=args.routing,
            cb_policy=args.cb,
            seeds=args.seeds,
            sweep_field=sweep_field,
            sweep_values=sweep_values,
            output_dir=args.out,
            max_rounds=args.max_rounds,
            workers=args.workers,
        )
        summary = run_experiment(spec)
        for label, point in summary["points"].items():
            print(f"{label}: AND median {point['and']['median']:g}, "
                  f"delivered median {point['total_delivered_bits']['median']:.4g}")
        return 0

    raise ValueError(f"unknown command {args.command}")
