"""Command-line entry point.

    osusim run --config PATH [--duration-ms N] [--out DIR]
    osusim scenario transient|parkinglot [--n N] [--duration-ms N] [--out DIR]
    osusim validate --config PATH
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .analysis import summarize, write_outputs
from .cells import ConfigError, InvariantViolation
from .config import ConfigValidationError, check, load_config
from .engine import Simulation
from .scenarios import ScenarioParams, build_parking_lot, build_transient_scenario

log = logging.getLogger("osusim")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="osusim", description="Explicit-rate ABR congestion avoidance simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a YAML config file")
    run.add_argument("--config", required=True)
    run.add_argument("--duration-ms", type=float)
    run.add_argument("--out")
    run.add_argument("--control-trace", action="store_true", help="also write control_trace.csv")

    sc = sub.add_parser("scenario", help="run a built-in benchmark topology")
    sc.add_argument("name", choices=["transient", "parkinglot"])
    sc.add_argument("--n", type=int, default=3, help="parking lot stages")
    sc.add_argument("--duration-ms", type=float, default=600.0)
    sc.add_argument("--out", default="out")
    sc.add_argument("--control-trace", action="store_true")

    val = sub.add_parser("validate", help="check a config file and list violations")
    val.add_argument("--config", required=True)
    return p


def _duration_ns(ms: float) -> int:
    ns = round(ms * 1_000_000)
    if ns <= 0:
        raise ConfigError(f"duration must be > 0 ms, got {ms}")
    return ns


def _simulate(cfg, out_dir) -> int:
    result = Simulation(cfg).run()
    rep = result.report
    rows = summarize(result)
    paths = write_outputs(result, out_dir, rows)
    print(f"{cfg.name}: {rep.events} events in {rep.wall_time_s:.2f} s, trace {rep.trace_hash}")
    print(f"data cells sent={rep.data_cells_sent} delivered={rep.data_cells_delivered}")
    for r in rows:
        if r["entity"] == "vc":
            print(f"  phase {r['phase']} VC {r['id']}: mean TCR {r['mean_tcr_cps']:.6g} cps")
        else:
            print(f"  phase {r['phase']} {r['id']}: util {r['mean_utilization']:.4f}, "
                  f"mean queue {r['mean_queue_cells']:.2f}")
    for p in paths:
        print(f"wrote {p}")
    if not rep.ok:
        for v in rep.violations:
            print(f"invariant violation: {v}", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            print(f"{args.config}: ok ({len(cfg.vcs)} VCs, {len(cfg.switches)} switches, {len(cfg.links)} links)")
            return 0
        if args.command == "run":
            cfg = load_config(args.config)
            if args.duration_ms is not None:
                cfg.duration_ns = _duration_ns(args.duration_ms)
            if args.control_trace:
                cfg.metrics.control_trace = True
            cfg = check(cfg)
            return _simulate(cfg, args.out or cfg.metrics.output_dir)
        params = ScenarioParams(duration_ns=_duration_ns(args.duration_ms))
        params.metrics = dataclasses.replace(params.metrics, output_dir=args.out,
                                             control_trace=args.control_trace)
        if args.name == "transient":
            cfg = build_transient_scenario(params)
        else:
            cfg = build_parking_lot(args.n, params)
        return _simulate(cfg, args.out)
    except ConfigValidationError as exc:
        print(f"error: invalid configuration ({len(exc.violations)} violations):", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such file", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
