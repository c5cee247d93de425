#!/usr/bin/env python3
"""Run both LAN benchmarks with default parameters and write CSVs under out/."""
import argparse

from osusim.analysis import summarize, write_outputs
from osusim.engine import run
from osusim.scenarios import ScenarioParams, build_parking_lot, build_transient_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out")
    ap.add_argument("--duration-ms", type=float, default=600)
    ap.add_argument("--n", type=int, default=3)
    args = ap.parse_args()
    params = ScenarioParams(duration_ns=round(args.duration_ms * 1e6))
    for name, cfg in (("transient", build_transient_scenario(params)),
                      (f"parkinglot{args.n}", build_parking_lot(args.n, params))):
        res = run(cfg)
        rows = summarize(res)
        write_outputs(res, f"{args.out}/{name}", rows)
        print(f"== {name} ({res.report.wall_time_s:.1f} s, {res.report.events} events)")
        for r in rows:
            if r["entity"] == "vc":
                print(f"  phase {r['phase']} VC {r['id']}: {r['mean_tcr_cps']:.0f} cps, "
                      f"fairness {r['fairness_index']:.4f}, converged after {r['convergence_time_ns']} ns")
            else:
                print(f"  phase {r['phase']} {r['id']}: util {r['mean_utilization']:.3f}, "
                      f"queue mean {r['mean_queue_cells']:.2f} max {r['max_queue_cells']}")


if __name__ == "__main__":
    main()
