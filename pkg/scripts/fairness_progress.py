#!/usr/bin/env python3
"""Two persistent sources started far apart; print z and the TCR spread at each bottleneck rollover."""
import argparse

from osusim.analysis import spread_at_rollovers
from osusim.engine import run
from osusim.scenarios import ScenarioParams, build_two_source


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--split", type=float, default=0.9, help="share of the target rate given to S1 at start")
    ap.add_argument("--intervals", type=int, default=40)
    args = ap.parse_args()
    params = ScenarioParams(duration_ns=(args.intervals + 1) * 300_000)
    target = params.target_rate()
    res = run(build_two_source(args.split * target, (1 - args.split) * target, params))
    print("time_ns,z,tcr1,tcr2,spread")
    for t, z, spread, (a, b) in spread_at_rollovers(res, ("SW1", "SW2"), [1, 2]):
        print(f"{t},{z:.4f},{a:.0f},{b:.0f},{spread:.0f}")


if __name__ == "__main__":
    main()
