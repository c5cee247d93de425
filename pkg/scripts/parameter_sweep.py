#!/usr/bin/env python3
"""Sweep target utilization, band half-width and averaging interval on the
transient scenario; report utilization, queueing, oscillation and time to fairness."""
import argparse
import csv
import itertools
import sys
from statistics import pstdev

from osusim import metrics as m
from osusim.analysis import phases
from osusim.config import ProtocolParams
from osusim.engine import run
from osusim.scenarios import ScenarioParams, build_transient_scenario


def measure(u, delta, ai_ns, duration_ns):
    params = ScenarioParams(duration_ns=duration_ns, protocol=ProtocolParams(u, delta, ai_ns))
    res = run(build_transient_scenario(params))
    ph = phases(res)[1]
    s, e = ph.steady
    util = m.windowed_mean(res.utilization["SW1->SW2"].series, s, e)
    q = res.queue[("SW1", "SW2")]
    tcr1 = res.tcr[1]
    lo = tcr1.times.index(next(t for t in tcr1.times if t >= s))
    osc = pstdev(tcr1.values[lo:]) if len(tcr1.values) - lo > 1 else 0.0
    conv = m.convergence_time({vc: res.tcr[vc] for vc in ph.active_vcs}, ph.start, e, s, window_ns=3 * ai_ns)
    return {
        "target_utilization": u, "tub_half_width": delta, "ai_ns": ai_ns,
        "util": round(util, 4), "mean_queue": round(m.sample_mean(q, s, e), 2),
        "max_queue": m.sample_max(q, ph.start, e), "tcr_stdev": round(osc),
        "convergence_ns": conv,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--duration-ms", type=float, default=300)
    args = ap.parse_args()
    grid = itertools.product((0.85, 0.9, 0.95), (0.05, 0.1, 0.2), (150_000, 300_000, 600_000))
    rows = [measure(u, d, ai, round(args.duration_ms * 1e6)) for u, d, ai in grid]
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)


if __name__ == "__main__":
    main()
