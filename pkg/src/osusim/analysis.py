"""Run summaries: activity phases, steady-state windows, fairness and drain measurements."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from pathlib import Path

from . import metrics as m
from .cells import NS_PER_S
from .engine import SimResult


@dataclass(frozen=True)
class Phase:
    index: int
    start: int
    end: int
    steady_start: int
    active_vcs: tuple

    @property
    def steady(self):
        return self.steady_start, self.end


def phases(result: SimResult) -> list[Phase]:
    """Split the run at every source activation/deactivation instant."""
    cfg = result.config
    end = result.report.duration_ns
    cuts = {0, end}
    windows = {}
    for vc in cfg.vcs:
        src = cfg.source(vc.route[0])
        windows[vc.id] = cfg.source_windows(src)
        for a, b in windows[vc.id]:
            cuts.update(t for t in (a, b) if 0 < t < end)
    cuts = sorted(cuts)
    frac = cfg.metrics.steady_fraction
    out = []
    for i, (a, b) in enumerate(zip(cuts, cuts[1:])):
        active = tuple(vc for vc, ws in sorted(windows.items()) if any(s <= a and b <= e for s, e in ws))
        out.append(Phase(i, a, b, b - int((b - a) * frac), active))
    return out


def forward_links(result: SimResult, vcs=None) -> list[tuple[str, str]]:
    """Switch output ports that carry data on the forward path of ``vcs`` (default all)."""
    seen = []
    for vc in result.config.vcs:
        if vcs is not None and vc.id not in vcs:
            continue
        r = vc.route
        for k in range(1, len(r) - 1):
            if (r[k], r[k + 1]) not in seen:
                seen.append((r[k], r[k + 1]))
    return seen


def delivered_rate(result: SimResult, vc: int, start: int, end: int) -> float:
    times = result.deliveries[vc]
    n = bisect.bisect_left(times, end) - bisect.bisect_left(times, start)
    return n * NS_PER_S / (end - start)


def mean_tcr(result: SimResult, vc: int, start: int, end: int) -> float:
    return m.step_mean(result.tcr[vc], start, end)


def link_utilization(result: SimResult, a: str, b: str, start: int, end: int) -> float:
    return m.windowed_mean(result.utilization[f"{a}->{b}"].series, start, end)


def summarize(result: SimResult, band: float = 0.15, smoothing_intervals: int = 3) -> list[dict]:
    """Per-phase steady-state rows, one per active VC and per loaded forward link.

    Convergence time is measured on TCR averaged over ``smoothing_intervals``
    averaging intervals.
    """
    window = smoothing_intervals * result.config.protocol.ai_ns
    rows = []
    for ph in phases(result):
        s, e = ph.steady
        base = {"phase": ph.index, "window_start_ns": s, "window_end_ns": e}
        rates = {vc: mean_tcr(result, vc, s, e) for vc in ph.active_vcs}
        fairness = m.jain_fairness_index(rates.values()) if any(rates.values()) else None
        conv = m.convergence_time({vc: result.tcr[vc] for vc in ph.active_vcs}, ph.start, e, s, band, window)
        for vc in ph.active_vcs:
            rows.append({
                **base,
                "entity": "vc",
                "id": vc,
                "mean_tcr_cps": rates[vc],
                "delivered_rate_cps": delivered_rate(result, vc, s, e),
                "fairness_index": fairness,
                "convergence_time_ns": conv,
            })
        for a, b in forward_links(result, ph.active_vcs):
            q = result.queue[(a, b)]
            rows.append({
                **base,
                "entity": "link",
                "id": f"{a}->{b}",
                "mean_utilization": link_utilization(result, a, b, s, e),
                "mean_queue_cells": m.sample_mean(q, s, e),
                "max_queue_cells": m.sample_max(q, s, e),
            })
    return rows


def drain_time(queue: m.MetricSeries, t: int, horizon: int, threshold: float = 10):
    """Time after ``t`` until the queue, having peaked within ``horizon``,
    is first sampled below ``threshold``. None if it never drains."""
    lo = bisect.bisect_left(queue.times, t)
    hi = bisect.bisect_left(queue.times, t + horizon)
    if lo >= hi:
        return None
    window = queue.values[lo:hi]
    peak = lo + window.index(max(window))
    for i in range(peak, len(queue.times)):
        if queue.values[i] < threshold:
            return queue.times[i] - t
    return None


def spread_at_rollovers(result: SimResult, port: tuple[str, str], vcs=None):
    """(time, z, max-min TCR) at each rollover of ``port``."""
    vcs = vcs or sorted(result.tcr)
    z = result.load_level[port]
    out = []
    for t, load in zip(z.times, z.values):
        rates = [result.tcr[vc].value_at(t) or 0.0 for vc in vcs]
        out.append((t, load, max(rates) - min(rates), rates))
    return out


def write_outputs(result: SimResult, out_dir, summary_rows=None) -> list[Path]:
    out = Path(out_dir)
    summary_rows = summarize(result) if summary_rows is None else summary_rows
    paths = [
        m.emit_tcr_csv(result.tcr, out / "tcr_trace.csv"),
        m.emit_queue_csv(result.queue, out / "queue_trace.csv"),
        m.emit_util_csv(result.utilization, out / "util_trace.csv"),
        m.emit_summary_csv(summary_rows, out / "summary.csv"),
    ]
    if result.config.metrics.control_trace:
        paths.append(m.emit_control_csv(result.control_trace, out / "control_trace.csv"))
    return paths
