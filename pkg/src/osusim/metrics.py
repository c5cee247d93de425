"""Metric series, run summaries and CSV output."""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .cells import InvariantViolation

TCR_HEADER = ("time_ns", "vc", "tcr_cps")
QUEUE_HEADER = ("time_ns", "switch", "port", "qlen_cells")
UTIL_HEADER = ("window_end_ns", "link", "utilization")
CONTROL_HEADER = ("time_ns", "event", "vc", "direction", "tcr", "ocr", "laf", "ai_ns")
SUMMARY_HEADER = (
    "phase",
    "window_start_ns",
    "window_end_ns",
    "entity",
    "id",
    "mean_tcr_cps",
    "delivered_rate_cps",
    "mean_utilization",
    "mean_queue_cells",
    "max_queue_cells",
    "fairness_index",
    "convergence_time_ns",
)


@dataclass
class MetricSeries:
    kind: str
    key: tuple
    times: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    @property
    def samples(self):
        return list(zip(self.times, self.values))

    def value_at(self, t):
        """Step-function value at t (last sample at or before t), or None."""
        i = bisect.bisect_right(self.times, t)
        return self.values[i - 1] if i else None


def record_sample(series: MetricSeries, t: int, value: float) -> MetricSeries:
    if series.times and t <= series.times[-1]:
        raise InvariantViolation(
            f"{series.kind}{series.key}: sample at {t} ns not after {series.times[-1]} ns"
        )
    series.times.append(t)
    series.values.append(value)
    return series


def set_step(series: MetricSeries, t: int, value: float) -> None:
    """Record a step change; a second change at the same instant replaces the first."""
    if series.times and series.times[-1] == t:
        series.values[-1] = value
    else:
        record_sample(series, t, value)


@dataclass
class UtilizationSeries:
    link: str
    window_ns: int
    series: MetricSeries
    saturated: list[int]  # window end times where utilization exceeded 1


def utilization_per_window(departures, window_ns: int, tx_ns: int, n_windows=None, link="") -> UtilizationSeries:
    """Per-window utilization from departure counts.

    ``departures`` is a sequence of cell counts, one per window, each
    counting cells whose transmission completed inside that window.
    """
    if window_ns <= 0:
        raise ValueError("window must be > 0")
    counts = list(departures)
    if n_windows is not None:
        counts = (counts + [0] * n_windows)[:n_windows]
    series = MetricSeries("utilization", (link,))
    saturated = []
    for k, n in enumerate(counts):
        end = (k + 1) * window_ns
        u = n * tx_ns / window_ns
        record_sample(series, end, u)
        if u > 1:
            saturated.append(end)
    return UtilizationSeries(link, window_ns, series, saturated)


def jain_fairness_index(rates) -> float:
    rates = list(rates)
    if not rates or any(r < 0 or not math.isfinite(r) for r in rates):
        raise ValueError("rates must be a non-empty list of finite non-negative values")
    sq = sum(r * r for r in rates)
    if sq == 0:
        raise ValueError("fairness index undefined for all-zero rates")
    return sum(rates) ** 2 / (len(rates) * sq)


def step_mean(series: MetricSeries, start: int, end: int, before: float = 0.0) -> float:
    """Time-weighted mean of a step series over [start, end)."""
    if end <= start:
        raise ValueError("empty window")
    times, values = series.times, series.values
    i = bisect.bisect_right(times, start)
    current = values[i - 1] if i else before
    t = start
    acc = 0.0
    while i < len(times) and times[i] < end:
        acc += current * (times[i] - t)
        t = times[i]
        current = values[i]
        i += 1
    acc += current * (end - t)
    return acc / (end - start)


def sample_mean(series: MetricSeries, start: int, end: int) -> float:
    lo = bisect.bisect_left(series.times, start)
    hi = bisect.bisect_left(series.times, end)
    vals = series.values[lo:hi]
    return sum(vals) / len(vals) if vals else 0.0


def sample_max(series: MetricSeries, start: int, end: int) -> float:
    lo = bisect.bisect_left(series.times, start)
    hi = bisect.bisect_left(series.times, end)
    return max(series.values[lo:hi], default=0.0)


def windowed_mean(series: MetricSeries, start: int, end: int) -> float:
    """Mean over windows whose end time lies in (start, end]."""
    lo = bisect.bisect_right(series.times, start)
    hi = bisect.bisect_right(series.times, end)
    vals = series.values[lo:hi]
    return sum(vals) / len(vals) if vals else 0.0


def convergence_time(tcr: dict, start: int, end: int, steady_start: int, band: float = 0.15,
                     window_ns: int | None = None):
    """Time from ``start`` until every series stays within ``band`` of its
    steady-window mean for the rest of [start, end). None if never.

    With ``window_ns`` the series are first averaged over consecutive
    windows, so oscillation inside the utilization band is not counted.
    """
    latest = start
    for series in tcr.values():
        target = step_mean(series, steady_start, end)
        if target <= 0:
            continue
        lo, hi = target * (1 - band), target * (1 + band)
        if window_ns:
            edges = list(range(start, end, window_ns))
            points = [(a, step_mean(series, a, min(a + window_ns, end))) for a in edges]
        else:
            i = bisect.bisect_right(series.times, start)
            j = bisect.bisect_left(series.times, end)
            points = [(start, series.value_at(start))]
            points += list(zip(series.times[i:j], series.values[i:j]))
        entered = None
        for t, v in points:
            if v is not None and lo <= v <= hi:
                if entered is None:
                    entered = t
            else:
                entered = None
        if entered is None:
            return None
        latest = max(latest, entered)
    return latest - start


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, str)):
        return str(x)
    return f"{x:.6g}"


def _write(path: Path, header, rows):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def emit_tcr_csv(series_by_vc: dict, path) -> Path:
    rows = []
    for vc, s in sorted(series_by_vc.items()):
        rows.extend((t, vc, v) for t, v in zip(s.times, s.values))
    rows.sort(key=lambda r: (r[0], r[1]))
    return _write(path, TCR_HEADER, rows)


def emit_queue_csv(series_by_port: dict, path) -> Path:
    rows = []
    for (sw, port), s in sorted(series_by_port.items()):
        rows.extend((t, sw, port, v) for t, v in zip(s.times, s.values))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return _write(path, QUEUE_HEADER, rows)


def emit_util_csv(util_by_link: dict, path) -> Path:
    rows = []
    for link, u in sorted(util_by_link.items()):
        rows.extend((t, link, v) for t, v in zip(u.series.times, u.series.values))
    rows.sort(key=lambda r: (r[0], r[1]))
    return _write(path, UTIL_HEADER, rows)


def emit_summary_csv(rows, path) -> Path:
    return _write(path, SUMMARY_HEADER, [[r.get(k) for k in SUMMARY_HEADER] for r in rows])


def emit_control_csv(rows, path) -> Path:
    return _write(path, CONTROL_HEADER, rows)


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
