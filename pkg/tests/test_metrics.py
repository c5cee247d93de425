import bisect

import pytest
from hypothesis import given
from hypothesis import strategies as st

from osusim import metrics as m
from osusim.analysis import phases, summarize, write_outputs
from osusim.cells import InvariantViolation
from osusim.engine import run
from osusim.scenarios import build_parking_lot


def test_record_sample():
    s = m.MetricSeries("tcr", (1,))
    m.record_sample(s, 0, 10000)
    assert len(s) == 1
    s = m.MetricSeries("tcr", (1,), [1_000_000], [5.0])
    with pytest.raises(InvariantViolation):
        m.record_sample(s, 1_000_000, 6.0)
    m.record_sample(s, 2_000_000, 0)
    assert s.samples == [(1_000_000, 5.0), (2_000_000, 0)]


def test_utilization_examples():
    u = m.utilization_per_window([110, 0, 99], 300_000, 2735)
    assert u.series.values[0] == pytest.approx(110 * 2735 / 300_000)
    assert u.series.values[0] == pytest.approx(1.0028, abs=1e-4)
    assert u.series.values[1] == 0.0
    assert u.series.values[2] == pytest.approx(0.9026, abs=1e-4)
    assert u.saturated == [300_000]
    assert u.series.times == [300_000, 600_000, 900_000]


def test_utilization_rejects_bad_window():
    with pytest.raises(ValueError):
        m.utilization_per_window([1], 0, 2735)


def test_jain_examples():
    assert m.jain_fairness_index([7.0] * 4) == pytest.approx(1.0)
    assert m.jain_fairness_index([5.0, 0.0]) == pytest.approx(0.5)
    assert m.jain_fairness_index([2, 1, 1]) == pytest.approx(16 / 18)
    with pytest.raises(ValueError):
        m.jain_fairness_index([0.0, 0.0])


@given(st.lists(st.one_of(st.just(0.0), st.floats(1e-3, 1e6)), min_size=1, max_size=20).filter(any),
       st.floats(1e-3, 1e3))
def test_jain_is_scale_invariant(xs, c):
    j = m.jain_fairness_index(xs)
    assert 0 < j <= 1 + 1e-12
    assert m.jain_fairness_index([c * x for x in xs]) == pytest.approx(j, rel=1e-9)


def test_step_mean():
    s = m.MetricSeries("tcr", (1,), [0, 10, 30], [1.0, 3.0, 0.0])
    assert m.step_mean(s, 0, 40) == pytest.approx((10 * 1 + 20 * 3) / 40)
    assert m.step_mean(s, 5, 15) == pytest.approx(2.0)


def test_empty_series_gives_header_only(tmp_path):
    path = m.emit_tcr_csv({1: m.MetricSeries("tcr", (1,))}, tmp_path / "tcr_trace.csv")
    assert path.read_text() == "time_ns,vc,tcr_cps\n"


def test_single_sample_format(tmp_path):
    path = m.emit_tcr_csv({1: m.MetricSeries("tcr", (1,), [1000], [300000.0])}, tmp_path / "t.csv")
    assert path.read_text().splitlines() == ["time_ns,vc,tcr_cps", "1000,1,300000"]


def test_write_error_mentions_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        m.emit_tcr_csv({}, blocker / "sub" / "t.csv")


@given(st.lists(st.tuples(st.integers(1, 10**6), st.floats(0, 1e7, allow_subnormal=False)),
                max_size=30, unique_by=lambda x: x[0]))
def test_csv_round_trip(tmp_path_factory, samples):
    samples.sort()
    s = m.MetricSeries("tcr", (3,), [t for t, _ in samples], [v for _, v in samples])
    path = m.emit_tcr_csv({3: s}, tmp_path_factory.mktemp("rt") / "tcr.csv")
    rows = m.read_csv(path)
    assert [int(r["time_ns"]) for r in rows] == s.times
    assert all(r["vc"] == "3" for r in rows)
    for r, v in zip(rows, s.values):
        assert float(r["tcr_cps"]) == pytest.approx(v, rel=5e-6, abs=1e-300)


@pytest.fixture(scope="module")
def short_lot():
    cfg = build_parking_lot(3)
    cfg.duration_ns = 60_000_000
    return run(cfg)


def test_summary_rows_for_parking_lot(short_lot, tmp_path):
    rows = summarize(short_lot)
    assert sum(r["entity"] == "vc" for r in rows) == 3
    assert sum(r["entity"] == "link" for r in rows) == 3  # SW1->SW2, SW2->SW3, SW3->D
    paths = write_outputs(short_lot, tmp_path, rows)
    assert [p.name for p in paths] == ["tcr_trace.csv", "queue_trace.csv", "util_trace.csv", "summary.csv"]
    assert len(m.read_csv(tmp_path / "summary.csv")) == 6
    assert (tmp_path / "queue_trace.csv").read_text().startswith("time_ns,switch,port,qlen_cells\n")
    assert (tmp_path / "util_trace.csv").read_text().startswith("window_end_ns,link,utilization\n")


def test_summary_delivery_rate_matches_destination_counters(short_lot):
    rep = short_lot.report
    for vc, arr in short_lot.deliveries.items():
        assert len(arr) == rep.delivered_per_vc[vc]
    [ph] = phases(short_lot)
    s, e = ph.steady
    for r in summarize(short_lot):
        if r["entity"] != "vc":
            continue
        times = short_lot.deliveries[r["id"]]
        n = bisect.bisect_left(times, e) - bisect.bisect_left(times, s)
        assert r["delivered_rate_cps"] == pytest.approx(n * 1e9 / (e - s))
        # what the source sends is what arrives, up to the cells in flight at the window edges
        assert r["delivered_rate_cps"] == pytest.approx(r["mean_tcr_cps"], rel=0.03)


def test_utilization_bounded(short_lot):
    for u in short_lot.utilization.values():
        one_cell = 2735 / 300_000
        assert all(0 <= v <= 1 + one_cell for v in u.series.values)


def test_queue_and_tcr_series_monotone(short_lot):
    for series in [*short_lot.queue.values(), *short_lot.tcr.values(), *short_lot.load_level.values()]:
        assert all(a < b for a, b in zip(series.times, series.times[1:]))


def test_convergence_time():
    # ramps to 100 at t=30, one excursion at t=60, steady afterwards
    s = m.MetricSeries("tcr", (1,), [0, 30, 60, 61, 100], [10.0, 100.0, 200.0, 100.0, 100.0])
    assert m.convergence_time({1: s}, 0, 200, 100, band=0.15) == 61
    assert m.convergence_time({1: s}, 0, 200, 100, band=0.15, window_ns=20) == 40  # excursion averaged away
    never = m.MetricSeries("tcr", (2,), [0, 150], [100.0, 10.0])
    assert m.convergence_time({2: never}, 0, 200, 100, band=0.01) is None
