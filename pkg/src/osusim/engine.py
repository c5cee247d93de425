"""Deterministic discrete-event engine: scheduler, link channels and node wiring."""
from __future__ import annotations

import hashlib
import heapq
import random
import struct
import time as _time
from array import array
from dataclasses import dataclass, field

from . import metrics as m
from .cells import (
    ControlCell,
    DataCell,
    Direction,
    InvariantViolation,
    cell_transmission_time,
    validate_control_cell,
)
from .config import ScenarioConfig, check
from .destination import DestinationState
from .source import SourceState, init_source
from .switch import SwitchPortState, init_port

ARRIVAL, SLOT, AVERAGING, ROLLOVER, ACTIVATE, DEACTIVATE, SAMPLE, HOST_DATA = range(8)
EVENT_NAMES = ("arrival", "slot", "averaging", "rollover", "activate", "deactivate", "sample", "host_data")

_PACK = struct.Struct("<qqBi").pack


class Scheduler:
    """Event queue totally ordered by (time, seq)."""

    def __init__(self):
        self.heap: list = []
        self.seq = 0
        self.now = 0
        self.processed = 0
        self._hash = hashlib.blake2b(digest_size=16)

    def schedule(self, time: int, kind: int, target, payload=None) -> None:
        if time < self.now:
            raise InvariantViolation(f"event scheduled in the past: {time} < {self.now}")
        heapq.heappush(self.heap, (time, self.seq, kind, target, payload))
        self.seq += 1

    def run_until(self, t_end: int, handlers) -> int:
        """Dispatch every event with time < t_end, then advance the clock to t_end.

        ``handlers[kind](target, payload, now)`` is called per event.
        """
        heap = self.heap
        pop = heapq.heappop
        update = self._hash.update
        n = 0
        while heap and heap[0][0] < t_end:
            t, seq, kind, target, payload = pop(heap)
            self.now = t
            update(_PACK(t, seq, kind, getattr(target, "idx", -1)))
            handlers[kind](target, payload, t)
            n += 1
        self.now = max(self.now, t_end)
        self.processed += n
        return n

    def trace_hash(self) -> str:
        return self._hash.hexdigest()


class Channel:
    """One direction of a link: serialized transmission plus propagation delay.

    Departure times are fixed at enqueue (FIFO, constant service time), so
    the queue is virtual: its length at time t is the number of cells whose
    transmission has not finished by t.
    """

    __slots__ = ("id", "src", "dst", "bandwidth_bps", "tx_ns", "prop_ns", "busy_until",
                 "pending", "bins", "window_ns", "sent", "track_queue")

    def __init__(self, id, src, dst, bandwidth_bps, cell_size_bits, prop_ns, window_ns, track_queue=False):
        self.id = id
        self.src = src
        self.dst = dst
        self.bandwidth_bps = bandwidth_bps
        self.tx_ns = cell_transmission_time(cell_size_bits, bandwidth_bps)
        self.prop_ns = prop_ns
        self.busy_until = 0
        self.pending = []  # departure end times, ascending
        self.bins = []
        self.window_ns = window_ns
        self.sent = 0
        self.track_queue = track_queue

    def transmit(self, now: int) -> int:
        """Queue one cell at ``now``; returns its arrival time at the far end."""
        start = now if now > self.busy_until else self.busy_until
        end = start + self.tx_ns
        self.busy_until = end
        self.sent += 1
        if self.track_queue:
            self.pending.append(end)
        k = end // self.window_ns
        bins = self.bins
        if k >= len(bins):
            bins.extend([0] * (k + 1 - len(bins)))
        bins[k] += 1
        return end + self.prop_ns

    def queue_len(self, now: int) -> int:
        pending = self.pending
        i = 0
        while i < len(pending) and pending[i] <= now:
            i += 1
        if i:
            del pending[:i]
        return len(pending)


@dataclass
class OutputPort:
    switch_id: str
    next_node: object
    state: SwitchPortState
    channel: Channel


class SourceNode:
    def __init__(self, idx, cfg, src_cfg, vc):
        self.idx = idx
        self.id = src_cfg.id
        self.vc = vc
        self.icr = cfg.source_icr(src_cfg)
        self.pcr = cfg.source_pcr(src_cfg)
        self.floor = src_cfg.tcr_floor_cps
        self.initial_ai = src_cfg.initial_ai_ns
        self.persistent = src_cfg.traffic == "persistent"
        self.windows = cfg.source_windows(src_cfg)
        self.bursts = list(src_cfg.bursts)
        self.state: SourceState | None = None
        self.active = False
        self.slot_gen = 0
        self.avg_gen = 0
        self.next_seq = 0
        self.channel: Channel | None = None
        self.next_node = None


class SwitchNode:
    def __init__(self, idx, id, ai_ns, phase_ns):
        self.idx = idx
        self.id = id
        self.ai_ns = ai_ns
        self.phase_ns = phase_ns
        self.ports: dict[str, OutputPort] = {}
        self.fwd: dict[int, OutputPort] = {}
        self.rev: dict[int, OutputPort] = {}


class DestNode:
    def __init__(self, idx, id):
        self.idx = idx
        self.id = id
        self.dests: dict[int, DestinationState] = {}
        self.back: dict[int, tuple[Channel, object]] = {}


@dataclass
class RunReport:
    name: str
    duration_ns: int
    events: int
    trace_hash: str
    wall_time_s: float
    data_cells_sent: int
    data_cells_delivered: int
    control_cells_sent: dict
    control_cells_returned: dict
    control_cells_received: dict
    dropped_return_cells: int
    conservation_checks: int
    delivered_per_vc: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class SimResult:
    config: ScenarioConfig
    report: RunReport
    tcr: dict  # vc -> MetricSeries (step function, 0 while inactive)
    queue: dict  # (switch, port) -> MetricSeries
    load_level: dict  # (switch, port) -> MetricSeries of z at each rollover
    laf_stamp: dict  # (switch, port, vc) -> MetricSeries
    utilization: dict  # link channel id -> UtilizationSeries
    deliveries: dict  # vc -> array of delivery times (ns)
    ocr: dict  # vc -> MetricSeries of OCR at each control cell emission
    control_trace: list
    channels: dict  # (a, b) -> Channel
    ports: dict  # (switch, port) -> OutputPort


class Simulation:
    def __init__(self, cfg: ScenarioConfig, check_invariants: bool = True):
        self.cfg = check(cfg)
        self.check_invariants = check_invariants
        self.sched = Scheduler()
        self.violations: list[str] = []
        self._build()

    # --- assembly ---------------------------------------------------------

    def _build(self):
        cfg = self.cfg
        window = cfg.util_window_ns()
        rng = random.Random(cfg.seed) if cfg.seed is not None and cfg.jitter_ns > 0 else None
        idx = 0
        self.nodes: dict[str, object] = {}
        vc_of_source = {vc.route[0]: vc.id for vc in cfg.vcs}
        for src in cfg.sources:
            self.nodes[src.id] = SourceNode(idx, cfg, src, vc_of_source[src.id])
            idx += 1
        for sw in cfg.switches:
            phase = sw.phase_offset_ns + (rng.randrange(cfg.jitter_ns + 1) if rng else 0)
            self.nodes[sw.id] = SwitchNode(idx, sw.id, cfg.switch_ai_ns(sw.id), phase)
            idx += 1
        for d in cfg.destinations:
            self.nodes[d.id] = DestNode(idx, d.id)
            idx += 1

        self.channels: dict[tuple[str, str], Channel] = {}
        for link in cfg.links:
            prop = round(link.length_km * cfg.ns_per_km)
            for a, b in ((link.a, link.b), (link.b, link.a)):
                track = isinstance(self.nodes[a], SwitchNode)
                self.channels[(a, b)] = Channel(
                    f"{a}->{b}", a, b, link.bandwidth_bps, cfg.cell_size_bits, prop, window, track
                )

        self.ports: dict[tuple[str, str], OutputPort] = {}
        for node in self.nodes.values():
            if isinstance(node, SwitchNode):
                for (a, b), ch in self.channels.items():
                    if a != node.id:
                        continue
                    u, d = cfg.port_params(node.id, b)
                    state = init_port(ch.bandwidth_bps, cfg.cell_size_bits, u, d, node.ai_ns, node.phase_ns)
                    port = OutputPort(node.id, self.nodes[b], state, ch)
                    node.ports[b] = port
                    self.ports[(node.id, b)] = port

        for vc in cfg.vcs:
            r = vc.route
            src = self.nodes[r[0]]
            src.channel = self.channels[(r[0], r[1])]
            src.next_node = self.nodes[r[1]]
            for k in range(1, len(r) - 1):
                sw = self.nodes[r[k]]
                sw.fwd[vc.id] = sw.ports[r[k + 1]]
                sw.rev[vc.id] = sw.ports[r[k - 1]]
            dst = self.nodes[r[-1]]
            dst.dests[vc.id] = DestinationState(vc.id)
            dst.back[vc.id] = (self.channels[(r[-1], r[-2])], self.nodes[r[-2]])

        self.sources = [n for n in self.nodes.values() if isinstance(n, SourceNode)]
        self.switches = [n for n in self.nodes.values() if isinstance(n, SwitchNode)]

        # metrics
        self.tcr = {s.vc: m.MetricSeries("tcr", (s.vc,)) for s in self.sources}
        self.ocr = {s.vc: m.MetricSeries("ocr", (s.vc,)) for s in self.sources}
        self.queue = {k: m.MetricSeries("queue_len", k) for k in self.ports}
        self.load_level = {k: m.MetricSeries("load_level", k) for k in self.ports}
        self.laf_stamp: dict = {}
        self.deliveries = {vc.id: array("q") for vc in cfg.vcs}
        self.control_trace: list = []
        self.trace_control = cfg.metrics.control_trace

        self.data_sent = 0
        self.data_delivered = 0
        self.ctl_sent = {vc.id: 0 for vc in cfg.vcs}
        self.ctl_returned = {vc.id: 0 for vc in cfg.vcs}
        self.ctl_received = {vc.id: 0 for vc in cfg.vcs}
        self.dropped_return = 0
        self.conservation_checks = 0

        sched = self.sched
        for s in self.sources:
            for start, end in s.windows:
                if start < cfg.duration_ns:
                    sched.schedule(start, ACTIVATE, s)
                    if end < cfg.duration_ns:
                        sched.schedule(end, DEACTIVATE, s)
            for t, n in s.bursts:
                sched.schedule(t, HOST_DATA, s, n)
        for sw in self.switches:
            sched.schedule(sw.phase_ns + sw.ai_ns, ROLLOVER, sw)
        sched.schedule(0, SAMPLE, None)

    # --- handlers -----------------------------------------------------------

    def _arrival(self, node, cell, now):
        sched = self.sched
        if type(node) is SwitchNode:
            if type(cell) is DataCell:
                port = node.fwd[cell.vc]
                port.state.on_data_cell(cell)
            elif cell.direction is Direction.FORWARD:
                port = node.fwd[cell.vc]
                cell = port.state.on_forward_control_cell(cell)
                key = (node.id, port.next_node.id, cell.vc)
                series = self.laf_stamp.get(key)
                if series is None:
                    series = self.laf_stamp[key] = m.MetricSeries("laf_stamp", key)
                m.set_step(series, now, cell.laf)
            else:
                port = node.rev[cell.vc]
            sched.schedule(port.channel.transmit(now), ARRIVAL, port.next_node, cell)
        elif type(node) is DestNode:
            dest = node.dests[cell.vc]
            if type(cell) is DataCell:
                dest.on_data_cell(cell)
                self.data_delivered += 1
                self.deliveries[cell.vc].append(now)
            else:
                ret = dest.on_control_cell(cell)
                self.ctl_returned[cell.vc] += 1
                self._trace(now, "turnaround", ret)
                channel, hop = node.back[cell.vc]
                sched.schedule(channel.transmit(now), ARRIVAL, hop, ret)
        else:
            self._source_return(node, cell, now)

    def _source_return(self, node: SourceNode, cell: ControlCell, now):
        self.ctl_received[node.vc] = self.ctl_received.get(node.vc, 0) + 1
        self._trace(now, "return", cell)
        if not node.active:
            self.dropped_return += 1
            return
        state = node.state
        before_slot = state.next_slot_at
        before_tcr = state.tcr
        dropped = state.dropped_cells
        state.on_control_cell_return(cell, now)
        if state.dropped_cells != dropped:
            self.dropped_return += 1
            return
        if state.tcr != before_tcr:
            m.set_step(self.tcr[node.vc], now, float(state.tcr))
        if state.next_slot_at != before_slot:
            node.slot_gen += 1
            self.sched.schedule(state.next_slot_at, SLOT, node, node.slot_gen)

    def _slot(self, node: SourceNode, gen, now):
        if gen != node.slot_gen:
            return
        state = node.state
        cell = state.on_cell_slot_timer(now)
        if cell is not None:
            if type(cell) is DataCell:
                self.data_sent += 1
            else:
                self.ctl_sent[node.vc] += 1
                problems = validate_control_cell(cell)
                if problems:
                    self.violations.append(f"t={now} VC {node.vc} control cell invalid: {problems}")
                self._trace(now, "emit", cell)
            self.sched.schedule(node.channel.transmit(now), ARRIVAL, node.next_node, cell)
        self.sched.schedule(state.next_slot_at, SLOT, node, gen)

    def _averaging(self, node: SourceNode, gen, now):
        if gen != node.avg_gen:
            return
        state = node.state
        cell = state.on_averaging_timer(now)
        m.set_step(self.ocr[node.vc], now, cell.ocr)
        self.sched.schedule(state.next_averaging_at, AVERAGING, node, gen)

    def _rollover(self, sw: SwitchNode, _, now):
        for nb, port in sw.ports.items():
            port.state.on_averaging_timer(now)
            m.record_sample(self.load_level[(sw.id, nb)], now, port.state.load_level)
        self.sched.schedule(now + sw.ai_ns, ROLLOVER, sw)

    def _activate(self, node: SourceNode, _, now):
        state = init_source(node.vc, node.icr, node.initial_ai, node.pcr, node.floor,
                            now=now, persistent=node.persistent)
        state.next_seq = node.next_seq
        node.state = state
        node.active = True
        node.slot_gen += 1
        node.avg_gen += 1
        m.set_step(self.tcr[node.vc], now, float(state.tcr))
        self.sched.schedule(state.next_slot_at, SLOT, node, node.slot_gen)
        self.sched.schedule(state.next_averaging_at, AVERAGING, node, node.avg_gen)

    def _deactivate(self, node: SourceNode, _, now):
        node.active = False
        node.next_seq = node.state.next_seq
        node.slot_gen += 1
        node.avg_gen += 1
        m.set_step(self.tcr[node.vc], now, 0.0)

    def _host_data(self, node: SourceNode, n, now):
        if not node.active:
            return
        state = node.state
        burst = [DataCell(node.vc, state.next_seq + i) for i in range(n)]
        state.next_seq += n
        state.on_host_data(burst)

    def _sample(self, _, __, now):
        for key, port in self.ports.items():
            m.record_sample(self.queue[key], now, port.channel.queue_len(now))
        if self.check_invariants:
            self._check_conservation(now)
        self.sched.schedule(now + self.cfg.metrics.queue_sample_ns, SAMPLE, None)

    def _check_conservation(self, now):
        in_network = 0
        for ev in self.sched.heap:
            if ev[2] == ARRIVAL and type(ev[4]) is DataCell:
                in_network += 1
        self.conservation_checks += 1
        if self.data_delivered + in_network != self.data_sent:
            self.violations.append(
                f"t={now} cell conservation broken: sent={self.data_sent} "
                f"delivered={self.data_delivered} in_network={in_network}"
            )

    def _trace(self, now, event, cell):
        if self.trace_control:
            self.control_trace.append(
                (now, event, cell.vc, cell.direction.value, cell.tcr, cell.ocr, cell.laf, cell.ai)
            )

    # --- run ------------------------------------------------------------------

    def run(self, until: int | None = None) -> SimResult:
        end = self.cfg.duration_ns if until is None else until
        handlers = (self._arrival, self._slot, self._averaging, self._rollover,
                    self._activate, self._deactivate, self._sample, self._host_data)
        t0 = _time.perf_counter()
        self.sched.run_until(end, handlers)
        wall = _time.perf_counter() - t0
        if self.check_invariants:
            self._check_conservation(end)
        return self._result(end, wall)

    def _result(self, end, wall) -> SimResult:
        cfg = self.cfg
        n_windows = end // cfg.util_window_ns()
        util = {
            ch.id: m.utilization_per_window(ch.bins, ch.window_ns, ch.tx_ns, n_windows, ch.id)
            for ch in self.channels.values()
        }
        report = RunReport(
            name=cfg.name,
            duration_ns=end,
            events=self.sched.processed,
            trace_hash=self.sched.trace_hash(),
            wall_time_s=wall,
            data_cells_sent=self.data_sent,
            data_cells_delivered=self.data_delivered,
            control_cells_sent=dict(self.ctl_sent),
            control_cells_returned=dict(self.ctl_returned),
            control_cells_received=dict(self.ctl_received),
            dropped_return_cells=self.dropped_return,
            conservation_checks=self.conservation_checks,
            delivered_per_vc={
                vc: d.data_cells_received
                for node in self.nodes.values() if isinstance(node, DestNode)
                for vc, d in node.dests.items()
            },
            violations=list(self.violations),
        )
        return SimResult(
            config=cfg,
            report=report,
            tcr=self.tcr,
            queue=self.queue,
            load_level=self.load_level,
            laf_stamp=self.laf_stamp,
            utilization=util,
            deliveries=self.deliveries,
            ocr=self.ocr,
            control_trace=self.control_trace,
            channels=self.channels,
            ports=self.ports,
        )


def run(cfg: ScenarioConfig, **kwargs) -> SimResult:
    return Simulation(cfg, **kwargs).run()
