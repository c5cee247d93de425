"""Per-output-port switch algorithm: load level, active VC count, fair share, feedback stamping.

Cell handlers do constant work per cell regardless of how many VCs cross
the port; only the interval rollover touches the seen-set.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .cells import NS_PER_S, ConfigError, ControlCell, DataCell, VcId


@dataclass
class SwitchPortState:
    target_utilization: float
    delta: float
    target_cell_rate: float
    target_cell_count: float
    averaging_interval: int
    upper_load_bound: float
    lower_load_bound: float
    received_cell_count: int = 0
    vc_seen: set = field(default_factory=set)
    active_count: int = 0
    num_active_vcs: int = 1
    fair_share: float = 0.0
    load_level: float = 0.0
    next_rollover_at: int = 0
    intervals: int = 0

    def on_data_cell(self, cell: DataCell) -> None:
        self.received_cell_count += 1
        vc = cell.vc
        if vc not in self.vc_seen:
            self.vc_seen.add(vc)
            self.active_count += 1

    def on_averaging_timer(self, now: int) -> None:
        self.num_active_vcs = max(self.active_count, 1)
        self.fair_share = self.target_cell_rate / self.num_active_vcs
        self.load_level = self.received_cell_count / self.target_cell_count
        self.vc_seen.clear()
        self.active_count = 0
        self.received_cell_count = 0
        self.intervals += 1
        self.next_rollover_at = now + self.averaging_interval

    def decision(self, ocr: float) -> float:
        z = self.load_level
        if self.lower_load_bound <= z <= self.upper_load_bound:
            if ocr > self.fair_share:
                return z / self.lower_load_bound
            return z / self.upper_load_bound
        return z

    def on_forward_control_cell(self, cell: ControlCell) -> ControlCell:
        """Stamp a forward control cell as it enters the output queue."""
        d = self.decision(cell.ocr)
        laf = d if d > cell.laf else cell.laf
        ai = self.averaging_interval if self.averaging_interval > cell.ai else cell.ai
        if laf == cell.laf and ai == cell.ai:
            return cell
        return replace(cell, laf=laf, ai=ai)


def target_cell_rate(link_bw_bps: float, cell_size_bits: int, target_utilization: float) -> float:
    return target_utilization * link_bw_bps / cell_size_bits


def init_port(
    link_bw_bps: float,
    cell_size_bits: int,
    target_utilization: float,
    delta: float,
    averaging_interval: int,
    phase_offset: int = 0,
) -> SwitchPortState:
    if not 0 < target_utilization <= 1:
        raise ConfigError(f"target utilization must be in (0, 1], got {target_utilization}")
    if not 0 <= delta < 1:
        raise ConfigError(f"TUB half-width must be in [0, 1), got {delta}")
    if averaging_interval <= 0:
        raise ConfigError(f"averaging interval must be > 0 ns, got {averaging_interval}")
    if link_bw_bps <= 0 or cell_size_bits <= 0:
        raise ConfigError("link bandwidth and cell size must be positive")
    if phase_offset < 0:
        raise ConfigError(f"phase offset must be >= 0, got {phase_offset}")
    rate = target_cell_rate(link_bw_bps, cell_size_bits, target_utilization)
    return SwitchPortState(
        target_utilization=target_utilization,
        delta=delta,
        target_cell_rate=rate,
        target_cell_count=rate * averaging_interval / NS_PER_S,
        averaging_interval=int(averaging_interval),
        upper_load_bound=1 + delta,
        lower_load_bound=1 - delta,
        fair_share=rate,
        next_rollover_at=phase_offset + int(averaging_interval),
    )


def stamp_path(ports: list[SwitchPortState], cell: ControlCell) -> ControlCell:
    """Run a forward control cell through a sequence of ports."""
    for port in ports:
        cell = port.on_forward_control_cell(cell)
    return cell
