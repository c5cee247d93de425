"""Source end-system: paced cell transmission and rate adjustment from returned control cells."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .cells import (
    NS_PER_S,
    ConfigError,
    ControlCell,
    DataCell,
    Direction,
    RateCps,
    VcId,
    interval_ns,
)

DEFAULT_ICR_FRACTION = 0.1
DEFAULT_TCR_FLOOR = 10.0
DEFAULT_AI_NS = 300_000


@dataclass
class SourceState:
    vc: VcId
    tcr: float
    inter_cell_time: int
    averaging_interval: int
    pcr: float
    tcr_floor: float
    persistent: bool = True
    transmitted_cell_count: int = 0
    output_queue: deque = field(default_factory=deque)
    pending_control_bypass: ControlCell | None = None
    next_seq: int = 0
    # timer deadlines in ns; the engine schedules against these
    next_slot_at: int = 0
    next_averaging_at: int = 0
    last_slot_at: int | None = None
    dropped_cells: int = 0
    ocr: float = 0.0

    def on_host_data(self, burst) -> None:
        self.output_queue.extend(burst)

    def _next_data_cell(self):
        if self.output_queue:
            return self.output_queue.popleft()
        if self.persistent:
            cell = DataCell(self.vc, self.next_seq)
            self.next_seq += 1
            return cell
        return None

    def on_cell_slot_timer(self, now: int):
        """One transmission opportunity. Returns the emitted cell or None."""
        self.last_slot_at = now
        self.next_slot_at = now + self.inter_cell_time
        if self.pending_control_bypass is not None:
            cell = self.pending_control_bypass
            self.pending_control_bypass = None
            return cell
        cell = self._next_data_cell()
        if cell is not None:
            self.transmitted_cell_count += 1
        return cell

    def on_averaging_timer(self, now: int) -> ControlCell:
        self.ocr = self.transmitted_cell_count * NS_PER_S / self.averaging_interval
        self.transmitted_cell_count = 0
        cell = ControlCell(
            vc=self.vc,
            tcr=max(self.tcr, self.ocr),
            ocr=self.ocr,
            laf=0.0,
            ai=0,
            direction=Direction.FORWARD,
            created_at=now,
        )
        # a control cell not yet sent is superseded by the fresher one
        self.pending_control_bypass = cell
        self.next_averaging_at = now + self.averaging_interval
        return cell

    def on_control_cell_return(self, cell: ControlCell, now: int | None = None) -> None:
        """Apply returned feedback.

        When ``now`` is given the pending cell slot is re-timed to the new
        inter-cell time, measured from the last slot.
        """
        if cell.vc != self.vc or cell.direction is not Direction.RETURN:
            self.dropped_cells += 1
            return
        laf = cell.laf
        new_tcr = self.pcr if laf == 0 else cell.tcr / laf
        tcr = self.tcr
        if laf >= 1:
            if new_tcr < tcr:
                tcr = new_tcr
        elif new_tcr > tcr:
            tcr = new_tcr
        tcr = min(max(tcr, self.tcr_floor), self.pcr)
        if tcr != self.tcr:
            self.tcr = RateCps(tcr)
            self.inter_cell_time = interval_ns(tcr)
            if now is not None and self.last_slot_at is not None:
                self.next_slot_at = max(now, self.last_slot_at + self.inter_cell_time)
        if cell.ai > 0:
            self.averaging_interval = cell.ai


def init_source(
    vc: VcId,
    icr: float,
    initial_ai: int,
    pcr: float,
    tcr_floor: float = DEFAULT_TCR_FLOOR,
    now: int = 0,
    persistent: bool = True,
) -> SourceState:
    if not 0 < tcr_floor <= icr <= pcr:
        raise ConfigError(
            f"VC {vc}: need 0 < tcr_floor <= icr <= pcr, "
            f"got floor={tcr_floor} icr={icr} pcr={pcr}"
        )
    if initial_ai <= 0:
        raise ConfigError(f"VC {vc}: initial averaging interval must be > 0 ns")
    ict = interval_ns(icr)
    return SourceState(
        vc=vc,
        tcr=RateCps(icr),
        inter_cell_time=ict,
        averaging_interval=int(initial_ai),
        pcr=float(pcr),
        tcr_floor=float(tcr_floor),
        persistent=persistent,
        next_slot_at=now + ict,
        next_averaging_at=now + int(initial_ai),
    )
