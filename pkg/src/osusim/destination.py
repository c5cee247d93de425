"""Destination end-system: delivery accounting and control cell turnaround."""
from __future__ import annotations

from dataclasses import dataclass, replace

from .cells import ControlCell, DataCell, Direction, InvariantViolation, VcId


@dataclass
class DestinationState:
    vc: VcId
    data_cells_received: int = 0
    last_seq_seen: int = -1
    control_cells_returned: int = 0

    def on_data_cell(self, cell: DataCell) -> None:
        if cell.seq <= self.last_seq_seen:
            raise InvariantViolation(
                f"VC {self.vc}: data cell seq {cell.seq} after {self.last_seq_seen}, FIFO broken"
            )
        self.last_seq_seen = cell.seq
        self.data_cells_received += 1

    def on_control_cell(self, cell: ControlCell) -> ControlCell:
        self.control_cells_returned += 1
        return replace(cell, direction=Direction.RETURN)
