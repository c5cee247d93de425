"""Cell types, rate/time value types and control cell validation."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

NS_PER_S = 1_000_000_000
ATM_CELL_BITS = 424

VcId = int


class ConfigError(ValueError):
    """Invalid scenario or protocol parameters."""


class InvariantViolation(RuntimeError):
    """A simulation invariant was broken. Always an engine bug."""


class SimTime(int):
    """Integer nanoseconds since simulation start."""

    def __new__(cls, value=0):
        if isinstance(value, float):
            if not math.isfinite(value) or value != int(value):
                raise ValueError(f"SimTime must be an integral number of ns, got {value!r}")
        v = int.__new__(cls, value)
        if v < 0:
            raise ValueError(f"SimTime must be >= 0, got {value!r}")
        return v


class RateCps(float):
    """Cells per second; finite and non-negative."""

    def __new__(cls, value=0.0):
        v = float.__new__(cls, value)
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"RateCps must be finite and >= 0, got {value!r}")
        return v


class Direction(enum.Enum):
    FORWARD = "forward"
    RETURN = "return"


@dataclass(frozen=True, slots=True)
class ControlCell:
    vc: VcId
    tcr: float
    ocr: float
    laf: float = 0.0
    ai: int = 0  # ns
    direction: Direction = Direction.FORWARD
    created_at: int = 0


@dataclass(frozen=True, slots=True)
class DataCell:
    vc: VcId
    seq: int


def validate_control_cell(cell: ControlCell) -> list[str]:
    """Return the list of violated constraints; an empty list means ok."""
    problems = []
    for name in ("tcr", "ocr", "laf", "ai"):
        value = getattr(cell, name)
        if not math.isfinite(value):
            problems.append(f"{name} not finite")
    if cell.tcr < 0:
        problems.append("tcr<0")
    if cell.ocr < 0:
        problems.append("ocr<0")
    if cell.ocr > cell.tcr:
        problems.append("ocr>tcr")
    if cell.laf < 0:
        problems.append("laf<0")
    if cell.ai < 0:
        problems.append("ai<0")
    return problems


def cell_transmission_time(cell_size_bits: int, link_bw_bps: float) -> int:
    """Time in ns to clock one cell onto a link, rounded to the nearest ns."""
    if cell_size_bits <= 0 or not link_bw_bps > 0:
        raise ConfigError(
            f"cell size and link bandwidth must be positive "
            f"(got {cell_size_bits} bits, {link_bw_bps} bps)"
        )
    return round(cell_size_bits * NS_PER_S / link_bw_bps)


def interval_ns(rate_cps: float) -> int:
    """Inter-cell time in ns for a rate, never below 1 ns."""
    return max(1, round(NS_PER_S / rate_cps))
