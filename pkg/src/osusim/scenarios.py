"""Builders for the two LAN benchmark topologies.

Transient source::

    S1 ──┐                ┌── D1
         SW1 ══════ SW2 ──┤
    S2 ──┘                └── D2

Parking lot (n = 3)::

    S1   S2   S3
    │    │    │
    SW1─SW2──SW3══ D        VC_i enters at SW_i, every VC leaves via SW3 -> D
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .cells import ATM_CELL_BITS, ConfigError
from .config import (
    DEFAULT_DURATION_NS,
    LINK_RATE_BPS,
    NS_PER_KM,
    DestinationConfig,
    LinkConfig,
    MetricsConfig,
    ProtocolParams,
    ScenarioConfig,
    SourceConfig,
    SwitchConfig,
    VcConfig,
    check,
)
from .source import DEFAULT_TCR_FLOOR
from .switch import target_cell_rate


@dataclass
class ScenarioParams:
    duration_ns: int = DEFAULT_DURATION_NS
    bandwidth_bps: float = LINK_RATE_BPS
    length_km: float = 1.0
    ns_per_km: float = NS_PER_KM
    cell_size_bits: int = ATM_CELL_BITS
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    icr_cps: float | None = None  # None: 10% of the access link rate
    tcr_floor_cps: float = DEFAULT_TCR_FLOOR
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def target_rate(self) -> float:
        return target_cell_rate(self.bandwidth_bps, self.cell_size_bits, self.protocol.target_utilization)


def _link(a, b, p: ScenarioParams):
    return LinkConfig(f"{a}-{b}", a, b, p.bandwidth_bps, p.length_km)


def _source(sid, p: ScenarioParams, windows=None, icr=None):
    return SourceConfig(
        sid,
        icr_cps=icr if icr is not None else p.icr_cps,
        tcr_floor_cps=p.tcr_floor_cps,
        initial_ai_ns=p.protocol.ai_ns,
        active_windows=windows,
    )


def _config(p: ScenarioParams, name, **kw) -> ScenarioConfig:
    if p.duration_ns <= 0:
        raise ConfigError(f"duration must be > 0, got {p.duration_ns}")
    return check(ScenarioConfig(
        duration_ns=p.duration_ns,
        cell_size_bits=p.cell_size_bits,
        ns_per_km=p.ns_per_km,
        protocol=p.protocol,
        metrics=p.metrics,
        name=name,
        **kw,
    ))


def _two_source(p: ScenarioParams, name, windows, icrs):
    switches = [SwitchConfig("SW1"), SwitchConfig("SW2")]
    sources = [_source("S1", p, windows[0], icrs[0]), _source("S2", p, windows[1], icrs[1])]
    dests = [DestinationConfig("D1"), DestinationConfig("D2")]
    links = [_link(*ab, p) for ab in (("S1", "SW1"), ("S2", "SW1"), ("SW1", "SW2"), ("SW2", "D1"), ("SW2", "D2"))]
    vcs = [VcConfig(1, ["S1", "SW1", "SW2", "D1"]), VcConfig(2, ["S2", "SW1", "SW2", "D2"])]
    return _config(p, name, switches=switches, sources=sources, destinations=dests, links=links, vcs=vcs)


def build_transient_scenario(params: ScenarioParams | None = None) -> ScenarioConfig:
    """S1 always on; S2 on for the middle third of the run."""
    p = params or ScenarioParams()
    if p.duration_ns <= 0:
        raise ConfigError(f"duration must be > 0, got {p.duration_ns}")
    d = p.duration_ns
    windows = ([(0, d)], [(d // 3, 2 * d // 3)])
    return _two_source(p, "transient", windows, (None, None))


def build_two_source(icr1: float, icr2: float, params: ScenarioParams | None = None) -> ScenarioConfig:
    """Transient topology with both sources on for the whole run from the given start rates."""
    p = params or ScenarioParams()
    return _two_source(p, "two_source", (None, None), (icr1, icr2))


def build_parking_lot(n: int = 3, params: ScenarioParams | None = None) -> ScenarioConfig:
    if n < 2:
        raise ConfigError(f"parking lot needs n >= 2 switches, got {n}")
    p = params or ScenarioParams()
    sw = [f"SW{i}" for i in range(1, n + 1)]
    switches = [SwitchConfig(s) for s in sw]
    sources = [_source(f"S{i}", p) for i in range(1, n + 1)]
    links = [_link(f"S{i}", sw[i - 1], p) for i in range(1, n + 1)]
    links += [_link(a, b, p) for a, b in zip(sw, sw[1:])]
    links.append(_link(sw[-1], "D", p))
    vcs = [VcConfig(i, [f"S{i}", *sw[i - 1:], "D"]) for i in range(1, n + 1)]
    return _config(p, f"parkinglot{n}", switches=switches, sources=sources,
                   destinations=[DestinationConfig("D")], links=links, vcs=vcs)


def build_single_hop(icr: float, params: ScenarioParams | None = None) -> ScenarioConfig:
    """One source, one switch, one destination."""
    p = params or ScenarioParams()
    return _config(
        p, "single_hop",
        switches=[SwitchConfig("SW1")],
        sources=[_source("S1", p, icr=icr)],
        destinations=[DestinationConfig("D1")],
        links=[_link("S1", "SW1", p), _link("SW1", "D1", p)],
        vcs=[VcConfig(1, ["S1", "SW1", "D1"])],
    )
