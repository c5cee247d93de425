"""Scenario configuration: dataclasses, YAML loading and validation.

The file format is YAML. Top level keys::

    duration_ns | duration_ms, cell_size_bits, ns_per_km, seed, jitter_ns,
    protocol: {target_utilization, tub_half_width, ai_ns}
    metrics:  {queue_sample_ns, util_window_ns, steady_fraction, output_dir, control_trace}
    switches: [{id, ai_ns, target_utilization, tub_half_width, phase_offset_ns,
                ports: {<neighbour id>: {target_utilization, tub_half_width}}}]
    sources:  [{id, icr_cps, pcr_cps, tcr_floor_cps, initial_ai_ns,
                active_windows: [[start_ns, end_ns], ...], traffic, bursts: [[t_ns, n], ...]}]
    destinations: [{id}]
    links:    [{id, a, b, bandwidth_bps, length_km}]
    vcs:      [{id, route: [source, switch..., destination]}]

Links are full duplex: each entry yields one channel per direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .cells import ATM_CELL_BITS, ConfigError
from .source import DEFAULT_AI_NS, DEFAULT_ICR_FRACTION, DEFAULT_TCR_FLOOR

LINK_RATE_BPS = 155e6
NS_PER_KM = 5_000.0
DEFAULT_DURATION_NS = 600_000_000


class ConfigValidationError(ConfigError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.violations))


@dataclass
class ProtocolParams:
    target_utilization: float = 0.9
    tub_half_width: float = 0.1
    ai_ns: int = DEFAULT_AI_NS


@dataclass
class PortOverride:
    target_utilization: float | None = None
    tub_half_width: float | None = None


@dataclass
class SwitchConfig:
    id: str
    ai_ns: int | None = None
    target_utilization: float | None = None
    tub_half_width: float | None = None
    phase_offset_ns: int = 0
    ports: dict[str, PortOverride] = field(default_factory=dict)


@dataclass
class SourceConfig:
    id: str
    icr_cps: float | None = None
    pcr_cps: float | None = None
    tcr_floor_cps: float = DEFAULT_TCR_FLOOR
    initial_ai_ns: int = DEFAULT_AI_NS
    active_windows: list[tuple[int, int]] | None = None
    traffic: str = "persistent"
    bursts: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class DestinationConfig:
    id: str


@dataclass
class LinkConfig:
    id: str
    a: str
    b: str
    bandwidth_bps: float = LINK_RATE_BPS
    length_km: float = 1.0


@dataclass
class VcConfig:
    id: int
    route: list[str]


@dataclass
class MetricsConfig:
    queue_sample_ns: int = 50_000
    util_window_ns: int | None = None
    steady_fraction: float = 1 / 3
    output_dir: str = "out"
    control_trace: bool = False


@dataclass
class ScenarioConfig:
    switches: list[SwitchConfig]
    sources: list[SourceConfig]
    destinations: list[DestinationConfig]
    links: list[LinkConfig]
    vcs: list[VcConfig]
    duration_ns: int = DEFAULT_DURATION_NS
    cell_size_bits: int = ATM_CELL_BITS
    ns_per_km: float = NS_PER_KM
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    seed: int | None = None
    jitter_ns: int = 0
    name: str = "custom"

    # lookups used by the engine and validators
    def source(self, node_id: str) -> SourceConfig:
        return next(s for s in self.sources if s.id == node_id)

    def switch(self, node_id: str) -> SwitchConfig:
        return next(s for s in self.switches if s.id == node_id)

    def link_between(self, a: str, b: str) -> LinkConfig | None:
        for link in self.links:
            if {link.a, link.b} == {a, b}:
                return link
        return None

    def switch_ai_ns(self, node_id: str) -> int:
        ai = self.switch(node_id).ai_ns
        return self.protocol.ai_ns if ai is None else ai

    def port_params(self, switch_id: str, neighbour: str) -> tuple[float, float]:
        sw = self.switch(switch_id)
        u = sw.target_utilization if sw.target_utilization is not None else self.protocol.target_utilization
        d = sw.tub_half_width if sw.tub_half_width is not None else self.protocol.tub_half_width
        override = sw.ports.get(neighbour)
        if override is not None:
            if override.target_utilization is not None:
                u = override.target_utilization
            if override.tub_half_width is not None:
                d = override.tub_half_width
        return u, d

    def source_pcr(self, src: SourceConfig) -> float:
        if src.pcr_cps is not None:
            return src.pcr_cps
        vc = next(v for v in self.vcs if v.route[0] == src.id)
        link = self.link_between(vc.route[0], vc.route[1])
        return link.bandwidth_bps / self.cell_size_bits

    def source_icr(self, src: SourceConfig) -> float:
        if src.icr_cps is not None:
            return src.icr_cps
        return DEFAULT_ICR_FRACTION * self.source_pcr(src)

    def source_windows(self, src: SourceConfig) -> list[tuple[int, int]]:
        if src.active_windows is None:
            return [(0, self.duration_ns)]
        return [tuple(w) for w in src.active_windows]

    def util_window_ns(self) -> int:
        w = self.metrics.util_window_ns
        return self.protocol.ai_ns if w is None else w


def validate(cfg: ScenarioConfig) -> list[tuple[tuple, str]]:
    """Semantic checks. Returns (path, message) pairs; empty when valid."""
    errs: list[tuple[tuple, str]] = []

    def err(path, msg):
        errs.append((path, msg))

    if not isinstance(cfg.duration_ns, int) or cfg.duration_ns <= 0:
        err(("duration_ns",), f"duration must be a positive integer ns, got {cfg.duration_ns!r}")
    if cfg.cell_size_bits <= 0:
        err(("cell_size_bits",), "cell size must be > 0")
    if not cfg.ns_per_km > 0:
        err(("ns_per_km",), "propagation constant must be > 0")
    if cfg.jitter_ns < 0:
        err(("jitter_ns",), "jitter must be >= 0")
    _check_protocol(cfg.protocol.target_utilization, cfg.protocol.tub_half_width, ("protocol",), err)
    if cfg.protocol.ai_ns <= 0:
        err(("protocol", "ai_ns"), "averaging interval must be > 0")
    m = cfg.metrics
    if m.queue_sample_ns <= 0:
        err(("metrics", "queue_sample_ns"), "must be > 0")
    if m.util_window_ns is not None and m.util_window_ns <= 0:
        err(("metrics", "util_window_ns"), "must be > 0")
    if not 0 < m.steady_fraction <= 1:
        err(("metrics", "steady_fraction"), "must be in (0, 1]")

    ids: dict[str, str] = {}
    for kind, items in (("switches", cfg.switches), ("sources", cfg.sources), ("destinations", cfg.destinations)):
        for i, item in enumerate(items):
            if item.id in ids:
                err((kind, i, "id"), f"duplicate node id {item.id!r}")
            ids[item.id] = kind

    for i, sw in enumerate(cfg.switches):
        p = ("switches", i)
        if sw.ai_ns is not None and sw.ai_ns <= 0:
            err(p + ("ai_ns",), "averaging interval must be > 0")
        if sw.phase_offset_ns < 0:
            err(p + ("phase_offset_ns",), "phase offset must be >= 0")
        _check_protocol(sw.target_utilization, sw.tub_half_width, p, err)
        for nb, ov in sw.ports.items():
            _check_protocol(ov.target_utilization, ov.tub_half_width, p + ("ports", nb), err)
            if cfg.link_between(sw.id, nb) is None:
                err(p + ("ports", nb), f"switch {sw.id!r} has no link to {nb!r}")

    link_ids = set()
    for i, link in enumerate(cfg.links):
        p = ("links", i)
        if link.id in link_ids:
            err(p + ("id",), f"duplicate link id {link.id!r}")
        link_ids.add(link.id)
        for end in ("a", "b"):
            if getattr(link, end) not in ids:
                err(p + (end,), f"link {link.id!r} references unknown node {getattr(link, end)!r}")
        if link.a == link.b:
            err(p, f"link {link.id!r} is a self-loop")
        if not link.bandwidth_bps > 0:
            err(p + ("bandwidth_bps",), "bandwidth must be > 0")
        if not link.length_km > 0:
            err(p + ("length_km",), f"link {link.id!r} must have positive length")

    vc_ids = set()
    used_sources: dict[str, int] = {}
    for i, vc in enumerate(cfg.vcs):
        p = ("vcs", i)
        if vc.id in vc_ids:
            err(p + ("id",), f"duplicate VC id {vc.id}")
        vc_ids.add(vc.id)
        route = vc.route
        if len(route) < 2:
            err(p + ("route",), "route needs at least a source and a destination")
            continue
        if len(set(route)) != len(route):
            err(p + ("route",), f"VC {vc.id} route revisits a node (must be acyclic)")
        if ids.get(route[0]) != "sources":
            err(p + ("route",), f"VC {vc.id} must start at a source, got {route[0]!r}")
        elif route[0] in used_sources:
            err(p + ("route",), f"source {route[0]!r} already carries VC {used_sources[route[0]]}")
        else:
            used_sources[route[0]] = vc.id
        if ids.get(route[-1]) != "destinations":
            err(p + ("route",), f"VC {vc.id} must end at a destination, got {route[-1]!r}")
        for j, node in enumerate(route[1:-1], start=1):
            if ids.get(node) != "switches":
                err(p + ("route", j), f"VC {vc.id} hop {node!r} is not a switch")
        for a, b in zip(route, route[1:]):
            if cfg.link_between(a, b) is None:
                err(p + ("route",), f"VC {vc.id}: no link between {a!r} and {b!r}")

    for i, src in enumerate(cfg.sources):
        p = ("sources", i)
        if src.id not in used_sources:
            err(p, f"source {src.id!r} carries no VC")
            continue
        if src.traffic not in ("persistent", "scheduled"):
            err(p + ("traffic",), f"traffic must be 'persistent' or 'scheduled', got {src.traffic!r}")
        if src.initial_ai_ns <= 0:
            err(p + ("initial_ai_ns",), "initial averaging interval must be > 0")
        try:
            pcr = cfg.source_pcr(src)
            icr = cfg.source_icr(src)
        except (StopIteration, AttributeError):
            continue
        for name, val in (("icr_cps", icr), ("pcr_cps", pcr), ("tcr_floor_cps", src.tcr_floor_cps)):
            if not (isinstance(val, (int, float)) and math.isfinite(val)):
                err(p + (name,), "must be a finite number")
        if not 0 < src.tcr_floor_cps <= icr <= pcr:
            err(p, f"need 0 < tcr_floor <= icr <= pcr (floor={src.tcr_floor_cps}, icr={icr}, pcr={pcr})")
        prev_end = -1
        for j, w in enumerate(cfg.source_windows(src)):
            if len(w) != 2 or not w[0] < w[1] or w[0] < 0:
                err(p + ("active_windows", j), f"window {list(w)} must be [start, end) with 0 <= start < end")
            elif w[0] < prev_end:
                err(p + ("active_windows", j), "windows must be sorted and disjoint")
            else:
                prev_end = w[1]
        for j, b in enumerate(src.bursts):
            if len(b) != 2 or b[0] < 0 or b[1] < 0:
                err(p + ("bursts", j), "burst must be [time_ns >= 0, cells >= 0]")
    return errs


def _check_protocol(u, d, path, err):
    if u is not None and not 0 < u <= 1:
        err(path + ("target_utilization",), f"target utilization must be in (0, 1], got {u}")
    if d is not None and not 0 <= d < 1:
        err(path + ("tub_half_width",), f"TUB half-width must be in [0, 1), got {d}")


def check(cfg: ScenarioConfig, lines: dict | None = None) -> ScenarioConfig:
    errs = validate(cfg)
    if errs:
        raise ConfigValidationError([_format(p, m, lines) for p, m in errs])
    return cfg


def _format(path, msg, lines):
    where = "".join(f"[{k}]" if isinstance(k, int) else f".{k}" for k in path).lstrip(".")
    line = None
    if lines:
        # nearest ancestor with a known line
        for n in range(len(path), -1, -1):
            line = lines.get(tuple(path[:n]))
            if line is not None:
                break
    return f"{where}: {msg}" + (f" (line {line})" if line is not None else "")


# --- file loading -----------------------------------------------------------

_SECTIONS = {
    "protocol": ProtocolParams,
    "metrics": MetricsConfig,
}
_LISTS = {
    "switches": SwitchConfig,
    "sources": SourceConfig,
    "destinations": DestinationConfig,
    "links": LinkConfig,
    "vcs": VcConfig,
}
_TOP = {"duration_ns", "duration_ms", "cell_size_bits", "ns_per_km", "seed", "jitter_ns", "name"}


def _line_map(node, path=(), out=None) -> dict:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _line_map(v, path + (str(k.value),), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


def _keys(cls):
    return {f.name for f in fields(cls)}


def _number(v, kind: str, path, errs):
    """Coerce ``v`` to int/float. YAML 1.1 reads ``1e6`` (no exponent sign)
    as a string, so numeric strings are accepted too."""
    if isinstance(v, bool):
        errs.append((path, f"expected a number, got {v!r}"))
        return v
    try:
        x = float(v)
    except (TypeError, ValueError):
        errs.append((path, f"expected a number, got {v!r}"))
        return v
    if kind == "float":
        return x
    if not x.is_integer():
        errs.append((path, f"expected an integer, got {v!r}"))
        return v
    return int(x)


def _numeric_fields(cls) -> dict[str, str]:
    out = {}
    for f in fields(cls):
        t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
        head = t.split("|")[0].strip()
        if head in ("int", "float") and f.name != "id":
            out[f.name] = head
    return out


def _build(cls, raw, path, errs):
    if not isinstance(raw, dict):
        errs.append((path, f"expected a mapping, got {type(raw).__name__}"))
        return None
    unknown = set(raw) - _keys(cls)
    for k in sorted(map(str, unknown)):
        errs.append((path + (k,), f"unknown key {k!r}"))
    kwargs = {k: v for k, v in raw.items() if k in _keys(cls)}
    for k, kind in _numeric_fields(cls).items():
        if kwargs.get(k) is not None:
            kwargs[k] = _number(kwargs[k], kind, path + (k,), errs)
    if cls is SwitchConfig and "ports" in kwargs:
        ports = {}
        for nb, ov in (kwargs["ports"] or {}).items():
            built = _build(PortOverride, ov, path + ("ports", str(nb)), errs)
            if built is not None:
                ports[str(nb)] = built
        kwargs["ports"] = ports
    for k in ("id", "a", "b") if cls is not VcConfig else ():
        if k in kwargs:
            kwargs[k] = str(kwargs[k])
    if cls is VcConfig and "route" in kwargs:
        kwargs["route"] = [str(n) for n in kwargs["route"] or []]
    try:
        return cls(**kwargs)
    except TypeError as exc:
        errs.append((path, str(exc).replace("__init__() ", "")))
        return None


def parse_config(raw: dict, lines: dict | None = None) -> ScenarioConfig:
    errs: list[tuple[tuple, str]] = []
    if not isinstance(raw, dict):
        raise ConfigValidationError(["top level must be a mapping"])
    for k in sorted(map(str, set(raw) - _TOP - set(_SECTIONS) - set(_LISTS))):
        errs.append(((k,), f"unknown key {k!r}"))
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in raw:
            built = _build(cls, raw[name] or {}, (name,), errs)
            if built is not None:
                kwargs[name] = built
    for name, cls in _LISTS.items():
        items = raw.get(name) or []
        if not isinstance(items, list):
            errs.append(((name,), "expected a list"))
            items = []
        built = [_build(cls, item, (name, i), errs) for i, item in enumerate(items)]
        kwargs[name] = [b for b in built if b is not None]
    top = _numeric_fields(ScenarioConfig)
    for k in ("cell_size_bits", "ns_per_km", "seed", "jitter_ns", "name"):
        if k in raw:
            kwargs[k] = raw[k] if k not in top or raw[k] is None else _number(raw[k], top[k], (k,), errs)
    if "duration_ns" in raw and "duration_ms" in raw:
        errs.append((("duration_ms",), "give duration_ns or duration_ms, not both"))
    if "duration_ns" in raw:
        kwargs["duration_ns"] = _number(raw["duration_ns"], "int", ("duration_ns",), errs)
    elif "duration_ms" in raw:
        ms = _number(raw["duration_ms"], "float", ("duration_ms",), errs)
        if isinstance(ms, float):
            kwargs["duration_ns"] = int(round(ms * 1_000_000))
    if errs:
        raise ConfigValidationError([_format(p, m, lines) for p, m in errs])
    cfg = ScenarioConfig(**kwargs)
    return check(cfg, lines)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    text = path.read_text()
    try:
        raw = yaml.safe_load(text)
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        raise ConfigValidationError([f"{path}: YAML parse error: {exc}"]) from exc
    lines = _line_map(node) if node is not None else {}
    return parse_config(raw if raw is not None else {}, lines)


def to_dict(cfg: ScenarioConfig) -> dict:
    """Plain-data form of a config, loadable again by ``parse_config``."""
    from dataclasses import asdict

    d = asdict(cfg)
    for src in d["sources"]:
        if src["active_windows"] is not None:
            src["active_windows"] = [list(w) for w in src["active_windows"]]
        src["bursts"] = [list(b) for b in src["bursts"]]
    return d
