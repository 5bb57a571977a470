"""Scenario configuration values.

Plain frozen dataclasses mirroring the JSON scenario document one-to-one.
``from_dict`` assumes the document already passed schema validation;
``to_dict`` writes every field, defaults included, so a dump reloads to an
equal value.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Any

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """A scenario that cannot be built; the message names the offending element."""


class ParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column


class ValidationError(ConfigError):
    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field = field_path


@dataclass(frozen=True)
class NodeConfig:
    name: str
    kind: str  # "host" | "bridge"
    ports: tuple[str, ...]

    @classmethod
    def from_dict(cls, d: dict) -> NodeConfig:
        return cls(d["name"], d["kind"], tuple(d["ports"]))


@dataclass(frozen=True)
class ScheduleEntry:
    at_ns: int
    state: str  # "up" | "down"

    @classmethod
    def from_dict(cls, d: dict) -> ScheduleEntry:
        return cls(d["at_ns"], d["state"])


@dataclass(frozen=True)
class LinkConfig:
    id: str
    endpoints: tuple[str, str]
    delay_ns: int
    rate_bps: int
    schedule: tuple[ScheduleEntry, ...] = ()

    @classmethod
    def from_dict(cls, d: dict) -> LinkConfig:
        return cls(
            d["id"],
            tuple(d["endpoints"]),
            d["delay_ns"],
            d["rate_bps"],
            tuple(ScheduleEntry.from_dict(e) for e in d.get("schedule", ())),
        )


@dataclass(frozen=True)
class ForwardingEntry:
    node: str
    vid: int
    egress: tuple[str, ...]

    @classmethod
    def from_dict(cls, d: dict) -> ForwardingEntry:
        return cls(d["node"], d["vid"], tuple(d["egress"]))


@dataclass(frozen=True)
class TopologyConfig:
    nodes: tuple[NodeConfig, ...]
    links: tuple[LinkConfig, ...]
    forwarding: tuple[ForwardingEntry, ...] = ()

    @classmethod
    def from_dict(cls, d: dict) -> TopologyConfig:
        return cls(
            tuple(NodeConfig.from_dict(n) for n in d["nodes"]),
            tuple(LinkConfig.from_dict(link) for link in d["links"]),
            tuple(ForwardingEntry.from_dict(f) for f in d.get("forwarding", ())),
        )


@dataclass(frozen=True)
class StreamConfig:
    vid: int
    name: str = ""

    @classmethod
    def from_dict(cls, d: dict) -> StreamConfig:
        return cls(d["vid"], d.get("name", ""))


@dataclass(frozen=True)
class ReplicationConfig:
    port: str
    vid: int
    egress: tuple[str, ...]
    skip_if_tagged: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> ReplicationConfig:
        return cls(d["port"], d["vid"], tuple(d["egress"]), d.get("skip_if_tagged", False))


@dataclass(frozen=True)
class EliminationConfig:
    """Elimination shared by ``ports``; ``None`` overrides fall back to the frer section."""

    ports: tuple[str, ...]
    vid: int
    egress: tuple[str, ...]
    strip_rtag: bool | None = None
    history_length: int | None = None
    reset_timeout_ns: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> EliminationConfig:
        return cls(
            tuple(d["ports"]),
            d["vid"],
            tuple(d["egress"]),
            d.get("strip_rtag"),
            d.get("history_length"),
            d.get("reset_timeout_ns"),
        )


@dataclass(frozen=True)
class FrerConfig:
    streams: tuple[StreamConfig, ...] = ()
    replication: tuple[ReplicationConfig, ...] = ()
    elimination: tuple[EliminationConfig, ...] = ()
    history_length: int = 64
    reset_timeout_ns: int = 2_000_000_000
    strip_rtag: bool = True
    reset_check: str = "exact"  # "exact" | "sweep"
    sweep_interval_ns: int = 2_000_000_000

    @classmethod
    def from_dict(cls, d: dict) -> FrerConfig:
        return cls(
            tuple(StreamConfig.from_dict(s) for s in d.get("streams", ())),
            tuple(ReplicationConfig.from_dict(r) for r in d.get("replication", ())),
            tuple(EliminationConfig.from_dict(e) for e in d.get("elimination", ())),
            d.get("history_length", 64),
            d.get("reset_timeout_ns", 2_000_000_000),
            d.get("strip_rtag", True),
            d.get("reset_check", "exact"),
            d.get("sweep_interval_ns", 2_000_000_000),
        )


@dataclass(frozen=True)
class TrafficSpec:
    """A ping-like request/reply flow between two hosts.

    ``size`` is the request frame length in octets as the source host emits
    it (VLAN tag included, no R-tag, no FCS). Replies have the same size and
    travel on ``reply_vid``.
    """

    name: str
    source: str
    destination: str
    vid: int
    reply_vid: int
    count: int
    size: int = 1000
    mode: str = "periodic"  # "periodic" | "adaptive"
    interval_ns: int = 1_000_000
    start_ns: int = 0
    timeout_ns: int = 1_000_000_000

    @classmethod
    def from_dict(cls, d: dict) -> TrafficSpec:
        return cls(
            d["name"],
            d["source"],
            d["destination"],
            d["vid"],
            d["reply_vid"],
            d["count"],
            d.get("size", 1000),
            d.get("mode", "periodic"),
            d.get("interval_ns", 1_000_000),
            d.get("start_ns", 0),
            d.get("timeout_ns", 1_000_000_000),
        )


@dataclass(frozen=True)
class RunConfig:
    t_end_ns: int
    seed: int = 0
    jitter_ns: int = 0
    processing_delay_ns: int = 0
    mtu: int = 2048

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        return cls(
            d["t_end_ns"],
            d.get("seed", 0),
            d.get("jitter_ns", 0),
            d.get("processing_delay_ns", 0),
            d.get("mtu", 2048),
        )


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    topology: TopologyConfig
    frer: FrerConfig
    traffic: tuple[TrafficSpec, ...]
    run: RunConfig
    description: str = ""
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioConfig:
        return cls(
            name=d["name"],
            topology=TopologyConfig.from_dict(d["topology"]),
            frer=FrerConfig.from_dict(d.get("frer", {})),
            traffic=tuple(TrafficSpec.from_dict(t) for t in d["traffic"]),
            run=RunConfig.from_dict(d["run"]),
            description=d.get("description", ""),
            schema_version=d["schema_version"],
        )

    def to_dict(self) -> dict[str, Any]:
        d = _lists(asdict(self))
        return {
            "schema_version": d.pop("schema_version"),
            "name": d.pop("name"),
            "description": d.pop("description"),
            **d,
        }

    def with_seed(self, seed: int) -> ScenarioConfig:
        return replace(self, run=replace(self.run, seed=seed))


def _lists(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _lists(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_lists(v) for v in obj]
    return obj
