"""Deterministic discrete-event network simulator hosting FRER functions.

Simulated time is an integer count of picoseconds: a 1006-octet frame at
2.5 Gbit/s serializes in 3219.2 ns, which nanoseconds cannot hold exactly.
Scenario files use nanoseconds and are converted on build. The FRER state
machines are fed whole nanoseconds.

Forwarding model, per frame arriving on a bridge port:

1. frames of a configured stream hit the elimination shared by that
   ingress port (if any); dropped replicas stop here;
2. a replication entry on the ingress port fans the frame out, otherwise
   the elimination's egress ports are used;
3. anything else follows the static ``(node, vid) -> egress`` table,
   never back out of the ingress port.

Hosts answer requests with a reply of the same size on the flow's reply
VLAN and record replies to their own requests.
"""

from __future__ import annotations

import heapq
import logging
import random
import struct
from collections import Counter
from dataclasses import dataclass, field

from .codec import Frame, build_frame, parse_frame, CodecError
from .config import ConfigError, LinkConfig, ScenarioConfig, TrafficSpec
from .core import (
    Drop,
    ReplicationEntry,
    SequenceGenerator,
    SequenceRecovery,
    StreamHandle,
    eliminate,
    identify_stream,
    replicate,
)

log = logging.getLogger(__name__)

PS = 1
NS = 1000 * PS
US = 1000 * NS
MS = 1000 * US
S = 1000 * MS

ETHERTYPE_PING = 0x88B5  # IEEE local experimental
PING_REQUEST = 8
PING_REPLY = 0
_PING = struct.Struct("!BHI")

ARRIVAL = "frame-arrival"
LINK_STATE = "link-state-change"
TIMER = "timer"
GENERATOR = "generator-fire"
SEND = "send"


def serialization_ps(length: int, rate_bps: int) -> int:
    """Time to clock ``length`` octets onto a link, rounded up to a picosecond."""
    return -(-8 * length * S // rate_bps)


@dataclass(order=True)
class Event:
    time: int
    seq: int
    kind: str = field(compare=False)
    payload: object = field(compare=False, default=None)


@dataclass
class Link:
    config: LinkConfig
    up: bool = True

    @property
    def id(self) -> str:
        return self.config.id

    def peer(self, port: str) -> str:
        a, b = self.config.endpoints
        return b if port == a else a


@dataclass
class Node:
    name: str
    kind: str
    ports: tuple[str, ...]
    mac: bytes


@dataclass
class Elimination:
    node: str
    ports: tuple[str, ...]
    egress: tuple[str, ...]
    recovery: SequenceRecovery
    strip_rtag: bool
    timer_armed: bool = False

    def snapshot(self) -> dict:
        return {
            "node": self.node,
            "vid": self.recovery.stream.vid,
            "ports": list(self.ports),
            **self.recovery.counters.as_dict(),
        }


@dataclass
class MeasurementRecord:
    request_seq: int
    send_time: int
    reply_time: int | None = None

    @property
    def rtt(self) -> int | None:
        return None if self.reply_time is None else self.reply_time - self.send_time


@dataclass
class TrafficSink:
    """Per-flow generator state and the measurements it collects."""

    spec: TrafficSpec
    flow_id: int
    records: list[MeasurementRecord] = field(default_factory=list)
    duplicate_replies: int = 0
    outstanding: int | None = None

    @property
    def sent(self) -> int:
        return len(self.records)

    @property
    def received(self) -> int:
        return sum(r.reply_time is not None for r in self.records)

    @property
    def lost(self) -> int:
        return self.sent - self.received


def _port_node(port: str) -> str:
    return port.split(".", 1)[0]


class Simulation:
    """One event loop over one topology; not thread-safe by design."""

    def __init__(self, config: ScenarioConfig, trace: bool = False):
        self.config = config
        self.now = 0
        self.mtu = config.run.mtu
        self._queue: list[tuple[int, int, str, object]] = []
        self._counter = 0
        self._rng = random.Random(config.run.seed)
        self._jitter_ps = config.run.jitter_ns * NS
        self._proc_ps = config.run.processing_delay_ns * NS
        self.trace: list[Event] | None = [] if trace else None
        self.drops: Counter[str] = Counter()

        self.nodes: dict[str, Node] = {}
        self.links: dict[str, Link] = {}
        self._port_link: dict[str, Link] = {}
        self.streams: frozenset[int] = frozenset()
        self.replication: dict[tuple[str, int], ReplicationEntry] = {}
        self.elimination: dict[tuple[str, int], Elimination] = {}
        self.eliminations: list[Elimination] = []
        self.forwarding: dict[tuple[str, int], tuple[str, ...]] = {}
        self.sinks: dict[str, TrafficSink] = {}
        self._flows: list[TrafficSink] = []
        self._build()

    # -- construction ---------------------------------------------------

    def _build(self) -> None:
        cfg = self.config
        ports: set[str] = set()
        for i, n in enumerate(cfg.topology.nodes):
            if n.name in self.nodes:
                raise ConfigError(f"node {n.name!r}: duplicate name")
            if "." in n.name:
                raise ConfigError(f"node {n.name!r}: names may not contain '.'")
            if n.kind not in ("host", "bridge"):
                raise ConfigError(f"node {n.name!r}: unknown kind {n.kind!r}")
            if n.kind == "host" and len(n.ports) != 1:
                raise ConfigError(f"node {n.name!r}: hosts have exactly one port")
            qualified = tuple(f"{n.name}.{p}" for p in n.ports)
            if len(set(qualified)) != len(qualified):
                raise ConfigError(f"node {n.name!r}: duplicate port names")
            ports.update(qualified)
            self.nodes[n.name] = Node(n.name, n.kind, qualified, b"\x02\x00" + (i + 1).to_bytes(4, "big"))

        for lc in cfg.topology.links:
            if lc.id in self.links:
                raise ConfigError(f"link {lc.id!r}: duplicate id")
            if len(lc.endpoints) != 2 or lc.endpoints[0] == lc.endpoints[1]:
                raise ConfigError(f"link {lc.id!r}: needs two distinct endpoints")
            for p in lc.endpoints:
                if p not in ports:
                    raise ConfigError(f"link {lc.id!r}: endpoint {p!r} is not a node port")
                if p in self._port_link:
                    raise ConfigError(f"link {lc.id!r}: port {p!r} already used by link {self._port_link[p].id!r}")
            if lc.rate_bps <= 0:
                raise ConfigError(f"link {lc.id!r}: rate_bps must be positive")
            if lc.delay_ns < 0:
                raise ConfigError(f"link {lc.id!r}: delay_ns must be non-negative")
            times = [e.at_ns for e in lc.schedule]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ConfigError(f"link {lc.id!r}: schedule times must be strictly increasing")
            for e in lc.schedule:
                if e.state not in ("up", "down") or e.at_ns < 0:
                    raise ConfigError(f"link {lc.id!r}: bad schedule entry {e}")
            link = Link(lc)
            self.links[lc.id] = link
            for p in lc.endpoints:
                self._port_link[p] = link

        frer = cfg.frer
        self.streams = frozenset(s.vid for s in frer.streams)
        for s in frer.streams:
            if not 1 <= s.vid <= 4094:
                raise ConfigError(f"frer.streams: VID {s.vid} out of range")
        if len(self.streams) != len(frer.streams):
            raise ConfigError("frer.streams: duplicate VID")
        if frer.reset_check not in ("exact", "sweep"):
            raise ConfigError(f"frer.reset_check: unknown mode {frer.reset_check!r}")

        for rc in frer.replication:
            self._check_stream(rc.vid, f"replication at {rc.port}")
            self._check_ports([rc.port, *rc.egress], f"replication at {rc.port}", same_node=True)
            key = (rc.port, rc.vid)
            if key in self.replication:
                raise ConfigError(f"replication at {rc.port}: duplicate for vid {rc.vid}")
            stream = StreamHandle(rc.vid)
            try:
                self.replication[key] = ReplicationEntry(
                    stream, rc.egress, SequenceGenerator(stream), rc.skip_if_tagged
                )
            except ValueError as e:
                raise ConfigError(f"replication at {rc.port}: {e}") from None

        for ec in frer.elimination:
            where = f"elimination {'/'.join(ec.ports)}"
            self._check_stream(ec.vid, where)
            if not ec.ports or not ec.egress:
                raise ConfigError(f"{where}: needs ingress and egress ports")
            self._check_ports([*ec.ports, *ec.egress], where, same_node=True)
            try:
                recovery = SequenceRecovery(
                    StreamHandle(ec.vid),
                    history_length=ec.history_length or frer.history_length,
                    reset_timeout=ec.reset_timeout_ns or frer.reset_timeout_ns,
                )
            except ValueError as e:
                raise ConfigError(f"{where}: {e}") from None
            strip = frer.strip_rtag if ec.strip_rtag is None else ec.strip_rtag
            elim = Elimination(_port_node(ec.ports[0]), ec.ports, ec.egress, recovery, strip)
            for p in ec.ports:
                if (p, ec.vid) in self.elimination:
                    raise ConfigError(f"{where}: port {p} already eliminates vid {ec.vid}")
                self.elimination[(p, ec.vid)] = elim
            self.eliminations.append(elim)

        for fe in cfg.topology.forwarding:
            if fe.node not in self.nodes:
                raise ConfigError(f"forwarding: unknown node {fe.node!r}")
            self._check_ports(fe.egress, f"forwarding {fe.node}/{fe.vid}")
            if any(_port_node(p) != fe.node for p in fe.egress):
                raise ConfigError(f"forwarding {fe.node}/{fe.vid}: egress port on another node")
            if (fe.node, fe.vid) in self.forwarding:
                raise ConfigError(f"forwarding {fe.node}/{fe.vid}: duplicate entry")
            self.forwarding[(fe.node, fe.vid)] = fe.egress

        for lc in cfg.topology.links:
            for e in lc.schedule:
                if e.at_ns == 0:
                    self.links[lc.id].up = e.state == "up"
                else:
                    self.set_link_state(lc.id, e.state, e.at_ns * NS)

        if frer.reset_check == "sweep" and self.eliminations:
            self._schedule(frer.sweep_interval_ns * NS, TIMER, None)

        names = set()
        for spec in cfg.traffic:
            if spec.name in names:
                raise ConfigError(f"traffic {spec.name!r}: duplicate name")
            names.add(spec.name)
            self.attach_traffic(spec)

    def _check_stream(self, vid: int, where: str) -> None:
        if vid not in self.streams:
            raise ConfigError(f"{where}: vid {vid} is not a configured stream")

    def _check_ports(self, ports, where: str, same_node: bool = False) -> None:
        for p in ports:
            node = self.nodes.get(_port_node(p))
            if node is None or p not in node.ports:
                raise ConfigError(f"{where}: unknown port {p!r}")
        if same_node and len({_port_node(p) for p in ports}) > 1:
            raise ConfigError(f"{where}: ports span several nodes")

    # -- event queue ----------------------------------------------------

    def _schedule(self, at: int, kind: str, payload: object) -> None:
        if at < self.now:
            raise ValueError(f"cannot schedule {kind} in the past ({at} < {self.now})")
        self._counter += 1
        heapq.heappush(self._queue, (at, self._counter, kind, payload))

    def run_until(self, t_end: int) -> None:
        """Process every event with time <= ``t_end`` (picoseconds)."""
        if t_end < self.now:
            raise ValueError(f"t_end {t_end} is before current time {self.now}")
        q = self._queue
        trace = self.trace
        while q and q[0][0] <= t_end:
            at, seq, kind, payload = heapq.heappop(q)
            self.now = at
            if trace is not None:
                trace.append(Event(at, seq, kind, _describe(kind, payload)))
            if kind == ARRIVAL:
                self._on_arrival(*payload)
            elif kind == SEND:
                self._transmit_port(*payload)
            elif kind == GENERATOR:
                self._on_generator(*payload)
            elif kind == TIMER:
                self._on_timer(payload)
            elif kind == LINK_STATE:
                link_id, up = payload
                self.links[link_id].up = up
        self.now = t_end

    def run(self) -> None:
        self.run_until(self.config.run.t_end_ns * NS)

    # -- links ------------------------------------------------------------

    def set_link_state(self, link: str, state: str, at: int) -> None:
        """Queue a link going ``"up"`` or ``"down"`` at ``at`` picoseconds."""
        if link not in self.links:
            raise KeyError(f"unknown link {link!r}")
        if state not in ("up", "down"):
            raise ValueError(f"link state must be 'up' or 'down', got {state!r}")
        self._schedule(at, LINK_STATE, (link, state == "up"))

    def transmit(self, link: str, frame: Frame, at: int, from_port: str | None = None) -> int | None:
        """Put ``frame`` on ``link`` at time ``at``; return the arrival time, or None if dropped.

        The link state is sampled once, when transmission starts. A frame that
        made it onto the wire is delivered even if the link fails later.
        """
        lk = self.links[link]
        port = from_port or lk.config.endpoints[0]
        if not lk.up:
            self.drops["link_down"] += 1
            return None
        delay = serialization_ps(len(frame.octets), lk.config.rate_bps) + lk.config.delay_ns * NS
        if self._jitter_ps:
            delay += self._rng.randint(0, self._jitter_ps // NS) * NS
        arrival = at + delay
        self._schedule(arrival, ARRIVAL, (lk.peer(port), frame))
        return arrival

    def _send(self, port: str, frame: Frame, delay: int = 0) -> None:
        if delay:
            self._schedule(self.now + delay, SEND, (port, frame))
        else:
            self._transmit_port(port, frame)

    def _transmit_port(self, port: str, frame: Frame) -> None:
        lk = self._port_link.get(port)
        if lk is None:
            self.drops["unconnected_port"] += 1
            return
        self.transmit(lk.id, frame, self.now, port)

    # -- nodes ------------------------------------------------------------

    def _on_arrival(self, port: str, frame: Frame) -> None:
        node = self.nodes[_port_node(port)]
        try:
            hdr = parse_frame(frame.octets)
        except CodecError:
            self.drops["malformed"] += 1
            return
        if node.kind == "host":
            self._host_receive(node, hdr, frame)
        else:
            self._bridge_receive(node, port, hdr, frame)

    def _bridge_receive(self, node: Node, port: str, hdr, frame: Frame) -> None:
        stream = identify_stream(hdr, self.streams)
        vid = hdr.vlan.vid if hdr.vlan is not None else None
        if stream is not None:
            frame = Frame(frame.octets, port, self.now, self.mtu)
            elim = self.elimination.get((port, vid))
            if elim is not None:
                now_ns = self.now // NS
                rec = elim.recovery
                if self.config.frer.reset_check == "exact":
                    rec.check_reset(now_ns)
                result = eliminate(frame, rec, now_ns, elim.strip_rtag)
                if isinstance(result, Drop):
                    return
                frame = result.frame
                if self.config.frer.reset_check == "exact" and not elim.timer_armed:
                    elim.timer_armed = True
                    self._schedule((rec.last_packet_time + rec.reset_timeout) * NS, TIMER, elim)
            entry = self.replication.get((port, vid))
            if entry is not None:
                try:
                    copies = replicate(frame, entry)
                except CodecError as e:
                    log.debug("replication at %s failed: %s", port, e)
                    self.drops["replication_error"] += 1
                    return
                for out_port, copy in copies:
                    self._send(out_port, copy, self._proc_ps)
                return
            if elim is not None:
                for out_port in elim.egress:
                    self._send(out_port, frame, self._proc_ps)
                return
        egress = self.forwarding.get((node.name, vid))
        if egress is None:
            self.drops["no_route"] += 1
            return
        for out_port in egress:
            if out_port != port:
                self._send(out_port, frame, self._proc_ps)

    def _on_timer(self, elim: Elimination | None) -> None:
        if elim is None:
            # periodic sweep over every recovery instance
            now_ns = self.now // NS
            for e in self.eliminations:
                e.recovery.check_reset(now_ns)
            self._schedule(self.now + self.config.frer.sweep_interval_ns * NS, TIMER, None)
            return
        rec = elim.recovery
        due = rec.last_packet_time + rec.reset_timeout
        if self.now // NS >= due:
            rec.check_reset(self.now // NS)
            elim.timer_armed = False
        else:
            self._schedule(due * NS, TIMER, elim)

    # -- traffic ----------------------------------------------------------

    def attach_traffic(self, spec: TrafficSpec) -> TrafficSink:
        """Register a request/reply flow; the first request fires at ``spec.start_ns``."""
        where = f"traffic {spec.name!r}"
        for host in (spec.source, spec.destination):
            n = self.nodes.get(host)
            if n is None or n.kind != "host":
                raise ConfigError(f"{where}: {host!r} is not a host")
        if spec.mode not in ("periodic", "adaptive"):
            raise ConfigError(f"{where}: unknown mode {spec.mode!r}")
        if spec.count < 1:
            raise ConfigError(f"{where}: count must be >= 1")
        if not 64 <= spec.size <= self.mtu:
            raise ConfigError(f"{where}: size must be in [64, {self.mtu}]")
        if spec.mode == "periodic" and spec.interval_ns <= 0:
            raise ConfigError(f"{where}: interval_ns must be positive")
        for vid in (spec.vid, spec.reply_vid):
            if not 1 <= vid <= 4094:
                raise ConfigError(f"{where}: VID {vid} out of range")
        if spec.name in self.sinks:
            raise ConfigError(f"{where}: duplicate name")
        sink = TrafficSink(spec, flow_id=len(self._flows))
        self.sinks[spec.name] = sink
        self._flows.append(sink)
        self._schedule(max(spec.start_ns * NS, self.now), GENERATOR, (sink, "fire", 0))
        return sink

    def _on_generator(self, sink: TrafficSink, action: str, index: int) -> None:
        spec = sink.spec
        if action == "timeout":
            if sink.outstanding == index:
                self._fire_next(sink)
            return
        # action == "fire"
        if index != sink.sent or index >= spec.count:
            return
        src = self.nodes[spec.source]
        dst = self.nodes[spec.destination]
        octets = build_frame(
            dst.mac,
            src.mac,
            _PING.pack(PING_REQUEST, sink.flow_id, index),
            vid=spec.vid,
            ethertype=ETHERTYPE_PING,
            size=spec.size,
        )
        sink.records.append(MeasurementRecord(index, self.now))
        sink.outstanding = index
        self._transmit_port(src.ports[0], Frame(octets, mtu=self.mtu))
        if spec.mode == "periodic":
            if index + 1 < spec.count:
                self._schedule(spec.start_ns * NS + (index + 1) * spec.interval_ns * NS, GENERATOR, (sink, "fire", index + 1))
        else:
            self._schedule(self.now + spec.timeout_ns * NS, GENERATOR, (sink, "timeout", index))

    def _fire_next(self, sink: TrafficSink) -> None:
        sink.outstanding = None
        if sink.sent < sink.spec.count:
            self._schedule(self.now, GENERATOR, (sink, "fire", sink.sent))

    def _host_receive(self, node: Node, hdr, frame: Frame) -> None:
        if hdr.inner_ethertype != ETHERTYPE_PING or len(frame.octets) < hdr.payload_offset + _PING.size:
            self.drops["host_ignored"] += 1
            return
        kind, flow_id, index = _PING.unpack_from(frame.octets, hdr.payload_offset)
        if hdr.dst_mac != node.mac or flow_id >= len(self._flows):
            self.drops["host_ignored"] += 1
            return
        sink = self._flows[flow_id]
        if kind == PING_REQUEST:
            octets = build_frame(
                hdr.src_mac,
                node.mac,
                _PING.pack(PING_REPLY, flow_id, index),
                vid=sink.spec.reply_vid,
                ethertype=ETHERTYPE_PING,
                size=sink.spec.size,
            )
            self._transmit_port(node.ports[0], Frame(octets, mtu=self.mtu))
            return
        if index >= sink.sent:
            self.drops["host_ignored"] += 1
            return
        rec = sink.records[index]
        if rec.reply_time is not None:
            sink.duplicate_replies += 1
            return
        rec.reply_time = self.now
        if sink.spec.mode == "adaptive" and sink.outstanding == index:
            self._fire_next(sink)

    # -- reporting ----------------------------------------------------------

    def elimination_counters(self) -> list[dict]:
        return [e.snapshot() for e in self.eliminations]


def _describe(kind: str, payload: object) -> object:
    if kind in (ARRIVAL, SEND):
        port, frame = payload
        return (port, frame.octets.hex())
    if kind == GENERATOR:
        sink, action, index = payload
        return (sink.spec.name, action, index)
    if kind == TIMER:
        return None if payload is None else (payload.node, payload.recovery.stream.vid)
    return payload


def build(config: ScenarioConfig, trace: bool = False) -> Simulation:
    return Simulation(config, trace=trace)
