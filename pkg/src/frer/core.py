"""Stream identification, sequence generation, replication and elimination.

Elimination uses the vector recovery algorithm: the highest accepted
sequence number plus a bit window of the ``history_length`` positions at
and below it. Bit ``i`` of the window is set when ``recov_seq - i`` (mod
2**16) has already been accepted.

None of the objects here lock. Callers serialise access per state object;
distinct streams can be driven concurrently.
"""

from __future__ import annotations

import enum
from collections.abc import Collection, Iterable
from dataclasses import asdict, dataclass, field

from .codec import AlreadyTagged, Frame, ParsedHeaders, has_rtag, pop_rtag, push_rtag, read_rtag_sequence

SEQ_MODULUS = 1 << 16
_HALF = SEQ_MODULUS >> 1

DEFAULT_HISTORY_LENGTH = 64
DEFAULT_RESET_TIMEOUT_NS = 2_000_000_000
MIN_HISTORY_LENGTH = 2
MAX_HISTORY_LENGTH = 4096


@dataclass(frozen=True, order=True)
class StreamHandle:
    vid: int

    def __post_init__(self) -> None:
        if not 1 <= self.vid <= 4094:
            raise ValueError(f"stream VID must be in [1, 4094], got {self.vid}")


class Decision(enum.Enum):
    PASS = "pass"
    DISCARD_DUPLICATE = "discard_duplicate"
    DISCARD_ROGUE = "discard_rogue"


@dataclass
class Counters:
    passed: int = 0
    discarded_duplicate: int = 0
    discarded_rogue: int = 0
    tagless: int = 0
    resets: int = 0

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


def identify_stream(headers: ParsedHeaders, streams: Collection[int]) -> StreamHandle | None:
    """Map a parsed frame to its stream, or None for background traffic."""
    if headers.vlan is None or headers.vlan.vid not in streams:
        return None
    return StreamHandle(headers.vlan.vid)


@dataclass
class SequenceGenerator:
    stream: StreamHandle
    next_seq: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.next_seq < SEQ_MODULUS:
            raise ValueError(f"next_seq out of range: {self.next_seq}")

    def next_sequence(self) -> int:
        seq = self.next_seq
        self.next_seq = (seq + 1) & 0xFFFF
        return seq


@dataclass
class ReplicationEntry:
    stream: StreamHandle
    egress_ports: tuple[str, ...]
    generator: SequenceGenerator = None  # type: ignore[assignment]
    skip_if_tagged: bool = False

    def __post_init__(self) -> None:
        self.egress_ports = tuple(self.egress_ports)
        if not self.egress_ports:
            raise ValueError("replication needs at least one egress port")
        if len(set(self.egress_ports)) != len(self.egress_ports):
            raise ValueError(f"duplicate egress ports: {self.egress_ports}")
        if self.generator is None:
            self.generator = SequenceGenerator(self.stream)


def replicate(frame: Frame, entry: ReplicationEntry) -> list[tuple[str, Frame]]:
    """Sequence ``frame`` if needed and fan it out to every egress port.

    Every copy shares the same octets; a frame that already carries an
    R-tag is forwarded as-is when the entry allows it.
    """
    if has_rtag(frame):
        if not entry.skip_if_tagged:
            raise AlreadyTagged(
                f"stream {entry.stream.vid}: frame already R-tagged and skip_if_tagged is off"
            )
        out = frame
    else:
        out = push_rtag(frame, entry.generator.next_sequence())
    return [(port, out) for port in entry.egress_ports]


@dataclass
class SequenceRecovery:
    stream: StreamHandle
    history_length: int = DEFAULT_HISTORY_LENGTH
    reset_timeout: int = DEFAULT_RESET_TIMEOUT_NS
    take_any: bool = True
    recov_seq: int = 0
    history: int = 0
    last_packet_time: int = 0
    counters: Counters = field(default_factory=Counters)

    def __post_init__(self) -> None:
        if not MIN_HISTORY_LENGTH <= self.history_length <= MAX_HISTORY_LENGTH:
            raise ValueError(
                f"history_length must be in [{MIN_HISTORY_LENGTH}, {MAX_HISTORY_LENGTH}], "
                f"got {self.history_length}"
            )
        if self.reset_timeout <= 0:
            raise ValueError("reset_timeout must be positive")

    def recover(self, seq: int, now: int) -> Decision:
        self.last_packet_time = now
        c = self.counters
        if self.take_any:
            self.take_any = False
            self.recov_seq = seq
            self.history = 1
            c.passed += 1
            return Decision.PASS

        h = self.history_length
        delta = ((seq - self.recov_seq + _HALF) & 0xFFFF) - _HALF
        if delta >= h or delta <= -h:
            c.discarded_rogue += 1
            return Decision.DISCARD_ROGUE
        if delta <= 0:
            bit = 1 << -delta
            if self.history & bit:
                c.discarded_duplicate += 1
                return Decision.DISCARD_DUPLICATE
            self.history |= bit
            c.passed += 1
            return Decision.PASS
        self.history = ((self.history << delta) & ((1 << h) - 1)) | 1
        self.recov_seq = seq
        c.passed += 1
        return Decision.PASS

    def check_reset(self, now: int) -> bool:
        """Fall back to take-any if nothing arrived for ``reset_timeout``."""
        if self.take_any or now - self.last_packet_time < self.reset_timeout:
            return False
        self.reset()
        return True

    def reset(self) -> None:
        self.take_any = True
        self.history = 0
        self.counters.resets += 1

    def accepted(self) -> list[int]:
        """Sequence numbers currently marked in the history window."""
        if self.take_any:
            return []
        return [
            (self.recov_seq - i) & 0xFFFF
            for i in range(self.history_length)
            if self.history >> i & 1
        ]

    def snapshot(self) -> dict:
        return {
            "vid": self.stream.vid,
            "take_any": self.take_any,
            "recov_seq": self.recov_seq,
            "history": f"{self.history:0{self.history_length}b}",
            "history_length": self.history_length,
            "last_packet_time": self.last_packet_time,
            **self.counters.as_dict(),
        }


@dataclass(frozen=True)
class Pass:
    frame: Frame


@dataclass(frozen=True)
class Drop:
    decision: Decision


def eliminate(frame: Frame, state: SequenceRecovery, now: int, strip_rtag: bool = True) -> Pass | Drop:
    """Run one member-stream frame through elimination.

    Frames without an R-tag are passed through untouched and only counted.
    """
    if not has_rtag(frame):
        state.counters.tagless += 1
        return Pass(frame)
    decision = state.recover(read_rtag_sequence(frame.octets), now)
    if decision is not Decision.PASS:
        return Drop(decision)
    if strip_rtag:
        frame, _ = pop_rtag(frame)
    return Pass(frame)


def counters_snapshot(states: Iterable[SequenceRecovery]) -> dict[int, dict[str, int]]:
    """Flat stream id -> counters record for management export."""
    return {s.stream.vid: s.counters.as_dict() for s in states}
