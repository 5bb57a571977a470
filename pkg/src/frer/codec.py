"""Ethernet / 802.1Q / R-tag header codec.

Frames are handled as immutable octet strings. The only rewrites are the
insertion and removal of the 6-octet redundancy tag directly after the
VLAN tag::

    0      6      12     14     16     18     20     22
    +------+------+------+------+------+------+------+----
    | dst  | src  |8100  | TCI  |F1C1  | rsvd | seq  | inner ethertype, payload
    +------+------+------+------+------+------+------+----

All multi-octet fields are in network byte order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

ETH_HEADER_LEN = 14
VLAN_TAG_LEN = 4
RTAG_LEN = 6

TPID_8021Q = 0x8100
ETHERTYPE_RTAG = 0xF1C1
ETHERTYPE_IPV4 = 0x0800

DEFAULT_MTU = 2048

_RTAG = struct.Struct("!HHH")
_TCI = struct.Struct("!HH")

# dst(6) src(6) TPID(2) TCI(2)
_RTAG_OFFSET = ETH_HEADER_LEN - 2 + VLAN_TAG_LEN


class CodecError(ValueError):
    """Base class for header codec failures."""


class TruncatedFrame(CodecError):
    pass


class MalformedVlan(CodecError):
    pass


class AlreadyTagged(CodecError):
    pass


class NoVlan(CodecError):
    pass


class NoRtag(CodecError):
    pass


class FrameTooLong(CodecError):
    pass


@dataclass(frozen=True)
class Frame:
    """Raw frame octets plus where and when the frame entered a node."""

    octets: bytes
    ingress_port: str | None = None
    arrival_time: int | None = None
    mtu: int = DEFAULT_MTU

    def __post_init__(self) -> None:
        if not isinstance(self.octets, bytes):
            object.__setattr__(self, "octets", bytes(self.octets))
        if len(self.octets) > self.mtu:
            raise FrameTooLong(f"frame of {len(self.octets)} octets exceeds MTU {self.mtu}")

    def __len__(self) -> int:
        return len(self.octets)

    def with_octets(self, octets: bytes) -> Frame:
        return replace(self, octets=octets)


@dataclass(frozen=True)
class VlanTag:
    pcp: int
    dei: int
    vid: int
    tpid: int = TPID_8021Q

    def __post_init__(self) -> None:
        if not 0 <= self.pcp <= 7:
            raise ValueError(f"pcp out of range: {self.pcp}")
        if self.dei not in (0, 1):
            raise ValueError(f"dei out of range: {self.dei}")
        if not 0 <= self.vid <= 0xFFF:
            raise ValueError(f"vid out of range: {self.vid}")

    @property
    def tci(self) -> int:
        return self.pcp << 13 | self.dei << 12 | self.vid

    @classmethod
    def from_tci(cls, tci: int) -> VlanTag:
        return cls(pcp=tci >> 13, dei=(tci >> 12) & 1, vid=tci & 0xFFF)


@dataclass(frozen=True)
class RTag:
    sequence: int
    ethertype: int = ETHERTYPE_RTAG
    reserved: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.sequence <= 0xFFFF:
            raise ValueError(f"sequence out of range: {self.sequence}")

    def encode(self) -> bytes:
        # reserved is always written as zero
        return _RTAG.pack(ETHERTYPE_RTAG, 0, self.sequence)


@dataclass(frozen=True)
class ParsedHeaders:
    dst_mac: bytes
    src_mac: bytes
    vlan: VlanTag | None
    rtag: RTag | None
    inner_ethertype: int
    payload_offset: int


def parse_frame(octets: bytes) -> ParsedHeaders:
    """Decode the L2 headers of ``octets``.

    Only a single 802.1Q tag is recognised, and an R-tag is only decoded when
    it directly follows that tag. Anything past ``payload_offset`` is left
    alone.
    """
    n = len(octets)
    if n < ETH_HEADER_LEN:
        raise TruncatedFrame(f"{n} octets is shorter than an Ethernet header")
    dst, src = bytes(octets[0:6]), bytes(octets[6:12])
    (ethertype,) = struct.unpack_from("!H", octets, 12)
    if ethertype != TPID_8021Q:
        return ParsedHeaders(dst, src, None, None, ethertype, ETH_HEADER_LEN)

    if n < ETH_HEADER_LEN + VLAN_TAG_LEN:
        raise MalformedVlan(f"802.1Q TPID present but only {n - 12} tag octets follow")
    tci, inner = _TCI.unpack_from(octets, 14)
    vlan = VlanTag.from_tci(tci)
    if inner != ETHERTYPE_RTAG:
        return ParsedHeaders(dst, src, vlan, None, inner, ETH_HEADER_LEN + VLAN_TAG_LEN)

    if n < _RTAG_OFFSET + RTAG_LEN + 2:
        raise TruncatedFrame(f"frame ends inside the R-tag ({n} octets)")
    _, _reserved, seq = _RTAG.unpack_from(octets, _RTAG_OFFSET)
    (inner,) = struct.unpack_from("!H", octets, _RTAG_OFFSET + RTAG_LEN)
    return ParsedHeaders(
        dst, src, vlan, RTag(seq), inner, ETH_HEADER_LEN + VLAN_TAG_LEN + RTAG_LEN
    )


def has_rtag(frame: Frame | bytes) -> bool:
    octets = frame.octets if isinstance(frame, Frame) else frame
    return (
        len(octets) >= _RTAG_OFFSET + 2
        and octets[12:14] == b"\x81\x00"
        and octets[16:18] == b"\xf1\xc1"
    )


def push_rtag(frame: Frame, seq: int) -> Frame:
    """Return a copy of ``frame`` with an R-tag carrying ``seq`` after the VLAN tag."""
    if not 0 <= seq <= 0xFFFF:
        raise ValueError(f"sequence out of range: {seq}")
    hdr = parse_frame(frame.octets)
    if hdr.vlan is None:
        raise NoVlan("R-tag can only be pushed onto a VLAN-tagged frame")
    if hdr.rtag is not None:
        raise AlreadyTagged(f"frame already carries R-tag seq={hdr.rtag.sequence}")
    o = frame.octets
    return frame.with_octets(o[:_RTAG_OFFSET] + _RTAG.pack(ETHERTYPE_RTAG, 0, seq) + o[_RTAG_OFFSET:])


def pop_rtag(frame: Frame) -> tuple[Frame, int]:
    """Strip the R-tag, returning the untagged frame and the sequence it carried."""
    o = frame.octets
    if not has_rtag(o):
        raise NoRtag("frame carries no R-tag")
    if len(o) < _RTAG_OFFSET + RTAG_LEN + 2:
        raise TruncatedFrame(f"frame ends inside the R-tag ({len(o)} octets)")
    _, _, seq = _RTAG.unpack_from(o, _RTAG_OFFSET)
    return frame.with_octets(o[:_RTAG_OFFSET] + o[_RTAG_OFFSET + RTAG_LEN:]), seq


def read_rtag_sequence(octets: bytes) -> int:
    if not has_rtag(octets):
        raise NoRtag("frame carries no R-tag")
    if len(octets) < _RTAG_OFFSET + RTAG_LEN:
        raise TruncatedFrame(f"frame ends inside the R-tag ({len(octets)} octets)")
    return _RTAG.unpack_from(octets, _RTAG_OFFSET)[2]


def build_frame(
    dst: bytes,
    src: bytes,
    payload: bytes = b"",
    *,
    vid: int | None = None,
    pcp: int = 0,
    ethertype: int = ETHERTYPE_IPV4,
    size: int | None = None,
) -> bytes:
    """Assemble frame octets, zero-padding the payload up to ``size`` total octets."""
    if len(dst) != 6 or len(src) != 6:
        raise ValueError("MAC addresses must be 6 octets")
    head = dst + src
    if vid is not None:
        head += _TCI.pack(TPID_8021Q, VlanTag(pcp, 0, vid).tci)
    head += struct.pack("!H", ethertype)
    octets = head + payload
    if size is not None:
        if size < len(octets):
            raise ValueError(f"size {size} too small for {len(octets)} octets of headers+payload")
        octets += bytes(size - len(octets))
    return octets


def mac_str(mac: bytes) -> str:
    return ":".join(f"{b:02x}" for b in mac)
