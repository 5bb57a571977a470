import struct

import pytest
from hypothesis import given, strategies as st

from frer.codec import (
    AlreadyTagged,
    Frame,
    FrameTooLong,
    MalformedVlan,
    NoRtag,
    NoVlan,
    TruncatedFrame,
    build_frame,
    has_rtag,
    parse_frame,
    pop_rtag,
    push_rtag,
)

DST = bytes.fromhex("020000000002")
SRC = bytes.fromhex("020000000001")


def vlan_frame(size=1000, vid=100, pcp=0, payload=b"hello"):
    return Frame(build_frame(DST, SRC, payload, vid=vid, pcp=pcp, size=size))


vlan_frames = st.builds(
    lambda vid, pcp, payload, pad: Frame(
        build_frame(DST, SRC, payload, vid=vid, pcp=pcp) + bytes(pad)
    ),
    st.integers(1, 4094),
    st.integers(0, 7),
    st.binary(max_size=1500),
    st.integers(0, 400),
)


def test_minimal_untagged_frame():
    hdr = parse_frame(DST + SRC + b"\x08\x00")
    assert hdr.vlan is None
    assert hdr.rtag is None
    assert hdr.inner_ethertype == 0x0800
    assert hdr.payload_offset == 14


def test_hand_encoded_vlan_and_rtag():
    octets = (
        DST + SRC
        + bytes([0x81, 0x00, 0x00, 0x64])  # TPID, TCI vid=100
        + bytes([0xF1, 0xC1, 0x00, 0x00, 0x00, 0x07])  # R-tag seq=7
        + bytes([0x08, 0x00])
        + b"payload"
    )
    hdr = parse_frame(octets)
    assert hdr.vlan.vid == 100
    assert hdr.rtag.sequence == 7
    assert hdr.inner_ethertype == 0x0800
    assert hdr.payload_offset == 24


def test_tci_bits():
    octets = DST + SRC + struct.pack("!HH", 0x8100, (5 << 13) | (1 << 12) | 0xABC) + b"\x08\x00"
    v = parse_frame(octets).vlan
    assert (v.pcp, v.dei, v.vid) == (5, 1, 0xABC)


def test_reserved_bits_ignored_on_decode():
    octets = DST + SRC + bytes.fromhex("81000064" "f1c1beef0009" "0800")
    assert parse_frame(octets).rtag.sequence == 9


def test_truncated():
    with pytest.raises(TruncatedFrame):
        parse_frame(bytes(10))


def test_truncated_inside_rtag():
    with pytest.raises(TruncatedFrame):
        parse_frame(DST + SRC + bytes.fromhex("81000064f1c10000"))


def test_malformed_vlan():
    with pytest.raises(MalformedVlan):
        parse_frame(DST + SRC + b"\x81\x00\x00")


def test_push_rtag_layout():
    f = vlan_frame(1000)
    g = push_rtag(f, 5)
    assert len(g) == 1006
    assert g.octets[16:18] == b"\xf1\xc1"
    assert g.octets[:16] == f.octets[:16]
    assert g.octets[16:22] == bytes.fromhex("f1c100000005")
    assert g.octets[22:] == f.octets[16:]


def test_push_pop_round_trip():
    f = vlan_frame(1000)
    assert pop_rtag(push_rtag(f, 5)) == (f, 5)


def test_push_keeps_metadata():
    f = Frame(vlan_frame().octets, ingress_port="A.eth0", arrival_time=42)
    g = push_rtag(f, 1)
    assert (g.ingress_port, g.arrival_time) == ("A.eth0", 42)


def test_push_already_tagged():
    with pytest.raises(AlreadyTagged):
        push_rtag(push_rtag(vlan_frame(), 1), 2)


def test_push_untagged():
    with pytest.raises(NoVlan):
        push_rtag(Frame(build_frame(DST, SRC, size=64)), 1)


def test_push_sequence_range():
    with pytest.raises(ValueError):
        push_rtag(vlan_frame(), 65536)


def test_pop_max_sequence():
    assert pop_rtag(push_rtag(vlan_frame(), 65535))[1] == 65535


def test_pop_untagged():
    with pytest.raises(NoRtag):
        pop_rtag(Frame(build_frame(DST, SRC, size=64)))
    with pytest.raises(NoRtag):
        pop_rtag(vlan_frame())


def test_has_rtag():
    assert has_rtag(push_rtag(vlan_frame(), 3))
    assert not has_rtag(vlan_frame())
    assert not has_rtag(Frame(build_frame(DST, SRC, size=64)))
    assert not has_rtag(Frame(b"\x00" * 5))


def test_untagged_f1c1_ethertype_is_not_an_rtag():
    hdr = parse_frame(DST + SRC + b"\xf1\xc1" + bytes(10))
    assert hdr.rtag is None and hdr.inner_ethertype == 0xF1C1


def test_mtu_cap():
    with pytest.raises(FrameTooLong):
        push_rtag(vlan_frame(2046), 0)
    assert len(push_rtag(Frame(vlan_frame(2046).octets, mtu=4096), 0)) == 2052


def test_frames_are_immutable():
    f = vlan_frame()
    with pytest.raises(AttributeError):
        f.octets = b""


@given(vlan_frames, st.integers(0, 65535))
def test_round_trip_property(f, seq):
    g = push_rtag(f, seq)
    assert len(g) - len(f) == 6
    assert parse_frame(g.octets).rtag.sequence == seq
    back, s = pop_rtag(g)
    assert back == f and s == seq
    assert len(g) - len(back) == 6


@given(vlan_frames, st.integers(0, 65535))
def test_payload_untouched(f, seq):
    before = parse_frame(f.octets)
    g = push_rtag(f, seq)
    after = parse_frame(g.octets)
    assert g.octets[after.payload_offset:] == f.octets[before.payload_offset:]
    assert after.payload_offset == before.payload_offset + 6
