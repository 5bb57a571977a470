"""IEEE 802.1CB frame replication and elimination, with a discrete-event simulator."""

from .codec import Frame, ParsedHeaders, RTag, VlanTag, has_rtag, parse_frame, pop_rtag, push_rtag
from .core import (
    Counters,
    Decision,
    Drop,
    Pass,
    ReplicationEntry,
    SequenceGenerator,
    SequenceRecovery,
    StreamHandle,
    eliminate,
    identify_stream,
    replicate,
)

__version__ = "0.1.0"

__all__ = [
    "Counters",
    "Decision",
    "Drop",
    "Frame",
    "ParsedHeaders",
    "Pass",
    "RTag",
    "ReplicationEntry",
    "SequenceGenerator",
    "SequenceRecovery",
    "StreamHandle",
    "VlanTag",
    "eliminate",
    "has_rtag",
    "identify_stream",
    "parse_frame",
    "pop_rtag",
    "push_rtag",
    "replicate",
]
