"""RTT statistics over measurement records.

Percentiles use the nearest-rank definition: the p-th percentile of N sorted
samples is the sample at 1-based rank ceil(p/100 * N), with rank clamped to
at least 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

PERCENTILES = {"p50": "50", "p99": "99", "p99_9": "99.9"}


def nearest_rank(sorted_values: Sequence[int], p: float | str) -> int:
    if not sorted_values:
        raise ValueError("no samples")
    # Fraction(str) keeps 99.9 exact
    q = Fraction(str(p))
    if not 0 <= q <= 100:
        raise ValueError(f"percentile out of range: {p}")
    rank = max(1, math.ceil(q * len(sorted_values) / 100))
    return sorted_values[rank - 1]


def ps_to_ns(ps: int) -> int | float:
    """Picoseconds as nanoseconds: an int when whole, else a float with ps resolution."""
    return ps // 1000 if ps % 1000 == 0 else ps / 1000


@dataclass
class StatsSummary:
    flow: str
    sent: int
    received: int
    lost: int
    duplicate_replies: int = 0
    rtt_ns: dict[str, int | float | None] = field(default_factory=dict)
    cdf: list[tuple[int | float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "flow": self.flow,
            "sent": self.sent,
            "received": self.received,
            "lost": self.lost,
            "duplicate_replies": self.duplicate_replies,
            "rtt_ns": dict(self.rtt_ns),
            "cdf": [list(p) for p in self.cdf],
        }


def summarize(flow: str, records, duplicate_replies: int = 0) -> StatsSummary:
    """Summarize one flow; ``records`` carry picosecond send/reply times."""
    rtts = sorted(r.rtt for r in records if r.rtt is not None)
    sent = len(records)
    received = len(rtts)
    if rtts:
        n = len(rtts)
        rtt = {
            "min": ps_to_ns(rtts[0]),
            "mean": round(sum(rtts) / n / 1000, 3),
            **{k: ps_to_ns(nearest_rank(rtts, p)) for k, p in PERCENTILES.items()},
            "max": ps_to_ns(rtts[-1]),
        }
        cdf = [(ps_to_ns(v), (i + 1) / n) for i, v in enumerate(rtts)]
    else:
        rtt = {k: None for k in ("min", "mean", *PERCENTILES, "max")}
        cdf = []
    return StatsSummary(flow, sent, received, sent - received, duplicate_replies, rtt, cdf)
