"""Brute-force reference for sequence recovery and randomized stream generation.

The oracle never sees 16-bit sequence numbers. It works on the unwrapped
absolute index each packet was generated with, so wraparound cannot
confuse it, and keeps an explicit set of accepted indices.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .core import Decision, SequenceRecovery, StreamHandle

_PASS = Decision.PASS
_DUP = Decision.DISCARD_DUPLICATE
_ROGUE = Decision.DISCARD_ROGUE


@dataclass
class OracleState:
    history_length: int
    accepted: set[int] = field(default_factory=set)
    max_accepted: int = 0
    fresh: bool = True

    def prune(self) -> None:
        floor = self.max_accepted - self.history_length
        self.accepted = {a for a in self.accepted if a > floor}


def oracle_recover(state: OracleState, abs_seq: int) -> Decision:
    if state.fresh:
        state.fresh = False
        state.accepted = {abs_seq}
        state.max_accepted = abs_seq
        return _PASS
    h = state.history_length
    top = state.max_accepted
    if abs_seq <= top - h or abs_seq >= top + h:
        return _ROGUE
    if abs_seq in state.accepted:
        return _DUP
    state.accepted.add(abs_seq)
    if abs_seq > top:
        state.max_accepted = abs_seq
        if len(state.accepted) > 4 * h:
            state.prune()
    return _PASS


@dataclass(frozen=True)
class PerturbedStream:
    """Recipe for a reproducible, perturbed in-order sequence stream.

    ``reorder_window`` bounds how far (in absolute index) a packet may
    arrive behind one generated after it. With probability ``rogue`` a stray
    packet is injected after an arrival, displaced from it by a distance
    drawn from ``rogue_distance`` in either direction.
    """

    length: int
    seed: int = 0
    duplication: float = 0.0
    reorder_window: int = 0
    loss: float = 0.0
    wrap_offset: int = 0
    rogue: float = 0.0
    rogue_distance: tuple[int, int] = (1, 28000)

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("length must be non-negative")
        for name in ("duplication", "loss", "rogue"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be a probability, got {p}")
        if self.reorder_window < 0:
            raise ValueError("reorder_window must be non-negative")
        lo, hi = self.rogue_distance
        if not 1 <= lo <= hi < 32768:
            raise ValueError(f"rogue_distance must satisfy 1 <= lo <= hi < 32768, got {self.rogue_distance}")


def generate_stream(spec: PerturbedStream) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(seqs, abs_indices)`` in arrival order.

    ``seqs`` are the 16-bit sequence numbers on the wire; ``abs_indices`` the
    unwrapped indices they were generated from.
    """
    rng = np.random.default_rng(spec.seed)
    base = np.arange(spec.length, dtype=np.int64) + spec.wrap_offset
    keep = rng.random(spec.length) >= spec.loss if spec.loss > 0 else np.ones(spec.length, bool)
    base = base[keep]
    if spec.duplication > 0:
        copies = 1 + (rng.random(base.size) < spec.duplication)
        base = np.repeat(base, copies)
    if spec.reorder_window > 0 and base.size:
        # arrival key = index + U[0, w): a packet can only trail a later one by < w
        keys = base + rng.random(base.size) * spec.reorder_window
        base = base[np.argsort(keys, kind="stable")]
    if spec.rogue > 0 and base.size:
        at = np.flatnonzero(rng.random(base.size) < spec.rogue)
        lo, hi = spec.rogue_distance
        offset = rng.integers(lo, hi + 1, at.size) * rng.choice(np.array([-1, 1]), at.size)
        base = np.insert(base, at + 1, base[at] + offset)
    return base & 0xFFFF, base


@dataclass
class Divergence:
    step: int
    seq: int
    abs_seq: int
    implementation: Decision
    oracle: Decision
    implementation_state: dict
    oracle_state: dict


@dataclass
class EquivalenceReport:
    steps: int
    divergence: Divergence | None = None

    @property
    def ok(self) -> bool:
        return self.divergence is None

    def __str__(self) -> str:
        if self.ok:
            return f"{self.steps} decisions, no divergence"
        d = self.divergence
        return (
            f"divergence at step {d.step}: seq={d.seq} abs={d.abs_seq} "
            f"impl={d.implementation.name} oracle={d.oracle.name}\n"
            f"  impl state:   {d.implementation_state}\n"
            f"  oracle state: {d.oracle_state}"
        )


def check_equivalence(
    impl: SequenceRecovery,
    oracle: OracleState,
    stream: tuple[np.ndarray, np.ndarray],
) -> EquivalenceReport:
    """Feed the stream through both recoverers and stop at the first disagreement.

    Only meaningful when the stream's reorder window is below the history
    length; beyond that the 16-bit protocol legitimately loses information.
    """
    seqs, abss = stream
    recover = impl.recover
    seqs_l = seqs.tolist()
    abss_l = abss.tolist()
    for step, (seq, a) in enumerate(zip(seqs_l, abss_l)):
        # pre-state for the dump is rebuilt lazily, only on divergence
        got = recover(seq, step)
        want = oracle_recover(oracle, a)
        if got is not want:
            return EquivalenceReport(
                step + 1,
                Divergence(
                    step=step,
                    seq=seq,
                    abs_seq=a,
                    implementation=got,
                    oracle=want,
                    implementation_state=impl.snapshot(),
                    oracle_state={
                        "fresh": oracle.fresh,
                        "max_accepted": oracle.max_accepted,
                        "window": sorted(
                            x for x in oracle.accepted
                            if x > oracle.max_accepted - oracle.history_length
                        ),
                    },
                ),
            )
    return EquivalenceReport(len(seqs_l))


def fresh_pair(history_length: int, vid: int = 1) -> tuple[SequenceRecovery, OracleState]:
    return SequenceRecovery(StreamHandle(vid), history_length=history_length), OracleState(history_length)


def random_stream_specs(
    count: int, length: int, seed: int = 0, history_lengths: Callable[[np.random.Generator], int] | None = None
) -> list[tuple[int, PerturbedStream]]:
    """Draw ``count`` (history_length, stream recipe) pairs with reorder < H.

    A run of H-1 consecutive losses leaves every later packet out of window
    for good, and 65536-H packets after that the 16-bit view wraps back into
    the window while the absolute view does not. Loss is capped so such a
    run has probability ~1e-8 per position.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        if history_lengths is not None:
            h = history_lengths(rng)
        else:
            # log-uniform over [2, 4096]
            h = int(round(2 ** rng.uniform(1, 12)))
        loss = min(float(rng.uniform(0.0, 0.3)), 1e-8 ** (1.0 / (h - 1)))
        # strays sit at least H + reorder away so they stay out of window
        spec = PerturbedStream(
            length=length,
            seed=int(rng.integers(2**32)),
            duplication=float(rng.uniform(0.0, 1.0)),
            reorder_window=int(rng.integers(0, h)),
            loss=loss,
            wrap_offset=int(rng.integers(0, 1 << 16)),
            rogue=float(rng.uniform(0.0, 0.01)),
            rogue_distance=(2 * h, 28000),
        )
        out.append((h, spec))
    return out
