import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frer.core import Decision, SequenceRecovery, StreamHandle
from frer.oracle import (
    OracleState,
    PerturbedStream,
    check_equivalence,
    fresh_pair,
    generate_stream,
    oracle_recover,
    random_stream_specs,
)

PASS, DUP, ROGUE = Decision.PASS, Decision.DISCARD_DUPLICATE, Decision.DISCARD_ROGUE


def test_oracle_fresh_passes():
    assert oracle_recover(OracleState(64), 12345) is PASS


def test_oracle_duplicate():
    o = OracleState(64)
    oracle_recover(o, 10)
    assert oracle_recover(o, 10) is DUP


def test_oracle_rogue():
    o = OracleState(64)
    oracle_recover(o, 10)
    assert oracle_recover(o, 200) is ROGUE
    assert oracle_recover(o, 10 - 64) is ROGUE
    assert oracle_recover(o, 10 - 63) is PASS


def test_oracle_prune_keeps_window():
    o = OracleState(4)
    for a in range(100):
        oracle_recover(o, a)
    assert len(o.accepted) <= 16
    assert oracle_recover(o, 99) is DUP
    assert oracle_recover(o, 96) is DUP


def test_pure_wrap_stream():
    seqs, abss = generate_stream(PerturbedStream(length=5, wrap_offset=65534))
    assert seqs.tolist() == [65534, 65535, 0, 1, 2]
    assert abss.tolist() == [65534, 65535, 65536, 65537, 65538]


def test_full_duplication():
    seqs, _ = generate_stream(PerturbedStream(length=50, duplication=1.0))
    assert seqs.tolist() == [i for i in range(50) for _ in range(2)]


def test_seed_reproducible():
    spec = PerturbedStream(length=2000, seed=7, duplication=0.4, reorder_window=10, loss=0.1, rogue=0.01)
    a, b = generate_stream(spec), generate_stream(spec)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@settings(max_examples=50)
@given(st.integers(1, 60), st.integers(0, 2**31))
def test_reorder_bound(w, seed):
    _, abss = generate_stream(PerturbedStream(length=3000, seed=seed, reorder_window=w, duplication=0.5))
    running_max = np.maximum.accumulate(abss)
    assert (running_max - abss).max() < w


def test_total_loss():
    seqs, _ = generate_stream(PerturbedStream(length=100, loss=1.0))
    assert seqs.size == 0


@pytest.mark.parametrize("field,value", [("loss", 1.5), ("duplication", -0.1), ("reorder_window", -1)])
def test_spec_validation(field, value):
    with pytest.raises(ValueError):
        PerturbedStream(length=1, **{field: value})


def test_equivalence_random_stream():
    impl, oracle = fresh_pair(64)
    spec = PerturbedStream(length=100_000, seed=3, duplication=0.5, reorder_window=40, loss=0.05,
                           wrap_offset=60000, rogue=0.005, rogue_distance=(128, 28000))
    report = check_equivalence(impl, oracle, generate_stream(spec))
    assert report.ok, str(report)
    assert impl.counters.discarded_rogue > 0 and impl.counters.discarded_duplicate > 0


def test_equivalence_adversarial_wrap_boundary():
    # zig-zag straddling 65535/0 with duplicates of every element
    h = 16
    abss = []
    for base in range(65536 - 40, 65536 + 40, 8):
        block = [base + k for k in (7, 3, 5, 0, 6, 1, 4, 2)]
        abss.extend(block + block[::-1])
    abss = np.array(abss, dtype=np.int64)
    impl, oracle = fresh_pair(h)
    report = check_equivalence(impl, oracle, (abss & 0xFFFF, abss))
    assert report.ok, str(report)


class NoShiftRecovery(SequenceRecovery):
    """Mutant: a forward jump shifts the history by one instead of by the jump size."""

    def recover(self, seq, now):
        if not self.take_any:
            delta = ((seq - self.recov_seq + 32768) & 0xFFFF) - 32768
            if 0 < delta < self.history_length:
                mask = (1 << self.history_length) - 1
                self.history = ((self.history << 1) | 1) & mask
                self.recov_seq = seq
                self.counters.passed += 1
                return PASS
        return super().recover(seq, now)


def test_mutation_is_caught():
    # in-order steps agree; after the first jump (2 -> 5) the mutant's bit 1 holds
    # seq 2 where it should mean seq 4, so the first copy of 4 is called a duplicate
    abss = np.array([0, 1, 2, 5, 4], dtype=np.int64)
    impl = NoShiftRecovery(StreamHandle(1), history_length=64)
    report = check_equivalence(impl, OracleState(64), (abss & 0xFFFF, abss))
    assert not report.ok
    d = report.divergence
    assert (d.step, d.seq, d.implementation, d.oracle) == (4, 4, DUP, PASS)
    assert "divergence at step 4" in str(report)
    assert d.oracle_state["window"] == [0, 1, 2, 4, 5]


def test_mutation_agrees_on_in_order_stream():
    abss = np.arange(60000, 70000, dtype=np.int64)
    report = check_equivalence(NoShiftRecovery(StreamHandle(1)), OracleState(64), (abss & 0xFFFF, abss))
    assert report.ok


def test_mutation_caught_on_random_stream():
    spec = PerturbedStream(length=5000, seed=1, duplication=0.5, reorder_window=10)
    report = check_equivalence(NoShiftRecovery(StreamHandle(1)), OracleState(64), generate_stream(spec))
    assert not report.ok


def test_random_specs_respect_window():
    for h, spec in random_stream_specs(200, 10, seed=5):
        assert 2 <= h <= 4096
        assert spec.reorder_window < h
        assert spec.rogue_distance[0] >= h


@settings(max_examples=100, deadline=None)
@given(
    st.integers(2, 512),
    st.integers(0, 2**32 - 1),
    st.floats(0, 1),
    st.floats(0, 0.02),
    st.integers(0, 65535),
    st.data(),
)
def test_equivalence_property(h, seed, dup, loss, offset, data):
    w = data.draw(st.integers(0, h - 1))
    # cap loss so a run of h-1 losses is improbable over 3000 packets
    loss = min(loss, 1e-6 ** (1 / (h - 1)))
    spec = PerturbedStream(length=3000, seed=seed, duplication=dup, reorder_window=w, loss=loss,
                           wrap_offset=offset, rogue=0.01, rogue_distance=(2 * h, 28000))
    impl, oracle = fresh_pair(h)
    report = check_equivalence(impl, oracle, generate_stream(spec))
    assert report.ok, str(report)
