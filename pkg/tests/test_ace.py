from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qvul.ace import REASONS, analyze
from qvul.entanglement import EntangledGroup, EntanglementIntervals
from qvul.oracle import inject_at, simulate_noiseless, tv_distance
from qvul.topology import grid

from conftest import FIXTURES, make, random_compiled


def marks(name):
    body, n, m = FIXTURES[name]
    sched, table, ace_map = analyze(make(body, n, m))
    return sched, ace_map


def row(ace_map, q):
    return [ace_map.reason_of(q, t) or "ACE" for t in range(ace_map.shape[0])]


def test_first_level_non_spread():
    _, a = marks("first_level")
    assert row(a, 0) == ["ACE"] * 4
    # q1 stays ACE through its cx and turns un-ACE from cycle 2
    assert row(a, 1) == ["ACE", "ACE", "FirstLevelNonSpread", "FirstLevelNonSpread"]


def test_second_level_and_post_measure():
    _, a = marks("second_level")
    assert row(a, 0) == ["ACE", "ACE", "PostMeasure"]
    assert row(a, 1) == ["SecondLevelNonSpread", "SecondLevelNonSpread", "FirstLevelNonSpread"]
    assert row(a, 2) == ["SecondLevelNonSpread", "SecondLevelNonSpread", "Trashed"]


def test_trashed_row():
    _, a = marks("trashed")
    assert row(a, 1)[-1] == "Trashed"
    assert row(a, 2) == ["SecondLevelNonSpread", "FirstLevelNonSpread", "FirstLevelNonSpread"]


@pytest.mark.parametrize("name", ["bell", "ghz"])
def test_measured_entangled_groups_stay_ace(name):
    sched, a = marks(name)
    for q in range(sched.num_qubits):
        last = max(sched.cycles[i] for i, op in enumerate(sched.ops) if op.kind == "measure" and op.qubits[0] == q)
        assert a.ace[: last + 1, q].all()


def test_kickback_target_stays_ace_before_cx():
    sched, a = marks("kickback")
    # cx at cycle 2: the target row stays ACE up to and including it
    assert a.ace[:3, 1].all()
    assert not a.ace[3:, 1].any()
    # a phase flip on the target before the cx really does reach the output
    ref = simulate_noiseless(sched)
    assert tv_distance(ref, inject_at(sched, 1, 1, "Z")) > 0.5


def test_unused_ancilla_row():
    _, a = marks("unused_ancilla")
    assert set(row(a, 1)) == {"UnusedAncilla"}


def test_entangled_pin_keeps_group_live():
    tail = "x q[1]; x q[1]; x q[0]; x q[0]; x q[0]; measure q[0]->c[0];"
    # no Bell pattern here, so q1 dies after the cx unless an annotation pins it
    c = make("x q[0]; cx q[0],q[1]; " + tail, 2, 1)
    _, _, plain = analyze(c)
    assert not plain.ace[2:, 1].any()
    pinned = EntanglementIntervals((EntangledGroup((0, 1), 0, 4),), "annotation")
    _, table, a = analyze(c, pinned)
    assert a.ace[:5, 1].all()
    # the detected Bell pair does the same without an annotation
    _, _, bell = analyze(make("h q[0]; cx q[0],q[1]; " + tail, 2, 1))
    assert bell.ace[:5, 1].all()
    assert table.cell(1, 2).entangled_with == "q0"


def test_counts_and_sweeps():
    _, a = marks("second_level")
    counts = a.counts()
    assert sum(counts.values()) == a.ace.size
    assert set(counts) == {"ACE", *REASONS[1:]}
    assert 1 <= a.sweeps <= 3


def test_fixture_soundness(fixture_circuit):
    sched, _, a = analyze(fixture_circuit)
    ref = simulate_noiseless(sched)
    for q, t in a.unace_cells():
        for p in "XYZ":
            assert tv_distance(ref, inject_at(sched, q, t, p)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_random_circuit_soundness(seed):
    rng = np.random.default_rng(seed)
    c = random_compiled(rng, grid(2, 3), int(rng.integers(1, 30)), 0.4)
    sched, table, a = analyze(c)
    assert (table.ace == a.ace).all()
    # only demotions: every measurement cell stays ACE
    for i, op in enumerate(sched.ops):
        if op.kind == "measure":
            assert a.ace[sched.cycles[i], op.qubits[0]]
    ref = simulate_noiseless(sched)
    for q, t in a.unace_cells():
        for p in "XYZ":
            assert tv_distance(ref, inject_at(sched, q, t, p)) < 1e-9


def test_csv_has_reason_column():
    body, n, m = FIXTURES["first_level"]
    _, table, _ = analyze(make(body, n, m))
    lines = table.to_csv().splitlines()
    assert lines[0] == "qubit,cycle,virtual,entangled_with,S,O,ACE,reason"
    assert lines[1 + 4 + 2] == "1,2,q1,,,,UnACE,FirstLevelNonSpread"
