from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qvul.bench import BenchmarkSpec, generate
from qvul.circuit import CompiledCircuit, Gate, classify_virtual_qubits, normalize
from qvul.cycles import IDLE, build_booking_table, schedule
from qvul.entanglement import EntangledGroup, EntanglementIntervals, detect
from qvul.topology import grid, hexagon27, line
from qvul.transpile import CompileConfig, transpile

from conftest import make, random_compiled


def reference_asap(circuit: CompiledCircuit) -> list[int]:
    """Independent list scheduler over an explicit occupancy grid."""
    ops = normalize(circuit.ops).ops
    n = circuit.num_qubits
    busy_q: list[set[int]] = [set() for _ in range(n)]
    busy_c: dict[int, set[int]] = {}
    floor = [0] * n  # nothing may move before a qubit's previous op or fence
    out = []
    for op in ops:
        if op.kind == "barrier":
            t = max(floor[q] for q in op.qubits)
            for q in op.qubits:
                floor[q] = t
            out.append(t)
            continue
        t = max(floor[q] for q in op.qubits)
        while any(t in busy_q[q] for q in op.qubits) or (
            op.kind == "measure" and t in busy_c.get(op.clbit, set())
        ) or (op.kind == "measure" and busy_c.get(op.clbit) and t <= max(busy_c[op.clbit])):
            t += 1
        for q in op.qubits:
            busy_q[q].add(t)
            floor[q] = t + 1
        if op.kind == "measure":
            busy_c.setdefault(op.clbit, set()).add(t)
        out.append(t)
    return out


def test_depth_examples():
    assert schedule(make("h q[0]; h q[1];", 2)).depth == 1
    assert schedule(make("h q[0]; cx q[0],q[1];", 2)).depth == 2


def test_barrier_is_a_zero_width_fence():
    s = schedule(make("x q[0]; x q[0]; barrier q[0],q[1]; x q[1];", 2))
    assert s.depth == 3
    assert s.slot(1, 2).kind == "x"
    assert s.slot(1, 0).kind == "id"


def test_measure_uses_one_cycle_and_orders_on_clbit():
    s = schedule(make("measure q[0]->c[0]; measure q[1]->c[0];", 2, 1))
    assert s.depth == 2


def test_qft4_hexagon_depth_matches_reference():
    cc = transpile(generate(BenchmarkSpec("QFT", 4)), hexagon27(), CompileConfig("dense", "lookahead", 1))
    s = schedule(cc)
    ref = reference_asap(cc)
    assert list(s.cycles) == ref
    assert s.depth == max(t for t, op in zip(ref, s.ops) if op.kind != "barrier") + 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 40))
def test_schedule_invariants(seed, num_ops):
    rng = np.random.default_rng(seed)
    c = random_compiled(rng, grid(2, 3), num_ops)
    s = schedule(c)
    assert list(s.cycles) == reference_asap(c)
    assert s.slots.shape == (s.depth, 6) and s.num_slots == s.depth * 6
    # one op per qubit per cycle; every non-barrier op occupies its own slots
    for i, op in enumerate(s.ops):
        if op.kind != "barrier":
            assert all(s.slots[s.cycles[i], q] == i for q in op.qubits)
    assert s.identity_slots == int((s.slots == IDLE).sum())
    # per-qubit program order preserved
    last = {}
    for i in s.order():
        for q in s.ops[i].qubits:
            assert s.cycles[i] > last.get(q, -1)
            last[q] = s.cycles[i]


def _table(c, ent=None):
    s = schedule(c)
    return build_booking_table(s, classify_virtual_qubits(c), ent or detect(s))


def test_unused_row_is_identity_without_swaps():
    t = _table(make("x q[0]; measure q[0]->c[0];", 2, 1))
    assert all(t.schedule.slot(1, k).kind == "id" for k in range(t.depth))
    assert not t.swap[:, 1].any()
    assert t.cell(0, 0).output_flag and not t.cell(1, 0).output_flag
    assert t.cell(0, 0).ace_status == "ACE"


def test_ghz_entangled_with_points_at_first_member():
    t = _table(make("h q[0]; cx q[0],q[1]; cx q[0],q[2]; x q[0]; x q[1]; x q[2];", 3))
    assert [t.cell(q, 2).entangled_with for q in range(3)] == ["q1", "q0", "q0"]


def test_swap_flags_and_names():
    c = CompiledCircuit(line(3), (Gate("x", (0,)), Gate("swap", (0, 1)), Gate("x", (0,))), (0, 1, 2), 0, 1)
    t = _table(c)
    flagged = np.nonzero(t.swap.any(axis=1))[0]
    assert len(flagged) == 3
    assert t.swap[flagged][:, [0, 1]].all() and not t.swap[:, 2].any()
    assert t.cell(0, 0).virtual_name == "q0" and t.cell(0, flagged[-1]).virtual_name == "q0"
    assert t.cell(0, flagged[-1] + 1).virtual_name == "a0"
    assert t.cell(1, flagged[-1] + 1).virtual_name == "q0"


def test_unknown_virtual_in_interval():
    c = make("x q[0];", 2)
    with pytest.raises(ValueError):
        _table(c, EntanglementIntervals((EntangledGroup((0, 5), 0, 0),)))


def test_csv_columns():
    t = _table(make("x q[0]; measure q[0]->c[0];", 1, 1))
    assert t.to_csv().splitlines()[0] == "qubit,cycle,virtual,entangled_with,S,O,ACE"
