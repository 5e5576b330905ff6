from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qvul import calib
from qvul.ace import analyze
from qvul.bench import BenchmarkSpec, generate
from qvul.calib import CalibrationSnapshot, gate_success
from qvul.circuit import QubitClass
from qvul.estimators import cell_errors, cqv, esp, estimate, qvf
from qvul.topology import fully_connected, grid, hexagon27, line
from qvul.transpile import CompileConfig, transpile

from conftest import FIXTURES, make, random_compiled


def snapshot(n, sq=None, meas=None, cx=0.0, device=None):
    dev = device or fully_connected(n)
    table = np.zeros((n, 4)) if sq is None else np.asarray(sq, dtype=float)
    return CalibrationSnapshot("2022-04-12", table, np.zeros(n) if meas is None else meas,
                               {e: cx for e in dev.coupling_edges})


def hand_esp(circuit, snap) -> float:
    """Plain product of success rates straight from the op list."""
    p = 1.0
    for op in circuit.ops:
        if op.kind == "barrier":
            continue
        if op.kind == "measure":
            p *= 1 - snap.meas[op.qubits[0]]
        elif op.kind == "cx":
            p *= 1 - snap.cx_error(*op.qubits)
        elif op.kind == "swap":
            p *= (1 - snap.cx_error(*op.qubits)) ** 3
        else:
            p *= 1 - snap.sq_error(op.kind, op.qubits[0])
    return p


def reference_cqv(table, ace_map, snap, w) -> float:
    """Cell-by-cell replay of the accumulation rule with pre-cycle partner values."""
    sched = table.schedule
    S = {v: 1.0 for v in range(table.num_qubits)}
    for t in range(table.depth):
        here = [sched.ops[i] for i in sched.ops_at(t)]
        before = dict(S)
        for q in range(table.num_qubits):
            if not ace_map.ace[t, q]:
                continue
            v = int(table.virtual[t, q])
            g = sched.slot(q, t)
            s = gate_success(snap, g, here)
            if g.kind == "cx":
                p = g.qubits[1] if g.qubits[0] == q else g.qubits[0]
                if ace_map.ace[t, p]:
                    s *= 1 - w * (1 - before[int(table.virtual[t, p])])
            S[v] = before[v] * s
    out = [v for v, c in enumerate(table.classes.classes) if c is QubitClass.OUTPUTTING]
    return math.prod(S[v] for v in out)


def test_esp_example():
    c = make("x q[0]; sx q[1]; measure q[0]->c[0]; measure q[1]->c[1];", 2, 2)
    snap = snapshot(2, sq=[[0, 0.01, 0, 0], [0, 0, 0.001, 0]], meas=[0.02, 0.02])
    assert esp(c, snap) == pytest.approx(0.99 * 0.999 * 0.98 * 0.98, abs=1e-15)
    assert esp(c, snap) == pytest.approx(0.949845, abs=1e-6)


def test_empty_circuit():
    c = make("", 2)
    rep = estimate(c, snapshot(2, cx=0.01))
    assert (rep.esp, rep.one_minus_cqv, rep.qvf, rep.uqvf, rep.depth) == (1.0, 1.0, 0.0, 0.0, 0)


def test_qvf_example():
    c = make("x q[0]; measure q[0]->c[0];", 1, 1)
    snap = snapshot(1, sq=[[0, 0.001, 0, 0]], meas=[0.02])
    _, table, a = analyze(c)
    per_cycle, total, used = qvf(a, table, snap)
    assert list(per_cycle) == pytest.approx([0.001, 0.02])
    assert total == pytest.approx(0.0105, abs=1e-15)
    assert used == pytest.approx(0.0105, abs=1e-15)


def test_all_unace_gives_zero_qvf():
    c = make("x q[0]; cx q[0],q[1]; x q[1];", 2)
    rep = estimate(c, snapshot(2, sq=np.full((2, 4), 0.01), cx=0.02))
    assert rep.qvf == 0.0 and rep.unace_fraction == 1.0


def test_cqv_without_flow():
    c = make("x q[0]; measure q[0]->c[0];", 1, 1)
    snap = snapshot(1, sq=[[0, 0.01, 0, 0]], meas=[0.02])
    _, table, a = analyze(c)
    assert cqv(a, table, snap, 0.0)[0] == pytest.approx(0.9702, abs=1e-15)


def test_shared_error_counts_twice_at_full_weight():
    c = make("h q[0]; cx q[0],q[1]; measure q[0]->c[0]; measure q[1]->c[1];", 2, 2)
    snap = snapshot(2, sq=[[0, 0, 0.1, 0], [0, 0, 0, 0]])
    _, table, a = analyze(c)
    value, traces = cqv(a, table, snap, 1.0, trace=True)
    assert value == pytest.approx(0.81, abs=1e-12)
    assert esp(c, snap) == pytest.approx(0.9, abs=1e-12)
    assert traces[-1] == pytest.approx([0.9, 0.9])
    assert traces.shape == (table.depth + 1, 2) and (traces[0] == 1).all()


def test_error_on_unace_cell_moves_only_esp():
    body, n, m = FIXTURES["first_level"]
    c = make(body, n, m)
    clean = snapshot(2, sq=[[0, 0.01, 0.01, 0], [0, 0.01, 0.01, 0]], meas=[0.02, 0.02], cx=0.02)
    noisy_z = snapshot(2, sq=[[0, 0.01, 0.01, 0], [0, 0.01, 0.01, 0.05]], meas=[0.02, 0.02], cx=0.02)
    a, b = estimate(c, clean, 0.3), estimate(c, noisy_z, 0.3)
    assert b.esp < a.esp
    assert b.one_minus_cqv == a.one_minus_cqv


def test_weight_range():
    c = make("x q[0];", 1)
    _, table, a = analyze(c)
    with pytest.raises(ValueError):
        cqv(a, table, snapshot(1), 1.5)
    with pytest.raises(ValueError):
        cqv(a, table, snapshot(1), np.array([0.2, -0.1]))


def test_uqvf_ratio_on_hexagon():
    cc = transpile(generate(BenchmarkSpec("BV", 4)), hexagon27(), CompileConfig("dense"))
    rep = estimate(cc, calib.uniform(hexagon27()))
    assert rep.used_qubits == 4
    assert rep.uqvf / rep.qvf == pytest.approx(27 / 4, rel=1e-12)


def test_idle_and_crosstalk_cells():
    dev = line(4)
    snap = CalibrationSnapshot("2022-04-12", np.tile([0.003, 0, 0, 0], (4, 1)), np.zeros(4),
                               {(0, 1): 0.02, (1, 2): 0.02, (2, 3): 0.02}, {((2, 3), (0, 1)): 0.95})
    c = make("cx q[0],q[1]; cx q[2],q[3]; x q[0];", 4, device=dev)
    from qvul.cycles import schedule

    err = cell_errors(schedule(c), snap)
    assert err[0] == pytest.approx([1 - 0.931, 1 - 0.931, 0.02, 0.02])
    assert err[1] == pytest.approx([0.0, 0.003, 0.003, 0.003])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.floats(0, 1))
def test_matches_reference(seed, w):
    rng = np.random.default_rng(seed)
    dev = grid(2, 3)
    c = random_compiled(rng, dev, int(rng.integers(1, 40)))
    snap = calib.synthetic(dev, seed, idle=3e-3, crosstalk=0.05)
    assert esp(c, snap) == pytest.approx(hand_esp(c, snap), rel=1e-12)
    _, table, a = analyze(c)
    got, _ = cqv(a, table, snap, w)
    assert got == pytest.approx(reference_cqv(table, a, snap, w), rel=1e-12)
    rep = estimate(c, snap, w)
    assert 0 <= rep.qvf <= rep.uqvf <= 1
    assert 0 <= rep.one_minus_cqv <= 1
