"""ACE / un-ACE marking of booking-table cells.

A cell ``(q, t)`` stands for a Pauli error landing right after the operation
in that slot (right before it, for a measurement).  The analysis walks the
cycles from last to first carrying, per physical row, whether an error at
that point can still reach a measurement:

* a measurement slot is always ACE;
* a cx slot is ACE when either operand is live after the cx (the gate's
  error hits both operands, and a Pauli before a cx spreads to both);
* any other slot inherits the row's liveness after it;
* inside an entanglement interval the members' liveness is OR-ed together,
  so an entangled group holding a live member stays ACE as a whole.

Dead cells are labelled with the first matching explanation from
``REASONS``.  Only conversions from ACE to un-ACE happen, and the outer loop
stops as soon as a sweep changes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import QubitClass
from .cycles import IDLE, BookingTable

REASONS = (
    None,
    "UnusedAncilla",
    "PostMeasure",
    "PreInit",
    "Trashed",
    "FirstLevelNonSpread",
    "SecondLevelNonSpread",
)
UNUSED, POST_MEASURE, PRE_INIT, TRASHED, FIRST_LEVEL, SECOND_LEVEL = range(1, 7)


@dataclass(frozen=True, eq=False)
class AceMap:
    """``ace[t, q]`` is True for ACE cells; ``reason[t, q]`` indexes ``REASONS``."""

    ace: np.ndarray
    reason: np.ndarray
    sweeps: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.ace.shape

    def status(self, qubit: int, cycle: int) -> str:
        return "ACE" if self.ace[cycle, qubit] else "UnACE"

    def reason_of(self, qubit: int, cycle: int) -> str | None:
        return REASONS[self.reason[cycle, qubit]]

    def unace_cells(self) -> list[tuple[int, int]]:
        """``(qubit, cycle)`` pairs of every un-ACE cell."""
        t, q = np.nonzero(~self.ace)
        return sorted(zip(q.tolist(), t.tolist()))

    def counts(self) -> dict[str, int]:
        out = {"ACE": int(self.ace.sum())}
        for code, name in enumerate(REASONS[1:], start=1):
            out[name] = int((self.reason == code).sum())
        return out


def _gate_grids(table: BookingTable) -> tuple[np.ndarray, np.ndarray]:
    sched = table.schedule
    partner = np.full(sched.slots.shape, -1, dtype=np.int32)
    measured = np.zeros(sched.slots.shape, dtype=bool)
    for i, op in enumerate(sched.ops):
        t = sched.cycles[i]
        if op.kind == "cx":
            a, b = op.qubits
            partner[t, a], partner[t, b] = b, a
        elif op.kind == "measure":
            measured[t, op.qubits[0]] = True
    return partner, measured


def _pins(table: BookingTable) -> list[list[np.ndarray]]:
    """Per cycle, the row sets whose liveness is tied together."""
    pins: list[list[np.ndarray]] = [[] for _ in range(table.depth)]
    for grp in table.entanglement.groups:
        members = np.array(grp.members)
        for t in range(max(grp.start, 0), min(grp.end, table.depth - 1) + 1):
            rows = np.flatnonzero(np.isin(table.virtual[t], members))
            if len(rows) > 1:
                pins[t].append(rows)
    return pins


def _sweep(prev: np.ndarray, partner: np.ndarray, measured: np.ndarray, pins) -> np.ndarray:
    depth, n = prev.shape
    ace = np.zeros_like(prev)
    live = np.zeros(n, dtype=bool)
    for t in range(depth - 1, -1, -1):
        for rows in pins[t]:
            if live[rows].any():
                live[rows] = True
        row = live.copy()
        p = partner[t]
        cx = p >= 0
        row[cx] |= live[p[cx]]
        row[measured[t]] = True
        # cells are only ever demoted
        row &= prev[t]
        ace[t] = row
        live = row
    return ace


def mark_unace(table: BookingTable) -> AceMap:
    depth, n = table.depth, table.num_qubits
    partner, measured = _gate_grids(table)
    pins = _pins(table)
    ace = np.ones((depth, n), dtype=bool)
    sweeps = 0
    while sweeps < max(depth, 1):
        nxt = _sweep(ace, partner, measured, pins)
        sweeps += 1
        if np.array_equal(nxt, ace):
            break
        ace = nxt
    return AceMap(ace, _reasons(table, ace, partner), sweeps)


def _reasons(table: BookingTable, ace: np.ndarray, partner: np.ndarray) -> np.ndarray:
    sched = table.schedule
    depth, n = ace.shape
    virtual = table.virtual
    first_op = np.full(n, depth, dtype=np.int64)
    last_op = np.full(n, -1, dtype=np.int64)
    last_meas = np.full(n, -1, dtype=np.int64)
    last_cx = np.full(n, -1, dtype=np.int64)
    busy = (sched.slots != IDLE) & ~np.isin(sched.slots, [i for i, op in enumerate(sched.ops) if op.is_trivial])
    t_idx, q_idx = np.nonzero(busy)
    v_idx = virtual[t_idx, q_idx]
    np.minimum.at(first_op, v_idx, t_idx)
    np.maximum.at(last_op, v_idx, t_idx)
    cx_cells = partner[t_idx, q_idx] >= 0
    np.maximum.at(last_cx, v_idx[cx_cells], t_idx[cx_cells])
    meas_ops = [i for i, op in enumerate(sched.ops) if op.kind == "measure"]
    for i in meas_ops:
        t, q = sched.cycles[i], sched.ops[i].qubits[0]
        v = virtual[t, q]
        last_meas[v] = max(last_meas[v], t)

    unused = np.array([c is QubitClass.UNUSED_ANCILLA for c in table.classes.classes], dtype=bool)
    tt = np.arange(depth)[:, None]
    reason = np.zeros((depth, n), dtype=np.int8)
    dead = ~ace
    rules = [
        (UNUSED, unused[virtual]),
        (POST_MEASURE, (last_meas[virtual] >= 0) & (tt > last_meas[virtual])),
        (PRE_INIT, tt < first_op[virtual]),
        (TRASHED, tt > last_op[virtual]),
        (FIRST_LEVEL, tt > last_cx[virtual]),
        (SECOND_LEVEL, np.ones_like(dead)),
    ]
    for code, cond in rules:
        hit = dead & cond & (reason == 0)
        reason[hit] = code
    return reason


def analyze(circuit, annotations=None):
    """Schedule, classify, detect entanglement and mark cells in one call.

    Returns ``(schedule, booking table with ACE marks, AceMap)``.
    """
    from .circuit import classify_virtual_qubits
    from .cycles import build_booking_table, schedule
    from .entanglement import detect, merge_annotations

    sched = schedule(circuit)
    classes = classify_virtual_qubits(circuit)
    ent = detect(sched)
    if annotations is not None:
        ent = merge_annotations(ent, annotations, circuit.num_qubits)
    table = build_booking_table(sched, classes, ent)
    ace_map = mark_unace(table)
    return sched, table.with_ace(ace_map), ace_map
