"""Cycle view: ASAP rescheduling, identity fill and the circuit booking table.

Every gate, measurement included, takes one cycle.  Barriers occupy no slot;
they only fence their operands.  Idle slots are implicit identity gates
(``-1`` in the slot grid).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Iterator

import numpy as np

from .circuit import CompiledCircuit, Gate, QubitClass, VirtualQubitClass, normalize

if TYPE_CHECKING:
    from .ace import AceMap
    from .entanglement import EntanglementIntervals

IDLE = -1


@dataclass(frozen=True, eq=False)
class CycleSchedule:
    circuit: CompiledCircuit
    ops: tuple[Gate, ...]  # swaps expanded
    swap_group: tuple[int, ...]
    cycles: tuple[int, ...]  # per op; for barriers the fence position
    depth: int
    slots: np.ndarray  # (depth, num_qubits) op index or IDLE

    @property
    def num_qubits(self) -> int:
        return self.circuit.num_qubits

    @property
    def num_slots(self) -> int:
        return self.depth * self.num_qubits

    @property
    def identity_slots(self) -> int:
        return int((self.slots == IDLE).sum())

    def slot(self, qubit: int, cycle: int) -> Gate:
        idx = int(self.slots[cycle, qubit])
        return Gate("id", (qubit,)) if idx == IDLE else self.ops[idx]

    def ops_at(self, cycle: int) -> list[int]:
        return sorted(set(int(i) for i in self.slots[cycle] if i != IDLE))

    def order(self) -> list[int]:
        """Non-barrier op indices in cycle order (replay order)."""
        return sorted((i for i, op in enumerate(self.ops) if op.kind != "barrier"), key=lambda i: (self.cycles[i], i))

    def swap_completions(self) -> list[tuple[int, int, int]]:
        """``(cycle, a, b)`` for every swap; names exchange after ``cycle``."""
        last: dict[int, int] = {}
        for i, g in enumerate(self.swap_group):
            if g >= 0:
                last[g] = i
        return sorted((self.cycles[i], *sorted(self.ops[i].qubits)) for i in last.values())


def schedule(circuit: CompiledCircuit) -> CycleSchedule:
    norm = normalize(circuit.ops)
    n = circuit.num_qubits
    qfree = [0] * n
    cfree = [0] * max(circuit.num_clbits, 1)
    cycles = []
    for op in norm.ops:
        if op.kind == "barrier":
            t = max(qfree[q] for q in op.qubits)
            for q in op.qubits:
                qfree[q] = t
            cycles.append(t)
            continue
        t = max(qfree[q] for q in op.qubits)
        if op.kind == "measure":
            t = max(t, cfree[op.clbit])
            cfree[op.clbit] = t + 1
        for q in op.qubits:
            qfree[q] = t + 1
        cycles.append(t)
    depth = max(qfree, default=0)
    slots = np.full((depth, n), IDLE, dtype=np.int32)
    for i, (op, t) in enumerate(zip(norm.ops, cycles)):
        if op.kind != "barrier":
            slots[t, list(op.qubits)] = i
    return CycleSchedule(circuit, norm.ops, norm.swap_group, tuple(cycles), depth, slots)


@dataclass(frozen=True)
class BookingCell:
    virtual_name: str
    entangled_with: str | None
    swap_flag: bool
    output_flag: bool
    ace_status: str  # "ACE" or "UnACE"


@dataclass(frozen=True, eq=False)
class BookingTable:
    """Physical-qubit x cycle grid; arrays are indexed ``[cycle, qubit]``."""

    schedule: CycleSchedule
    classes: VirtualQubitClass
    entanglement: EntanglementIntervals
    virtual: np.ndarray
    entangled_with: np.ndarray
    swap: np.ndarray
    output: np.ndarray
    ace: np.ndarray
    reason: np.ndarray | None = None

    @property
    def depth(self) -> int:
        return self.schedule.depth

    @property
    def num_qubits(self) -> int:
        return self.schedule.num_qubits

    @property
    def names(self) -> tuple[str, ...]:
        return self.classes.names

    def cell(self, qubit: int, cycle: int) -> BookingCell:
        ent = int(self.entangled_with[cycle, qubit])
        return BookingCell(
            self.names[self.virtual[cycle, qubit]],
            None if ent < 0 else self.names[ent],
            bool(self.swap[cycle, qubit]),
            bool(self.output[cycle, qubit]),
            "ACE" if self.ace[cycle, qubit] else "UnACE",
        )

    def with_ace(self, ace_map: AceMap) -> BookingTable:
        return replace(self, ace=ace_map.ace.copy(), reason=ace_map.reason.copy())

    def rows(self) -> Iterator[dict]:
        from .ace import REASONS

        for q in range(self.num_qubits):
            for t in range(self.depth):
                c = self.cell(q, t)
                row = {
                    "qubit": q,
                    "cycle": t,
                    "virtual": c.virtual_name,
                    "entangled_with": c.entangled_with or "",
                    "S": "S" if c.swap_flag else "",
                    "O": "O" if c.output_flag else "",
                    "ACE": c.ace_status,
                }
                if self.reason is not None:
                    row["reason"] = REASONS[self.reason[t, q]] or ""
                yield row

    def to_csv(self) -> str:
        fields = ["qubit", "cycle", "virtual", "entangled_with", "S", "O", "ACE"]
        if self.reason is not None:
            fields.append("reason")
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "num_qubits": self.num_qubits,
            "depth": self.depth,
            "virtual_names": list(self.names),
            "classes": {n: c.value for n, c in zip(self.names, self.classes.classes)},
            "cells": list(self.rows()),
        }
        return json.dumps(payload, indent=1)


def virtual_grid(sched: CycleSchedule) -> np.ndarray:
    n = sched.num_qubits
    p2v = np.empty(n, dtype=np.int32)
    p2v[list(sched.circuit.initial_layout)] = np.arange(n, dtype=np.int32)
    grid = np.empty((sched.depth, n), dtype=np.int32)
    start = 0
    for t, a, b in sched.swap_completions():
        grid[start : t + 1] = p2v
        p2v[a], p2v[b] = p2v[b], p2v[a]
        start = t + 1
    grid[start:] = p2v
    return grid


def build_booking_table(
    sched: CycleSchedule, classes: VirtualQubitClass, ent: EntanglementIntervals
) -> BookingTable:
    n = sched.num_qubits
    if len(classes) != n:
        raise ValueError("classification does not match the schedule's qubit count")
    virtual = virtual_grid(sched)

    swap = np.zeros_like(virtual, dtype=bool)
    for i, g in enumerate(sched.swap_group):
        if g >= 0:
            swap[sched.cycles[i], list(sched.ops[i].qubits)] = True

    outputting = np.array([c is QubitClass.OUTPUTTING for c in classes.classes], dtype=bool)
    output = outputting[virtual]

    entangled = np.full_like(virtual, -1)
    for grp in ent.groups:
        for v in grp.members:
            if not 0 <= v < n:
                raise ValueError(f"entanglement interval references unknown virtual qubit {v}")
        lo, hi = max(grp.start, 0), min(grp.end, sched.depth - 1)
        if lo > hi:
            continue
        window = virtual[lo : hi + 1]
        first = grp.members[0]
        for k, v in enumerate(grp.members):
            partner = grp.members[1] if k == 0 else first
            entangled[lo : hi + 1][window == v] = partner

    ace = np.ones_like(virtual, dtype=bool)
    return BookingTable(sched, classes, ent, virtual, entangled, swap, output, ace)
