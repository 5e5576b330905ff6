"""Success-rate estimators: ESP, QVF/UQVF and the cumulative 1-CQV.

ESP multiplies every gate and measurement success rate.  QVF averages the
calibrated error of ACE cells.  CQV follows each virtual qubit's cumulative
success ``S`` through the cycles; a cx lets a fraction ``w`` of the
partner's accumulated error flow across (computed from both operands'
values before the cycle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ace import AceMap
from .calib import CalibrationSnapshot, gate_success
from .circuit import CompiledCircuit, QubitClass, normalize
from .cycles import IDLE, BookingTable, CycleSchedule


def esp(circuit: CompiledCircuit, snapshot: CalibrationSnapshot) -> float:
    """Product of gate and measurement success rates; idle slots and crosstalk ignored."""
    logs = 0.0
    for op in normalize(circuit.ops).ops:
        if op.kind == "barrier":
            continue
        s = 1.0 - snapshot.gate_error(op)
        if s <= 0:
            return 0.0
        logs += math.log(s)
    return math.exp(logs)


def cell_errors(sched: CycleSchedule, snapshot: CalibrationSnapshot) -> np.ndarray:
    """Calibrated error of every ``(cycle, qubit)`` cell, crosstalk included.

    A cx cell carries the full cx error on both operands; idle cells carry
    the id error.
    """
    if snapshot.num_qubits != sched.num_qubits:
        raise ValueError(
            f"calibration covers {snapshot.num_qubits} qubits, circuit uses {sched.num_qubits}"
        )
    err = np.where(sched.slots == IDLE, snapshot.sq[:, 0][None, :], 0.0)
    cx_by_cycle: dict[int, list[int]] = {}
    for i, op in enumerate(sched.ops):
        if op.kind == "barrier":
            continue
        t = sched.cycles[i]
        if op.kind == "cx":
            cx_by_cycle.setdefault(t, []).append(i)
        e = snapshot.gate_error(op)
        err[t, list(op.qubits)] = e
    if snapshot.crosstalk:
        for t, idx in cx_by_cycle.items():
            if len(idx) < 2:
                continue
            here = [sched.ops[i] for i in idx]
            for i in idx:
                err[t, list(sched.ops[i].qubits)] = 1.0 - gate_success(snapshot, sched.ops[i], here)
    return err


def qvf(ace_map: AceMap, table: BookingTable, snapshot: CalibrationSnapshot, errors: np.ndarray | None = None):
    """Return ``(qvf_per_cycle, qvf, uqvf)``."""
    err = cell_errors(table.schedule, snapshot) if errors is None else errors
    mass = np.where(ace_map.ace, err, 0.0)
    depth, n = mass.shape
    per_cycle = mass.sum(axis=1) / n
    if depth == 0:
        return per_cycle, 0.0, 0.0
    total = float(mass.sum())
    used = len(table.classes.used())
    uqvf = total / (used * depth) if used else 0.0
    return per_cycle, total / (n * depth), uqvf


def cqv(
    ace_map: AceMap,
    table: BookingTable,
    snapshot: CalibrationSnapshot,
    weight: float | np.ndarray,
    trace: bool = False,
    errors: np.ndarray | None = None,
):
    """Return ``(one_minus_cqv, traces)``.

    ``weight`` may be an array, in which case ``one_minus_cqv`` is an array
    of the same length.  ``traces`` (only with ``trace=True`` and a scalar
    weight) has shape ``(depth + 1, num_virtual)``; row 0 is the initial 1.
    """
    w = np.atleast_1d(np.asarray(weight, dtype=float))
    if w.ndim != 1 or np.any(~np.isfinite(w)) or w.min() < 0 or w.max() > 1:
        raise ValueError("weight must lie in [0, 1]")
    err = cell_errors(table.schedule, snapshot) if errors is None else errors
    gs = 1.0 - err
    depth, n = gs.shape
    ace = ace_map.ace
    virtual = table.virtual
    partner = np.full((depth, n), -1, dtype=np.int32)
    sched = table.schedule
    for i, op in enumerate(sched.ops):
        if op.kind == "cx":
            a, b = op.qubits
            t = sched.cycles[i]
            partner[t, a], partner[t, b] = b, a

    S = np.ones((len(w), n))
    traces = np.ones((depth + 1, n)) if trace and np.ndim(weight) == 0 else None
    wcol = w[:, None]
    for t in range(depth):
        rows = virtual[t]
        s_rows = S[:, rows]
        a = ace[t]
        factor = np.where(a, gs[t], 1.0)
        p = partner[t]
        flow = (p >= 0) & a
        if flow.any():
            pa = np.where(flow, p, 0)
            flow &= ace[t, pa]
            if flow.any():
                lost = 1.0 - s_rows[:, pa]
                factor = factor * np.where(flow, 1.0 - wcol * lost, 1.0)
        S[:, rows] = s_rows * factor
        if traces is not None:
            traces[t + 1] = S[0]
    out = np.array([c is QubitClass.OUTPUTTING for c in table.classes.classes])
    result = np.prod(S[:, out], axis=1)
    if np.ndim(weight) == 0:
        return float(result[0]), traces
    return result, traces


@dataclass
class EstimateReport:
    esp: float
    qvf_per_cycle: list[float]
    qvf: float
    uqvf: float
    one_minus_cqv: float
    weight_used: float
    depth: int
    num_qubits: int
    used_qubits: int
    cx_count: int
    unace_fraction: float
    traces: np.ndarray | None = field(default=None, repr=False)

    def to_json(self, with_per_cycle: bool = True) -> dict:
        out = {
            "esp": self.esp,
            "one_minus_cqv": self.one_minus_cqv,
            "weight_used": self.weight_used,
            "qvf": self.qvf,
            "uqvf": self.uqvf,
            "depth": self.depth,
            "num_qubits": self.num_qubits,
            "used_qubits": self.used_qubits,
            "cx_count": self.cx_count,
            "unace_fraction": self.unace_fraction,
        }
        if with_per_cycle:
            out["qvf_per_cycle"] = list(self.qvf_per_cycle)
        return out

    def trace_csv(self, names) -> str:
        if self.traces is None:
            raise ValueError("report was built without traces")
        lines = ["cycle," + ",".join(names)]
        for t, row in enumerate(self.traces):
            lines.append(f"{t}," + ",".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"


def estimate(
    circuit: CompiledCircuit,
    snapshot: CalibrationSnapshot,
    weight: float = 0.1,
    annotations=None,
    trace: bool = False,
) -> EstimateReport:
    from .ace import analyze

    _, table, ace_map = analyze(circuit, annotations)
    err = cell_errors(table.schedule, snapshot)
    per_cycle, q, uq = qvf(ace_map, table, snapshot, err)
    one_minus, traces = cqv(ace_map, table, snapshot, weight, trace=trace, errors=err)
    cells = ace_map.ace.size
    return EstimateReport(
        esp=esp(circuit, snapshot),
        qvf_per_cycle=[float(x) for x in per_cycle],
        qvf=q,
        uqvf=uq,
        one_minus_cqv=one_minus,
        weight_used=float(weight),
        depth=table.depth,
        num_qubits=table.num_qubits,
        used_qubits=len(table.classes.used()),
        cx_count=circuit.cx_count(),
        unace_fraction=float((~ace_map.ace).sum() / cells) if cells else 0.0,
        traces=traces,
    )
