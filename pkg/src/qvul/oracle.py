"""Ground truth by state-vector simulation.

States are batched arrays of shape ``(B, 2**n)`` with qubit ``k`` stored in
bit ``k`` of the basis index.  Terminal measurements are sampled from the
final state; a measurement followed by further gates on its qubit is
applied in place (branching exactly in the noiseless simulator, collapsing
per shot in trajectories).

Noise model: after each gate a depolarizing channel fires with the gate's
calibrated error probability and applies a uniformly random Pauli from the
full set (identity included, 4 for one qubit, 16 for two).  Measurements flip
their recorded bit with the measurement error.  Idle slots get the id error.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calib import CalibrationSnapshot, gate_success
from .circuit import CompiledCircuit, Gate, LogicalCircuit
from .cycles import IDLE, CycleSchedule, schedule
from .topology import fully_connected

MAX_QUBITS = 14
_CHUNK_AMPLITUDES = 1 << 20

_SQ2 = 1 / math.sqrt(2)
_MATS = {
    "h": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "sx": 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]),
    "y": np.array([[0, -1j], [1j, 0]]),
}


class OracleError(ValueError):
    pass


# ---------------------------------------------------------------- kernels


class _State:
    """Batch of state vectors viewed as ``(B, 2, ..., 2)``; qubit k on axis n-k."""

    def __init__(self, batch: int, n: int):
        self.n = n
        self.psi = np.zeros((batch,) + (2,) * n, dtype=complex)
        self.psi[(slice(None),) + (0,) * n] = 1.0

    def axis(self, q: int) -> int:
        return self.n - q

    def _sub(self, q: int, bit: int, rows=slice(None)):
        sl = [rows] + [slice(None)] * self.n
        sl[self.axis(q)] = bit
        return tuple(sl)

    def x(self, q: int, rows=slice(None)) -> None:
        a, b = self._sub(q, 0, rows), self._sub(q, 1, rows)
        tmp = self.psi[a].copy()
        self.psi[a] = self.psi[b]
        self.psi[b] = tmp

    def z(self, q: int, rows=slice(None)) -> None:
        self.psi[self._sub(q, 1, rows)] *= -1

    def y(self, q: int, rows=slice(None)) -> None:
        # Y = i X Z
        self.z(q, rows)
        self.x(q, rows)
        self.psi[rows] *= 1j

    def rz(self, q: int, theta: float) -> None:
        self.psi[self._sub(q, 0)] *= np.exp(-0.5j * theta)
        self.psi[self._sub(q, 1)] *= np.exp(0.5j * theta)

    def mat(self, q: int, m: np.ndarray) -> None:
        a, b = self._sub(q, 0), self._sub(q, 1)
        p0, p1 = self.psi[a].copy(), self.psi[b].copy()
        self.psi[a] = m[0, 0] * p0 + m[0, 1] * p1
        self.psi[b] = m[1, 0] * p0 + m[1, 1] * p1

    def cx(self, c: int, t: int) -> None:
        sl = [slice(None)] * (self.n + 1)
        sl[self.axis(c)] = 1
        sub = self.psi[tuple(sl)]
        at = self.axis(t) - (1 if self.axis(t) > self.axis(c) else 0)
        lo = [slice(None)] * self.n
        hi = [slice(None)] * self.n
        lo[at], hi[at] = 0, 1
        tmp = sub[tuple(lo)].copy()
        sub[tuple(lo)] = sub[tuple(hi)]
        sub[tuple(hi)] = tmp

    def apply(self, kind: str, qubits: tuple[int, ...], param: float | None = None) -> None:
        if kind == "id":
            return
        q = qubits[0]
        if kind == "x":
            self.x(q)
        elif kind == "z":
            self.z(q)
        elif kind == "y":
            self.y(q)
        elif kind == "rz":
            self.rz(q, param)
        elif kind in _MATS:
            self.mat(q, _MATS[kind])
        elif kind == "cx":
            self.cx(*qubits)
        elif kind == "swap":
            a, b = qubits
            self.cx(a, b)
            self.cx(b, a)
            self.cx(a, b)
        else:
            raise OracleError(f"cannot simulate {kind}")

    def pauli(self, q: int, code: np.ndarray, rows: np.ndarray) -> None:
        """Apply Pauli ``code`` (0=I, 1=X, 2=Y, 3=Z) on the given batch rows."""
        for p, fn in ((1, self.x), (2, self.y), (3, self.z)):
            sel = rows[code == p]
            if sel.size:
                fn(q, sel)

    def prob_one(self, q: int, bit: int = 1) -> np.ndarray:
        sub = self.psi[self._sub(q, bit)]
        return np.sum(np.abs(sub.reshape(sub.shape[0], -1)) ** 2, axis=1)

    def project(self, q: int, outcome: np.ndarray) -> None:
        rows = np.arange(self.psi.shape[0])
        for bit in (0, 1):
            kill = rows[outcome != bit]
            if kill.size:
                self.psi[self._sub(q, bit, kill)] = 0
        norm = np.sqrt(np.sum(np.abs(self.psi.reshape(len(rows), -1)) ** 2, axis=1))
        self.psi /= norm.reshape((-1,) + (1,) * self.n)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.psi.reshape(self.psi.shape[0], -1)) ** 2


# ---------------------------------------------------------------- programs


@dataclass(frozen=True)
class _Op:
    kind: str
    qubits: tuple[int, ...]  # compact indices
    param: float | None = None
    clbit: int | None = None
    terminal: bool = False


@dataclass(frozen=True)
class _Program:
    ops: tuple[_Op, ...]
    num_qubits: int  # simulated
    num_clbits: int
    qubit_map: dict[int, int]  # original -> compact
    # clbit -> (op index of last writer, terminal, compact qubit)
    last_writer: dict[int, tuple[int, bool, int]]


def _compile(ops: Sequence[tuple], num_clbits: int, keep: Sequence[int] = ()) -> _Program:
    """``ops`` are ``(kind, qubits, param, clbit)``; trivial ops are dropped."""
    ops = [o for o in ops if o[0] not in ("barrier", "id")]
    used = sorted({q for o in ops for q in o[1]} | set(keep))
    if len(used) > MAX_QUBITS:
        raise OracleError(f"{len(used)} active qubits exceed the simulator cap of {MAX_QUBITS}")
    qmap = {q: i for i, q in enumerate(used)}
    out = []
    for i, (kind, qubits, param, clbit) in enumerate(ops):
        terminal = False
        if kind == "measure":
            q = qubits[0]
            terminal = not any(q in o[1] and o[0] != "measure" for o in ops[i + 1 :])
        out.append(_Op(kind, tuple(qmap[q] for q in qubits), param, clbit, terminal))
    last = {}
    for i, op in enumerate(out):
        if op.kind == "measure":
            last[op.clbit] = (i, op.terminal, op.qubits[0])
    return _Program(tuple(out), len(used), num_clbits, qmap, last)


def _as_tuples(ops: Sequence[Gate]) -> list[tuple]:
    return [(g.kind, g.qubits, g.param, g.clbit) for g in ops]


def _keys_from_basis(prog: _Program, basis: np.ndarray) -> np.ndarray:
    """Classical register value implied by basis indices for terminal writers."""
    key = np.zeros_like(basis)
    for c, (_, terminal, q) in prog.last_writer.items():
        if terminal:
            key |= ((basis >> q) & 1) << c
    return key


def _distribution_array(prog: _Program) -> np.ndarray:
    """Exact output probabilities indexed by classical register value."""
    branches = [(1.0, 0, _State(1, prog.num_qubits))]
    for i, op in enumerate(prog.ops):
        if op.kind != "measure":
            for _, _, st in branches:
                st.apply(op.kind, op.qubits, op.param)
            continue
        if op.terminal:
            continue
        nxt = []
        for p, reg, st in branches:
            # weigh each branch by its own half of the state so rounding
            # drift never produces a branch with no amplitude left
            mass = [float(st.prob_one(op.qubits[0], b)[0]) for b in (0, 1)]
            for bit in (0, 1):
                pb = mass[bit] / (mass[0] + mass[1])
                if pb <= 1e-15:
                    continue
                child = _State(1, prog.num_qubits)
                child.psi = st.psi.copy()
                child.project(op.qubits[0], np.array([bit]))
                creg = (reg & ~(1 << op.clbit)) | (bit << op.clbit)
                nxt.append((p * pb, creg, child))
        branches = nxt
    size = 1 << prog.num_clbits
    dist = np.zeros(size)
    basis = np.arange(1 << prog.num_qubits)
    tkeys = _keys_from_basis(prog, basis)
    tmask = sum(1 << c for c, (_, t, _) in prog.last_writer.items() if t)
    for p, reg, st in branches:
        keys = tkeys | (reg & ~tmask)
        dist += p * np.bincount(keys, weights=st.probabilities()[0], minlength=size)
    return dist


def _to_dict(arr: np.ndarray, num_clbits: int, cutoff: float = 1e-14) -> dict[str, float]:
    return {format(int(k), f"0{num_clbits}b") if num_clbits else "": float(arr[k]) for k in np.flatnonzero(arr > cutoff)}


def _ops_of(circuit) -> tuple[list[tuple], int]:
    if isinstance(circuit, CycleSchedule):
        return _as_tuples([circuit.ops[i] for i in circuit.order()]), circuit.circuit.num_clbits
    return _as_tuples(circuit.ops), circuit.num_clbits


def simulate_noiseless(circuit: LogicalCircuit | CompiledCircuit | CycleSchedule) -> dict[str, float]:
    """Exact output distribution; keys have classical bit 0 rightmost."""
    ops, nc = _ops_of(circuit)
    return _to_dict(_distribution_array(_compile(ops, nc)), nc)


def tv_distance(p: dict[str, float], q: dict[str, float]) -> float:
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in set(p) | set(q))


def inject_at(
    circuit: CompiledCircuit | CycleSchedule, qubit: int, cycle: int, pauli: str
) -> dict[str, float]:
    """Noiseless distribution with one Pauli inserted at cell ``(qubit, cycle)``.

    The Pauli lands after the cell's operation, or just before it when the
    cell holds a measurement.
    """
    sched = circuit if isinstance(circuit, CycleSchedule) else schedule(circuit)
    if pauli not in ("X", "Y", "Z"):
        raise OracleError(f"pauli must be X, Y or Z, got {pauli!r}")
    if not (0 <= qubit < sched.num_qubits and 0 <= cycle < sched.depth):
        raise OracleError(f"cell ({qubit}, {cycle}) outside the {sched.num_qubits}x{sched.depth} grid")
    idx = int(sched.slots[cycle, qubit])
    before = idx != IDLE and sched.ops[idx].kind == "measure"
    keyed = [((sched.cycles[i], 1, i), sched.ops[i]) for i in sched.order()]
    keyed.append(((cycle, 0 if before else 2, -1), None))
    keyed.sort(key=lambda kv: kv[0])
    ops = [
        (pauli.lower(), (qubit,), None, None) if g is None else (g.kind, g.qubits, g.param, g.clbit)
        for _, g in keyed
    ]
    nc = sched.circuit.num_clbits
    return _to_dict(_distribution_array(_compile(ops, nc, keep=(qubit,))), nc)


# ---------------------------------------------------------------- fault injection


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Per-occurrence error probabilities over a schedule.

    ``op_error[i]`` belongs to schedule op ``i`` (depolarizing for gates, a
    bit flip for measurements); ``idle_error[t, q]`` to idle slot ``(q, t)``.
    """

    schedule: CycleSchedule
    op_error: np.ndarray
    idle_error: np.ndarray

    def __post_init__(self):
        for arr in (self.op_error, self.idle_error):
            if arr.size and (arr.min() < 0 or arr.max() > 1):
                raise OracleError("error probabilities must lie in [0, 1]")

    @classmethod
    def from_snapshot(cls, sched: CycleSchedule, snapshot: CalibrationSnapshot) -> NoiseSpec:
        op_error = np.zeros(len(sched.ops))
        for t in range(sched.depth):
            here = [sched.ops[i] for i in sched.ops_at(t)]
            for i in sched.ops_at(t):
                op_error[i] = 1.0 - gate_success(snapshot, sched.ops[i], here)
        idle = np.broadcast_to(snapshot.sq[:, 0], (sched.depth, sched.num_qubits))
        idle = np.where(sched.slots == IDLE, idle, 0.0)
        return cls(sched, op_error, idle)


@dataclass(frozen=True)
class SrResult:
    trials: int
    correct: int
    ci_low: float
    ci_high: float

    @property
    def sr(self) -> float:
        return self.correct / self.trials

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "correct": self.correct,
            "sr": self.sr,
            "ci95": [self.ci_low, self.ci_high],
            "half_width": self.half_width,
        }


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def as_compiled(circuit: LogicalCircuit | CompiledCircuit) -> CompiledCircuit:
    if isinstance(circuit, CompiledCircuit):
        return circuit
    device = fully_connected(circuit.num_qubits)
    return CompiledCircuit(device, circuit.ops, (), circuit.num_clbits, circuit.num_qubits)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("QVUL_THREADS", "0")) or (os.cpu_count() or 1))
    except ValueError:
        return 1


class _Trajectories:
    def __init__(self, noise: NoiseSpec):
        sched = noise.schedule
        self.sched = sched
        order = sched.order()
        tuples = _as_tuples([sched.ops[i] for i in order])
        self.prog = _compile(tuples, sched.circuit.num_clbits)
        qmap = self.prog.qubit_map
        # After its terminal measurement a qubit is frozen: later noise on it
        # must not reach the deferred readout.
        frozen_after = {}
        for op, i in zip(self.prog.ops, order):
            if op.kind == "measure" and op.terminal:
                q = op.qubits[0]
                frozen_after.setdefault(q, sched.cycles[i])
        pos = {i: k for k, i in enumerate(order)}
        self.events: list[tuple] = []  # (kind, payload)
        for t in range(sched.depth):
            for i in sched.ops_at(t):
                k = pos[i]
                self.events.append(("op", k, float(noise.op_error[i])))
            for q in range(sched.num_qubits):
                if sched.slots[t, q] != IDLE or q not in qmap:
                    continue
                cq = qmap[q]
                p = float(noise.idle_error[t, q])
                if p > 0 and t <= frozen_after.get(cq, sched.depth):
                    self.events.append(("idle", cq, p))

    def run(self, shots: int, rng: np.random.Generator, target: int) -> int:
        prog = self.prog
        st = _State(shots, prog.num_qubits)
        reg = np.zeros(shots, dtype=np.int64)
        flips = np.zeros(shots, dtype=np.int64)
        rows = np.arange(shots)
        for ev in self.events:
            if ev[0] == "idle":
                _, q, p = ev
                hit = rows[rng.random(shots) < p]
                if hit.size:
                    st.pauli(q, rng.integers(0, 4, hit.size), hit)
                continue
            _, k, p = ev
            op = prog.ops[k]
            if op.kind == "measure":
                c = op.clbit
                flip = (rng.random(shots) < p).astype(np.int64)
                if op.terminal:
                    if prog.last_writer[c][0] == k:
                        flips = (flips & ~(1 << c)) | (flip << c)
                    continue
                q = op.qubits[0]
                p0, p1 = st.prob_one(q, 0), st.prob_one(q, 1)
                out = (rng.random(shots) * (p0 + p1) < p1).astype(np.int64)
                st.project(q, out)
                reg = (reg & ~(1 << c)) | ((out ^ flip) << c)
                flips &= ~(1 << c)
                continue
            st.apply(op.kind, op.qubits, op.param)
            if p <= 0:
                rng.random(shots)  # keep the stream aligned across error scales
                continue
            hit = rows[rng.random(shots) < p]
            if not hit.size:
                continue
            if len(op.qubits) == 1:
                st.pauli(op.qubits[0], rng.integers(0, 4, hit.size), hit)
            else:
                code = rng.integers(0, 16, hit.size)
                st.pauli(op.qubits[0], code // 4, hit)
                st.pauli(op.qubits[1], code % 4, hit)
        probs = st.probabilities()
        cdf = np.cumsum(probs, axis=1)
        u = rng.random(shots) * cdf[:, -1]
        basis = np.minimum((cdf < u[:, None]).sum(axis=1), probs.shape[1] - 1)
        tmask = sum(1 << c for c, (_, t, _) in prog.last_writer.items() if t)
        keys = (_keys_from_basis(prog, basis) | (reg & ~tmask)) ^ flips
        return int(np.sum(keys == target))


def run_fault_injection(
    circuit: LogicalCircuit | CompiledCircuit | CycleSchedule,
    noise: CalibrationSnapshot | NoiseSpec,
    shots: int,
    seed: int,
    correct: str | None = None,
    workers: int | None = None,
) -> SrResult:
    """Monte Carlo success rate against ``correct`` (classical bit 0 rightmost)."""
    if shots < 1:
        raise OracleError("shots must be positive")
    if correct is None:
        raise OracleError("a correct output string is required")
    if isinstance(noise, NoiseSpec):
        sched = noise.schedule
    else:
        sched = circuit if isinstance(circuit, CycleSchedule) else schedule(as_compiled(circuit))
        noise = NoiseSpec.from_snapshot(sched, noise)
    nc = sched.circuit.num_clbits
    if len(correct) != nc or set(correct) - {"0", "1"}:
        raise OracleError(f"correct output {correct!r} does not match {nc} classical bits")
    target = int(correct, 2) if nc else 0
    traj = _Trajectories(noise)
    chunk = max(1, _CHUNK_AMPLITUDES >> traj.prog.num_qubits)
    sizes = [min(chunk, shots - s) for s in range(0, shots, chunk)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def work(k: int) -> int:
        return traj.run(sizes[k], np.random.default_rng(seeds[k]), target)

    workers = workers or default_workers()
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(workers) as pool:
            correct_count = sum(pool.map(work, range(len(sizes))))
    else:
        correct_count = sum(map(work, range(len(sizes))))
    lo, hi = wilson_interval(correct_count, shots)
    return SrResult(shots, correct_count, lo, hi)
