"""Layout, swap routing and light peephole optimization.

Routed swaps are kept as ``swap`` markers at every optimization level; the
cycle view expands them into three cx so the booking table can flag them.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .circuit import CompiledCircuit, Gate, LogicalCircuit
from .topology import DeviceTopology

LAYOUTS = ("trivial", "dense")
ROUTINGS = ("greedy_nearest", "lookahead")
LOOKAHEAD_GATES = 4
LOOKAHEAD_DECAY = 0.5
_TWO_PI = 2 * math.pi


class RoutingError(ValueError):
    pass


@dataclass(frozen=True)
class CompileConfig:
    layout_method: str = "trivial"
    routing_method: str = "greedy_nearest"
    optimization_level: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.layout_method not in LAYOUTS:
            raise ValueError(f"layout_method must be one of {LAYOUTS}")
        if self.routing_method == "greedy":
            object.__setattr__(self, "routing_method", "greedy_nearest")
        if self.routing_method not in ROUTINGS:
            raise ValueError(f"routing_method must be one of {ROUTINGS}")
        if self.optimization_level not in (0, 1, 2):
            raise ValueError("optimization_level must be 0, 1 or 2")

    @property
    def label(self) -> str:
        return f"{self.layout_method}/{self.routing_method}/O{self.optimization_level}/s{self.seed}"


def initial_layout(device: DeviceTopology, num_virtual: int, config: CompileConfig) -> list[int]:
    """Physical qubit for every virtual qubit; ancillas take the leftovers in index order."""
    n = device.num_qubits
    if num_virtual > n:
        raise RoutingError(f"{num_virtual} virtual qubits do not fit on {n} physical qubits")
    if config.layout_method == "trivial":
        return list(range(n))
    start = sorted(range(n), key=lambda q: (-device.degree(q), q))[config.seed % n]
    region, seen = [], {start}
    queue = deque([start])
    while queue and len(region) < num_virtual:
        u = queue.popleft()
        region.append(u)
        for v in device.neighbors(u):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    if len(region) < num_virtual:
        raise RoutingError("coupling graph region around the layout seed is too small")
    rest = [q for q in range(n) if q not in set(region)]
    return region + rest


def _expand(op: Gate, level: int) -> list[Gate]:
    if level == 0:
        return [op]
    q = op.qubits
    if op.kind == "h":
        return [Gate("rz", q, math.pi / 2), Gate("sx", q), Gate("rz", q, math.pi / 2)]
    if op.kind == "z":
        return [Gate("rz", q, math.pi)]
    return [op]


def _route(ops: list[Gate], device: DeviceTopology, layout: list[int], lookahead: bool) -> list[Gate]:
    dist = device.distances
    v2p = list(layout)
    p2v = [0] * len(v2p)
    for v, p in enumerate(v2p):
        p2v[p] = v
    edges = sorted(device.coupling_edges)
    incident: dict[int, list[tuple[int, int]]] = {q: [] for q in range(device.num_qubits)}
    for e in edges:
        incident[e[0]].append(e)
        incident[e[1]].append(e)
    two_q = [i for i, op in enumerate(ops) if len(op.qubits) == 2]
    next_pos = 0
    out: list[Gate] = []

    def score(a: int, b: int, upcoming: list[Gate], swap: tuple[int, int]) -> float:
        x, y = swap

        def where(v):
            p = v2p[v]
            return y if p == x else x if p == y else p

        total = float(dist[where(a), where(b)])
        if lookahead:
            w = LOOKAHEAD_DECAY
            for g in upcoming:
                total += w * dist[where(g.qubits[0]), where(g.qubits[1])]
        return total

    for i, op in enumerate(ops):
        if len(op.qubits) != 2:
            out.append(op.remap(v2p))
            continue
        while next_pos < len(two_q) and two_q[next_pos] <= i:
            next_pos += 1
        upcoming = [ops[j] for j in two_q[next_pos : next_pos + LOOKAHEAD_GATES]]
        a, b = op.qubits
        while True:
            d = int(dist[v2p[a], v2p[b]])
            if d < 0:
                raise RoutingError(f"physical qubits {v2p[a]} and {v2p[b]} are disconnected")
            if d == 1:
                break
            best = None
            for e in sorted(set(incident[v2p[a]]) | set(incident[v2p[b]])):
                x, y = e
                nx, ny = (y if v2p[a] == x else x if v2p[a] == y else v2p[a]), (
                    y if v2p[b] == x else x if v2p[b] == y else v2p[b]
                )
                if lookahead and dist[nx, ny] >= d:
                    continue
                key = (score(a, b, upcoming, e), e)
                if best is None or key < best:
                    best = key
            if best is None:
                raise RoutingError(f"no swap makes progress between {v2p[a]} and {v2p[b]}")
            x, y = best[1]
            out.append(Gate("swap", (x, y)))
            va, vb = p2v[x], p2v[y]
            p2v[x], p2v[y] = vb, va
            v2p[va], v2p[vb] = y, x
        out.append(op.remap(v2p))
    return out


def peephole(ops: list[Gate]) -> list[Gate]:
    """Merge rz runs, fold sx.sx into x, cancel back-to-back identical cx, drop rz(0)."""
    out: list[Gate | None] = []
    stacks: dict[int, list[int]] = {}

    def top(q: int) -> int | None:
        s = stacks.get(q)
        return s[-1] if s else None

    def drop(idx: int) -> None:
        for q in out[idx].qubits:
            stacks[q].pop()
        out[idx] = None

    def push(g: Gate) -> None:
        out.append(g)
        for q in g.qubits:
            stacks.setdefault(q, []).append(len(out) - 1)

    for op in ops:
        if op.kind == "rz":
            angle = math.remainder(op.param, _TWO_PI)
            t = top(op.qubits[0])
            if t is not None and out[t].kind == "rz":
                angle = math.remainder(out[t].param + angle, _TWO_PI)
                drop(t)
            if abs(angle) > 1e-12:
                push(Gate("rz", op.qubits, angle))
            continue
        if op.kind == "sx":
            t = top(op.qubits[0])
            if t is not None and out[t].kind == "sx":
                drop(t)
                push(Gate("x", op.qubits))
                continue
        if op.kind == "cx":
            ta, tb = top(op.qubits[0]), top(op.qubits[1])
            if ta is not None and ta == tb and out[ta] == op:
                drop(ta)
                continue
        push(op)
    return [g for g in out if g is not None]


def transpile(circuit: LogicalCircuit, device: DeviceTopology, config: CompileConfig | None = None) -> CompiledCircuit:
    config = config or CompileConfig()
    n = device.num_qubits
    if circuit.num_qubits > n:
        raise RoutingError(f"{circuit.num_qubits} virtual qubits do not fit on {device.name} ({n})")
    layout = initial_layout(device, circuit.num_qubits, config)
    ops = [g for op in circuit.ops for g in _expand(op, config.optimization_level)]
    routed = _route(ops, device, layout, config.routing_method == "lookahead")
    if config.optimization_level >= 2:
        routed = peephole(routed)
    return CompiledCircuit(device, tuple(routed), tuple(layout), circuit.num_clbits, circuit.num_qubits)
