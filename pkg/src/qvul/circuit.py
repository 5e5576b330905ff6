"""Circuit IR: gates, logical and compiled circuits, virtual-qubit classes."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .topology import DeviceTopology

ONE_QUBIT_KINDS = frozenset({"id", "x", "sx", "rz", "h", "z"})
TWO_QUBIT_KINDS = frozenset({"cx", "swap"})
KINDS = ONE_QUBIT_KINDS | TWO_QUBIT_KINDS | {"measure", "barrier"}

# h and z survive only at optimization level 0; swap is a pre-decomposition marker.
COMPILED_KINDS = frozenset({"id", "x", "sx", "rz", "cx", "measure", "barrier", "swap", "h", "z"})

# Ops that never change a qubit's state.
TRIVIAL_KINDS = frozenset({"id", "barrier"})


class CircuitError(ValueError):
    """Structurally invalid circuit or gate."""


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    param: float | None = None
    clbit: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CircuitError(f"unsupported gate {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        n = len(self.qubits)
        if self.kind in ONE_QUBIT_KINDS or self.kind == "measure":
            if n != 1:
                raise CircuitError(f"{self.kind} takes one qubit, got {n}")
        elif self.kind in TWO_QUBIT_KINDS:
            if n != 2:
                raise CircuitError(f"{self.kind} takes two qubits, got {n}")
            if self.qubits[0] == self.qubits[1]:
                raise CircuitError(f"{self.kind} has duplicate operands {self.qubits}")
        elif self.kind == "barrier":
            if n == 0 or len(set(self.qubits)) != n:
                raise CircuitError("barrier needs distinct qubits")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {self.qubits}")
        if self.kind == "rz":
            if self.param is None or not math.isfinite(self.param):
                raise CircuitError("rz needs a finite angle")
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise CircuitError(f"{self.kind} takes no parameter")
        if self.kind == "measure":
            if self.clbit is None or self.clbit < 0:
                raise CircuitError("measure needs a classical bit")
        elif self.clbit is not None:
            raise CircuitError(f"{self.kind} writes no classical bit")

    @property
    def is_trivial(self) -> bool:
        return self.kind in TRIVIAL_KINDS

    def remap(self, mapping: Sequence[int] | dict[int, int]) -> Gate:
        return Gate(self.kind, tuple(mapping[q] for q in self.qubits), self.param, self.clbit)

    def __str__(self):
        args = ",".join(f"q[{q}]" for q in self.qubits)
        if self.kind == "measure":
            return f"measure {args} -> c[{self.clbit}]"
        if self.kind == "rz":
            return f"rz({self.param!r}) {args}"
        return f"{self.kind} {args}"


def _check_ops(ops: Sequence[Gate], num_qubits: int, num_clbits: int) -> None:
    for op in ops:
        for q in op.qubits:
            if q >= num_qubits:
                raise CircuitError(f"{op}: qubit {q} out of range (n={num_qubits})")
        if op.clbit is not None and op.clbit >= num_clbits:
            raise CircuitError(f"{op}: classical bit out of range (m={num_clbits})")


@dataclass(frozen=True)
class LogicalCircuit:
    """Circuit over virtual qubits, written as if all qubits were connected."""

    num_qubits: int
    ops: tuple[Gate, ...]
    num_clbits: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.num_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")
        _check_ops(self.ops, self.num_qubits, self.num_clbits)

    @property
    def num_virtual_qubits(self) -> int:
        return self.num_qubits

    def count_ops(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for op in self.ops:
            counts[op.kind] = counts.get(op.kind, 0) + 1
        return counts


@dataclass(frozen=True)
class CompiledCircuit:
    """Circuit over the physical qubits of ``device``.

    ``initial_layout[v]`` is the physical qubit hosting virtual qubit ``v`` at
    the start.  Virtual qubits ``< num_logical`` come from the logical circuit;
    the rest are ancillas added by the compiler.  ``num_logical=None`` means
    the split is unknown (e.g. a QASM file without layout metadata).
    """

    device: DeviceTopology
    ops: tuple[Gate, ...]
    initial_layout: tuple[int, ...] = ()
    num_clbits: int = 0
    num_logical: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        n = self.device.num_qubits
        layout = tuple(self.initial_layout) or tuple(range(n))
        object.__setattr__(self, "initial_layout", layout)
        if sorted(layout) != list(range(n)):
            raise CircuitError("initial_layout must be a permutation of the physical qubits")
        if self.num_logical is not None and not 0 <= self.num_logical <= n:
            raise CircuitError("num_logical out of range")
        _check_ops(self.ops, n, self.num_clbits)
        for op in self.ops:
            if op.kind not in COMPILED_KINDS:
                raise CircuitError(f"{op.kind} is not a device basis gate")
            if op.kind in TWO_QUBIT_KINDS and not self.device.has_edge(*op.qubits):
                raise CircuitError(f"{op}: ({op.qubits[0]},{op.qubits[1]}) is not a coupling edge")

    @property
    def num_qubits(self) -> int:
        return self.device.num_qubits

    @property
    def num_output_bits(self) -> int:
        return self.num_clbits

    def count_ops(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for op in self.ops:
            counts[op.kind] = counts.get(op.kind, 0) + 1
        return counts

    def cx_count(self) -> int:
        """CNOTs after swap decomposition."""
        counts = self.count_ops()
        return counts.get("cx", 0) + 3 * counts.get("swap", 0)

    def virtual_names(self) -> tuple[str, ...]:
        n = self.num_qubits
        if self.num_logical is None:
            return tuple(f"q{v}" for v in range(n))
        return tuple(
            f"q{v}" if v < self.num_logical else f"a{v - self.num_logical}" for v in range(n)
        )


def decompose_swap(op: Gate) -> tuple[Gate, Gate, Gate]:
    a, b = op.qubits
    return Gate("cx", (a, b)), Gate("cx", (b, a)), Gate("cx", (a, b))


@dataclass(frozen=True)
class NormalizedOps:
    """Op list with swaps expanded into three cx.

    ``swap_group[i]`` is the index of the originating swap (counted among the
    swaps of the input) or -1.
    """

    ops: tuple[Gate, ...]
    swap_group: tuple[int, ...]

    @property
    def num_swaps(self) -> int:
        return max(self.swap_group, default=-1) + 1


def normalize(ops: Iterable[Gate]) -> NormalizedOps:
    out: list[Gate] = []
    group: list[int] = []
    nswap = 0
    for op in ops:
        if op.kind == "swap":
            out.extend(decompose_swap(op))
            group.extend([nswap] * 3)
            nswap += 1
        else:
            out.append(op)
            group.append(-1)
    return NormalizedOps(tuple(out), tuple(group))


class QubitClass(enum.Enum):
    OUTPUTTING = "OutputtingLogical"
    ASSISTING = "AssistingLogical"
    USED_ANCILLA = "UsedAncilla"
    UNUSED_ANCILLA = "UnusedAncilla"


@dataclass(frozen=True)
class VirtualQubitClass:
    classes: tuple[QubitClass, ...]
    names: tuple[str, ...] = field(default=())

    def __getitem__(self, v: int) -> QubitClass:
        return self.classes[v]

    def __len__(self):
        return len(self.classes)

    def counts(self) -> dict[QubitClass, int]:
        out = {c: 0 for c in QubitClass}
        for c in self.classes:
            out[c] += 1
        return out

    def outputting(self) -> tuple[int, ...]:
        return tuple(v for v, c in enumerate(self.classes) if c is QubitClass.OUTPUTTING)

    def used(self) -> tuple[int, ...]:
        return tuple(v for v, c in enumerate(self.classes) if c is not QubitClass.UNUSED_ANCILLA)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown virtual qubit {name!r}") from None


def classify_virtual_qubits(circuit: CompiledCircuit) -> VirtualQubitClass:
    n = circuit.num_qubits
    p2v = [0] * n
    for v, p in enumerate(circuit.initial_layout):
        p2v[p] = v
    measured = [False] * n
    touched = [False] * n
    for op in circuit.ops:
        vs = [p2v[q] for q in op.qubits]
        if op.kind == "measure":
            measured[vs[0]] = True
        if not op.is_trivial:
            for v in vs:
                touched[v] = True
        if op.kind == "swap":
            a, b = op.qubits
            p2v[a], p2v[b] = p2v[b], p2v[a]
    classes = []
    for v in range(n):
        if measured[v]:
            classes.append(QubitClass.OUTPUTTING)
        elif not touched[v]:
            classes.append(QubitClass.UNUSED_ANCILLA)
        elif circuit.num_logical is None or v < circuit.num_logical:
            classes.append(QubitClass.ASSISTING)
        else:
            classes.append(QubitClass.USED_ANCILLA)
    return VirtualQubitClass(tuple(classes), circuit.virtual_names())
