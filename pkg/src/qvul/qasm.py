"""OpenQASM 2.0 subset reader/writer.

Only the device basis plus ``h``, ``z`` and ``swap`` is accepted; user
``gate`` definitions are rejected rather than inlined.  Compiled circuits
carry their layout in a ``// qvul: layout=... logical=...`` comment.
"""

from __future__ import annotations

import ast
import math
import operator
import re
from typing import TYPE_CHECKING

from .circuit import CircuitError, CompiledCircuit, Gate, LogicalCircuit

if TYPE_CHECKING:
    from .topology import DeviceTopology


class QasmError(CircuitError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}" if line else message)


_GATES = {"id": 1, "x": 1, "sx": 1, "rz": 1, "h": 1, "z": 1, "cx": 2, "swap": 2}
_ALIASES = {"CX": "cx", "i": "id", "u0": "id"}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _eval_angle(expr: str) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {expr!r}")

    return ev(ast.parse(expr.strip(), mode="eval"))


_STMT = re.compile(r"[^;]*;", re.S)
_REG = re.compile(r"(qreg|creg)\s+([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$")
_ARG = re.compile(r"([A-Za-z_]\w*)\s*(?:\[\s*(\d+)\s*\])?$")
_GATE = re.compile(r"([A-Za-z_]\w*)\s*(?:\((.*)\))?\s+(.+)$", re.S)
_META = re.compile(r"//\s*qvul:\s*(.*)")


def _strip_comments(text: str) -> tuple[str, dict[str, str]]:
    meta: dict[str, str] = {}
    lines = []
    for raw in text.splitlines():
        m = _META.search(raw)
        if m:
            for item in m.group(1).split():
                key, _, value = item.partition("=")
                meta[key] = value
        idx = raw.find("//")
        # keep column positions stable by blanking the comment
        lines.append(raw if idx < 0 else raw[:idx] + " " * (len(raw) - idx))
    return "\n".join(lines), meta


def read_metadata(text: str) -> dict[str, str]:
    """Key/value pairs from ``// qvul:`` comment lines."""
    return _strip_comments(text)[1]


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def parse_qasm(text: str, device: DeviceTopology | None = None) -> LogicalCircuit | CompiledCircuit:
    """Parse OpenQASM 2.0 text.

    Returns a :class:`CompiledCircuit` when ``device`` is given, otherwise a
    :class:`LogicalCircuit`.
    """
    body, meta = _strip_comments(text)
    qregs: dict[str, tuple[int, int]] = {}
    cregs: dict[str, tuple[int, int]] = {}
    nq = nc = 0
    ops: list[Gate] = []
    seen_header = False

    last = 0
    for m in _STMT.finditer(body):
        last = m.end()
        raw = m.group(0)
        stmt = raw[:-1].strip()
        if not stmt:
            continue
        lead = len(raw) - len(raw.lstrip())
        line, col = _position(body, m.start() + lead)

        def fail(msg):
            raise QasmError(msg, line, col)

        if stmt.startswith("OPENQASM"):
            if stmt.split()[1:] != ["2.0"]:
                fail(f"unsupported version in {stmt!r}")
            seen_header = True
            continue
        if not seen_header:
            fail("missing 'OPENQASM 2.0;' header")
        if stmt.startswith("include"):
            continue
        if stmt.startswith(("gate ", "opaque ", "if", "reset")):
            fail(f"unsupported statement {stmt.split()[0]!r}")
        reg = _REG.match(stmt)
        if reg:
            kind, name, size = reg.group(1), reg.group(2), int(reg.group(3))
            if name in qregs or name in cregs:
                fail(f"register {name!r} redeclared")
            if kind == "qreg":
                qregs[name] = (nq, size)
                nq += size
            else:
                cregs[name] = (nc, size)
                nc += size
            continue

        def expand(arg: str, regs: dict[str, tuple[int, int]]) -> list[int]:
            am = _ARG.match(arg.strip())
            if not am or am.group(1) not in regs:
                fail(f"unknown register in {arg.strip()!r}")
            base, size = regs[am.group(1)]
            if am.group(2) is None:
                return list(range(base, base + size))
            idx = int(am.group(2))
            if idx >= size:
                fail(f"index {idx} out of range for {am.group(1)}[{size}]")
            return [base + idx]

        try:
            if stmt.startswith("measure"):
                src, arrow, dst = stmt[len("measure"):].partition("->")
                if not arrow:
                    fail("measure needs '->'")
                qs, cs = expand(src, qregs), expand(dst, cregs)
                if len(qs) != len(cs):
                    fail("measure register sizes differ")
                ops.extend(Gate("measure", (q,), clbit=c) for q, c in zip(qs, cs))
                continue
            if stmt.startswith("barrier"):
                qs = [q for arg in stmt[len("barrier"):].split(",") for q in expand(arg, qregs)]
                ops.append(Gate("barrier", tuple(dict.fromkeys(qs))))
                continue
            gm = _GATE.match(stmt)
            if not gm:
                fail(f"syntax error near {stmt!r}")
            name = _ALIASES.get(gm.group(1), gm.group(1))
            if name not in _GATES:
                fail(f"unsupported gate {gm.group(1)!r}")
            param = None
            if name == "rz":
                if gm.group(2) is None:
                    fail("rz needs an angle")
                try:
                    param = _eval_angle(gm.group(2))
                except (ValueError, SyntaxError, ZeroDivisionError) as exc:
                    fail(f"bad angle: {exc}")
            elif gm.group(2) is not None:
                fail(f"{name} takes no parameter")
            args = [expand(a, qregs) for a in gm.group(3).split(",")]
            if len(args) != _GATES[name]:
                fail(f"{name} takes {_GATES[name]} operand(s)")
            width = max(len(a) for a in args)
            if any(len(a) not in (1, width) for a in args):
                fail("register operands differ in size")
            for i in range(width):
                qs = tuple(a[i] if len(a) > 1 else a[0] for a in args)
                ops.append(Gate(name, qs, param))
        except QasmError:
            raise
        except CircuitError as exc:
            fail(str(exc))

    if body[last:].strip():
        line, col = _position(body, last + len(body[last:]) - len(body[last:].lstrip()))
        raise QasmError("missing ';'", line, col)
    if not seen_header:
        raise QasmError("missing 'OPENQASM 2.0;' header", 1, 1)
    if nq == 0:
        raise QasmError("no qreg declared")

    if device is None:
        return LogicalCircuit(nq, tuple(ops), nc)
    if nq != device.num_qubits:
        raise QasmError(f"circuit declares {nq} qubits but {device.name} has {device.num_qubits}")
    layout = tuple(int(x) for x in meta["layout"].split(",")) if meta.get("layout") else ()
    logical = int(meta["logical"]) if meta.get("logical") else None
    return CompiledCircuit(device, tuple(ops), layout, nc, logical)


def _fmt(op: Gate) -> str:
    if op.kind == "measure":
        return f"measure q[{op.qubits[0]}] -> c[{op.clbit}];"
    args = ",".join(f"q[{q}]" for q in op.qubits)
    if op.kind == "rz":
        return f"rz({op.param!r}) {args};"
    return f"{op.kind} {args};"


def serialize_qasm(circuit: LogicalCircuit | CompiledCircuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";']
    if isinstance(circuit, CompiledCircuit):
        meta = "layout=" + ",".join(map(str, circuit.initial_layout))
        if circuit.num_logical is not None:
            meta += f" logical={circuit.num_logical}"
        lines.append(f"// qvul: {meta} device={circuit.device.name}")
    lines.append(f"qreg q[{circuit.num_qubits}];")
    if circuit.num_clbits:
        lines.append(f"creg c[{circuit.num_clbits}];")
    lines.extend(_fmt(op) for op in circuit.ops)
    return "\n".join(lines) + "\n"
