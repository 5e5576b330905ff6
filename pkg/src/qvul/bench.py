"""Benchmark circuits with a single, classically known correct output.

Controlled phases are emitted already decomposed into ``rz``/``cx`` so every
benchmark stays inside the supported gate set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .circuit import Gate, LogicalCircuit

NAMES = ("BV", "DJ", "QFT", "QPE")
MIN_SIZE, MAX_SIZE = 2, 16
# Scaling studies go beyond desk scale; those circuits are never simulated.
LARGE_MAX_SIZE = 512


class BenchmarkError(ValueError):
    pass


@dataclass(frozen=True)
class BenchmarkSpec:
    """One benchmark instance.

    ``secret`` is the BV hidden string, the DJ balanced mask, or the QFT input
    value, written most-significant bit first (``"101"`` sets qubits 0 and 2).
    ``oracle`` selects the DJ oracle (``"balanced"``, ``"constant0"``,
    ``"constant1"``).  ``phase`` is the QPE eigenphase, a dyadic fraction.
    """

    name: str
    size: int
    secret: str | None = None
    oracle: str = "balanced"
    inverse: bool = False
    phase: Fraction | None = None
    large: bool = False

    def __post_init__(self):
        name = self.name.upper()
        object.__setattr__(self, "name", name)
        if name not in NAMES:
            raise BenchmarkError(f"unknown benchmark {self.name!r}")
        top = LARGE_MAX_SIZE if self.large else MAX_SIZE
        if not MIN_SIZE <= self.size <= top:
            raise BenchmarkError(f"size {self.size} outside {MIN_SIZE}..{top}")
        if name == "DJ" and self.oracle not in ("balanced", "constant0", "constant1"):
            raise BenchmarkError(f"unknown DJ oracle {self.oracle!r}")
        if self.secret is not None:
            width = self.size if name == "QFT" else self.size - 1
            if len(self.secret) != width or set(self.secret) - {"0", "1"}:
                raise BenchmarkError(f"{name}_{self.size} needs a {width}-bit secret, got {self.secret!r}")
            if name == "DJ" and self.oracle == "balanced" and "1" not in self.secret:
                raise BenchmarkError("a balanced DJ mask needs at least one set bit")
        if self.phase is not None:
            phase = Fraction(self.phase)
            object.__setattr__(self, "phase", phase)
            if name != "QPE":
                raise BenchmarkError("phase only applies to QPE")
            m = self.size - 1
            if not 0 <= phase < 1 or (phase * 2**m).denominator != 1:
                raise BenchmarkError(f"phase {phase} is not a {m}-bit dyadic fraction")

    @property
    def label(self) -> str:
        return f"{self.name}_{self.size}"

    @property
    def assisting_qubits(self) -> int:
        return 1 if self.name in ("BV", "DJ") else 0


def _default_bits(width: int) -> str:
    return ("10" * width)[:width]


def _secret(spec: BenchmarkSpec) -> str:
    width = spec.size if spec.name == "QFT" else spec.size - 1
    if spec.secret is not None:
        return spec.secret
    if spec.name == "DJ" and spec.oracle != "balanced":
        return "0" * width
    return _default_bits(width)


def _phase(spec: BenchmarkSpec) -> Fraction:
    if spec.phase is not None:
        return spec.phase
    m = spec.size - 1
    return Fraction(int(_default_bits(m), 2), 2**m)


def cphase(theta: float, a: int, b: int) -> list[Gate]:
    """Controlled phase, up to global phase."""
    return [
        Gate("rz", (a,), theta / 2),
        Gate("cx", (a, b)),
        Gate("rz", (b,), -theta / 2),
        Gate("cx", (a, b)),
        Gate("rz", (b,), theta / 2),
    ]


def qft_ops(qubits: list[int], inverse: bool = False) -> list[Gate]:
    """Fourier transform without the final qubit reversal.

    ``qubits[0]`` is the least significant bit; the forward transform leaves
    qubit ``qubits[j]`` with relative phase ``2*pi*x/2**(j+1)`` for input x.
    """
    n = len(qubits)
    blocks: list[list[Gate]] = []
    for j in reversed(range(n)):
        blocks.append([Gate("h", (qubits[j],))])
        for k in reversed(range(j)):
            blocks.append(cphase(math.pi / 2 ** (j - k), qubits[k], qubits[j]))
    if not inverse:
        return [g for blk in blocks for g in blk]
    out: list[Gate] = []
    for blk in reversed(blocks):
        for g in reversed(blk):
            out.append(Gate("rz", g.qubits, -g.param) if g.kind == "rz" else g)
    return out


def _bv_dj(spec: BenchmarkSpec) -> LogicalCircuit:
    n = spec.size - 1
    anc = n
    ops: list[Gate] = [Gate("x", (anc,)), Gate("h", (anc,))]
    ops += [Gate("h", (q,)) for q in range(n)]
    ops.append(Gate("barrier", tuple(range(spec.size))))
    if spec.name == "DJ" and spec.oracle == "constant1":
        ops.append(Gate("x", (anc,)))
    elif spec.name == "BV" or spec.oracle == "balanced":
        mask = int(_secret(spec), 2)
        ops += [Gate("cx", (q, anc)) for q in range(n) if mask >> q & 1]
    ops.append(Gate("barrier", tuple(range(spec.size))))
    ops += [Gate("h", (q,)) for q in range(n)]
    ops += [Gate("measure", (q,), clbit=q) for q in range(n)]
    return LogicalCircuit(spec.size, tuple(ops), n)


def _qft(spec: BenchmarkSpec) -> LogicalCircuit:
    n = spec.size
    bits = _secret(spec)
    x = int(bits, 2)
    xr = int(bits[::-1], 2)  # the forward transform leaves its output bit-reversed
    qubits = list(range(n))
    ops: list[Gate] = []
    # Product-state preparation of the transform's preimage, then the transform.
    for j in range(n):
        if spec.inverse:
            angle = 2 * math.pi * x / 2 ** (j + 1)
        else:
            angle = -2 * math.pi * ((xr << j) % 2**n) / 2**n
        ops.append(Gate("h", (j,)))
        ops.append(Gate("rz", (j,), math.remainder(angle, 2 * math.pi)))
    ops.append(Gate("barrier", tuple(qubits)))
    ops += qft_ops(qubits, inverse=spec.inverse)
    ops += [Gate("measure", (q,), clbit=q) for q in qubits]
    return LogicalCircuit(n, tuple(ops), n)


def _qpe(spec: BenchmarkSpec) -> LogicalCircuit:
    m = spec.size - 1
    target = m
    phase = _phase(spec)
    ops: list[Gate] = [Gate("x", (target,))]
    ops += [Gate("h", (k,)) for k in range(m)]
    for k in range(m):
        theta = math.remainder(2 * math.pi * float(phase * 2**k), 2 * math.pi)
        ops += cphase(theta, k, target)
    ops.append(Gate("barrier", tuple(range(spec.size))))
    ops += qft_ops(list(reversed(range(m))), inverse=True)
    # the inverse transform leaves counting qubit m-1 as the least significant bit
    ops += [Gate("measure", (k,), clbit=m - 1 - k) for k in range(m)]
    ops.append(Gate("measure", (target,), clbit=m))
    return LogicalCircuit(spec.size, tuple(ops), spec.size)


def generate(spec: BenchmarkSpec) -> LogicalCircuit:
    if spec.name in ("BV", "DJ"):
        return _bv_dj(spec)
    if spec.name == "QFT":
        return _qft(spec)
    return _qpe(spec)


def correct_output(spec: BenchmarkSpec) -> str:
    """The unique correct bit string, classical bit 0 rightmost."""
    if spec.name == "BV":
        return _secret(spec)
    if spec.name == "DJ":
        return _secret(spec) if spec.oracle == "balanced" else "0" * (spec.size - 1)
    if spec.name == "QFT":
        return _secret(spec)
    m = spec.size - 1
    y = int(_phase(spec) * 2**m)
    return "1" + format(y, f"0{m}b")
