"""Device calibration snapshots and per-gate success rates.

JSON schema::

    {"date": "2022-04-12",
     "qubits": [{"id": 0, "errors": {"x": .., "sx": .., "rz": .., "id": ..}, "meas": ..}, ...],
     "edges": [{"pair": [0, 1], "cx": ..}, ...],
     "crosstalk": [{"edge": [a, b], "victim_edge": [c, d], "multiplier": ..}, ...]}

``crosstalk`` is optional.  A victim cx loses ``1 - multiplier`` of its
success rate whenever a cx runs on the aggressor ``edge`` in the same cycle.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .circuit import Gate
from .topology import DeviceTopology

log = logging.getLogger(__name__)

SQ_KINDS = ("id", "x", "sx", "rz")
# Gates outside the device basis borrow a basis gate's error.
SQ_FALLBACK = {"h": "sx", "z": "rz", "id": "id", "x": "x", "sx": "sx", "rz": "rz"}

Edge = tuple[int, int]


class CalibrationError(ValueError):
    pass


def _edge(pair: Iterable[int]) -> Edge:
    a, b = (int(x) for x in pair)
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=False)
class CalibrationSnapshot:
    """Immutable error-rate table for one device on one date.

    ``sq`` has one row per physical qubit and one column per ``SQ_KINDS``.
    """

    date: str
    sq: np.ndarray
    meas: np.ndarray
    cx: Mapping[Edge, float]
    crosstalk: Mapping[tuple[Edge, Edge], float] = field(default_factory=dict)

    def __post_init__(self):
        sq = np.array(self.sq, dtype=float).reshape(-1, len(SQ_KINDS))
        meas = np.array(self.meas, dtype=float).reshape(-1)
        sq.setflags(write=False)
        meas.setflags(write=False)
        object.__setattr__(self, "sq", sq)
        object.__setattr__(self, "meas", meas)
        object.__setattr__(self, "cx", {_edge(e): float(v) for e, v in self.cx.items()})
        object.__setattr__(
            self, "crosstalk", {(_edge(a), _edge(v)): float(m) for (a, v), m in self.crosstalk.items()}
        )
        if len(meas) != len(sq):
            raise CalibrationError("measurement and gate tables cover different qubit counts")
        for label, values in (("gate", sq.ravel()), ("measurement", meas), ("cx", list(self.cx.values()))):
            arr = np.asarray(values, dtype=float)
            if arr.size and not (np.all(np.isfinite(arr)) and arr.min() >= 0 and arr.max() < 1):
                raise CalibrationError(f"{label} error rates must lie in [0, 1)")
        for (a, v), m in self.crosstalk.items():
            if not 0 < m <= 1:
                raise CalibrationError(f"crosstalk multiplier {m} for {a}->{v} outside (0, 1]")
            if a == v:
                raise CalibrationError(f"crosstalk edge {a} paired with itself")
            for e in (a, v):
                if e not in self.cx:
                    raise CalibrationError(f"crosstalk references uncalibrated edge {e}")

    @property
    def num_qubits(self) -> int:
        return len(self.meas)

    def sq_error(self, kind: str, qubit: int) -> float:
        return float(self.sq[qubit, SQ_KINDS.index(SQ_FALLBACK[kind])])

    def cx_error(self, a: int, b: int) -> float:
        try:
            return self.cx[_edge((a, b))]
        except KeyError:
            raise CalibrationError(f"no cx calibration for edge ({a},{b})") from None

    def gate_error(self, gate: Gate) -> float:
        """Error of a single occurrence, ignoring crosstalk.  A swap counts as three cx."""
        if gate.kind == "barrier":
            return 0.0
        if gate.kind == "measure":
            return float(self.meas[gate.qubits[0]])
        if gate.kind == "cx":
            return self.cx_error(*gate.qubits)
        if gate.kind == "swap":
            return 1.0 - (1.0 - self.cx_error(*gate.qubits)) ** 3
        return self.sq_error(gate.kind, gate.qubits[0])

    def victim_multiplier(self, edge: Edge, simultaneous: Iterable[Edge]) -> float:
        m = 1.0
        for other in simultaneous:
            m *= self.crosstalk.get((_edge(other), edge), 1.0)
        return m

    def check_device(self, device: DeviceTopology) -> None:
        if self.num_qubits != device.num_qubits:
            raise CalibrationError(
                f"calibration covers {self.num_qubits} qubits, {device.name} has {device.num_qubits}"
            )
        missing = sorted(device.coupling_edges - set(self.cx))
        if missing:
            raise CalibrationError(f"missing cx calibration for edges {missing[:5]}")
        extra = sorted(set(self.cx) - device.coupling_edges)
        if extra:
            raise CalibrationError(f"cx calibration for non-edges {extra[:5]}")

    def scaled(self, factor: float) -> CalibrationSnapshot:
        """Every error rate (crosstalk penalties included) multiplied by ``factor``."""
        return CalibrationSnapshot(
            self.date,
            self.sq * factor,
            self.meas * factor,
            {e: v * factor for e, v in self.cx.items()},
            {k: 1.0 - (1.0 - m) * factor for k, m in self.crosstalk.items()},
        )

    def to_json(self) -> dict:
        return {
            "date": self.date,
            "qubits": [
                {"id": q, "errors": {k: float(self.sq[q, i]) for i, k in enumerate(SQ_KINDS)}, "meas": float(self.meas[q])}
                for q in range(self.num_qubits)
            ],
            "edges": [{"pair": list(e), "cx": v} for e, v in sorted(self.cx.items())],
            "crosstalk": [
                {"edge": list(a), "victim_edge": list(v), "multiplier": m} for (a, v), m in sorted(self.crosstalk.items())
            ],
        }


def gate_success(snapshot: CalibrationSnapshot, gate: Gate, cycle_context: Iterable[Gate] = ()) -> float:
    """Success probability of ``gate``; ``cycle_context`` lists the gates sharing its cycle."""
    s = 1.0 - snapshot.gate_error(gate)
    if gate.kind == "cx":
        me = _edge(gate.qubits)
        others = [_edge(g.qubits) for g in cycle_context if g.kind == "cx" and _edge(g.qubits) != me]
        s *= snapshot.victim_multiplier(me, others)
    return s


def _adjacent(device: DeviceTopology, e1: Edge, e2: Edge) -> bool:
    d = device.distances
    return min(d[a, b] for a in e1 for b in e2) <= 1


def from_json(data: dict, device: DeviceTopology | None = None) -> CalibrationSnapshot:
    try:
        date = str(data["date"])
        dt.date.fromisoformat(date)
        qubits = data["qubits"]
        edges = data["edges"]
        xtalk = data.get("crosstalk", [])
        if not isinstance(qubits, list) or not isinstance(edges, list) or not isinstance(xtalk, list):
            raise TypeError("qubits, edges and crosstalk must be lists")
        n = device.num_qubits if device is not None else len(qubits)
        sq = np.full((n, len(SQ_KINDS)), np.nan)
        meas = np.full(n, np.nan)
        for entry in qubits:
            q = int(entry["id"])
            if not 0 <= q < n:
                raise CalibrationError(f"unknown qubit {q}")
            errors = entry.get("errors", {})
            for k, v in errors.items():
                if k not in SQ_KINDS:
                    raise CalibrationError(f"unknown gate kind {k!r} for qubit {q}")
                sq[q, SQ_KINDS.index(k)] = float(v)
            if "meas" in entry:
                meas[q] = float(entry["meas"])
        cx: dict[Edge, float] = {}
        for entry in edges:
            e = _edge(entry["pair"])
            if device is not None and e not in device.coupling_edges:
                raise CalibrationError(f"unknown edge {e}")
            if not all(0 <= x < n for x in e):
                raise CalibrationError(f"edge {e} references a missing qubit")
            cx[e] = float(entry["cx"])
        ct: dict[tuple[Edge, Edge], float] = {}
        for entry in xtalk:
            a, v = _edge(entry["edge"]), _edge(entry["victim_edge"])
            if device is not None and not _adjacent(device, a, v):
                raise CalibrationError(f"crosstalk pair {a}->{v} is not physically adjacent")
            ct[(a, v)] = float(entry["multiplier"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CalibrationError):
            raise
        raise CalibrationError(f"calibration schema violation: {exc}") from None

    # Fill gaps from device-wide averages.
    for i, kind in enumerate(SQ_KINDS):
        col = sq[:, i]
        gaps = np.isnan(col)
        if gaps.any():
            fill = float(np.nanmean(col)) if (~gaps).any() else 0.0
            if kind != "id" or (~gaps).any():
                log.warning("filling %d missing %s error(s) with %.3g", int(gaps.sum()), kind, fill)
            col[gaps] = fill
    gaps = np.isnan(meas)
    if gaps.any():
        if gaps.all():
            raise CalibrationError("no measurement errors given")
        fill = float(np.nanmean(meas))
        log.warning("filling %d missing measurement error(s) with %.3g", int(gaps.sum()), fill)
        meas[gaps] = fill
    if device is not None:
        missing = sorted(device.coupling_edges - set(cx))
        if missing:
            if not cx:
                raise CalibrationError("no cx errors given")
            fill = float(np.mean(list(cx.values())))
            log.warning("filling %d missing cx error(s) with %.3g", len(missing), fill)
            cx.update({e: fill for e in missing})
    return CalibrationSnapshot(date, sq, meas, cx, ct)


def load(path: str | Path, device: DeviceTopology | None = None) -> CalibrationSnapshot:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"{path}: invalid JSON: {exc}") from None
    return from_json(data, device)


def save(snapshot: CalibrationSnapshot, path: str | Path) -> None:
    Path(path).write_text(json.dumps(snapshot.to_json(), indent=1) + "\n", encoding="utf-8")


# Device-wide averages of a 27-qubit heavy-hex machine.
MONTREAL_AVERAGES = {"sq": 5.04e-4, "meas": 3.05e-2, "cx": 2.11e-2}


def uniform(
    device: DeviceTopology,
    sq: float = MONTREAL_AVERAGES["sq"],
    meas: float = MONTREAL_AVERAGES["meas"],
    cx: float = MONTREAL_AVERAGES["cx"],
    rz: float = 0.0,
    idle: float = 0.0,
    date: str = "2022-04-12",
) -> CalibrationSnapshot:
    n = device.num_qubits
    table = np.tile([idle, sq, sq, rz], (n, 1))
    return CalibrationSnapshot(date, table, np.full(n, meas), {e: cx for e in device.coupling_edges})


def synthetic(
    device: DeviceTopology,
    seed: int,
    scale: float = 1.0,
    spread: float = 0.3,
    idle: float = 0.0,
    crosstalk: float = 0.0,
    date: str = "2022-04-12",
) -> CalibrationSnapshot:
    """Uniform averages with seeded log-normal per-qubit variation.

    ``crosstalk`` is the success penalty applied between every pair of
    distinct edges within distance one (0 disables crosstalk).
    """
    rng = np.random.default_rng(seed)
    n = device.num_qubits
    avg = MONTREAL_AVERAGES

    def vary(mean, size):
        return np.clip(mean * scale * rng.lognormal(-spread**2 / 2, spread, size), 0.0, 0.5)

    sq = vary(avg["sq"], n)
    edges = sorted(device.coupling_edges)
    cx = dict(zip(edges, vary(avg["cx"], len(edges))))
    meas = vary(avg["meas"], n)
    # drawn last so the idle level never shifts the other rates
    id_err = vary(idle, n) if idle else np.zeros(n)
    table = np.column_stack([id_err, sq, sq, np.zeros(n)])
    ct = {}
    if crosstalk:
        for a in edges:
            for v in edges:
                if a != v and not set(a) & set(v) and _adjacent(device, a, v):
                    ct[(a, v)] = 1.0 - min(crosstalk * scale, 0.5)
    return CalibrationSnapshot(date, table, meas, cx, ct)
