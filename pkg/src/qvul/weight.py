"""Best-weight sweeps and the depth-binned heuristic weight model."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .calib import CalibrationSnapshot
from .circuit import CompiledCircuit

WEIGHTS = np.round(np.linspace(0.0, 1.0, 101), 2)
BIN_WIDTH = 25
EPS = 1e-3
FALLBACK_WEIGHT = 0.1


@dataclass(frozen=True)
class SweepResult:
    best_weight: float
    weights: np.ndarray
    predictions: np.ndarray
    real_sr: float

    @property
    def abs_errors(self) -> np.ndarray:
        return np.abs(self.predictions - self.real_sr)

    def to_csv(self) -> str:
        lines = ["weight,prediction,abs_error"]
        for w, p, e in zip(self.weights, self.predictions, self.abs_errors):
            lines.append(f"{w:.2f},{float(p)!r},{float(e)!r}")
        return "\n".join(lines) + "\n"


def sweep_curve(circuit: CompiledCircuit, snapshot: CalibrationSnapshot, annotations=None) -> np.ndarray:
    """1-CQV at every weight in ``WEIGHTS``."""
    from .ace import analyze
    from .estimators import cqv

    _, table, ace_map = analyze(circuit, annotations)
    curve, _ = cqv(ace_map, table, snapshot, WEIGHTS)
    return curve


def best_weight(curve: np.ndarray, real_sr: float) -> float:
    """Weight with the smallest absolute error; the smaller weight wins ties."""
    if not 0 <= real_sr <= 1:
        raise ValueError("real_sr must lie in [0, 1]")
    return float(WEIGHTS[int(np.argmin(np.abs(np.asarray(curve) - real_sr)))])


def sweep_best_weight(
    circuit: CompiledCircuit, snapshot: CalibrationSnapshot, real_sr: float, annotations=None
) -> SweepResult:
    curve = sweep_curve(circuit, snapshot, annotations)
    return SweepResult(best_weight(curve, real_sr), WEIGHTS.copy(), curve, float(real_sr))


@dataclass(frozen=True)
class Experiment:
    circuit_id: str
    depth: int
    best_weight: float

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"{self.circuit_id}: depth must be positive")
        if not 0 <= self.best_weight <= 1:
            raise ValueError(f"{self.circuit_id}: best weight outside [0, 1]")


@dataclass(frozen=True)
class DepthBin:
    lo: int
    hi: int  # inclusive
    weight: float


@dataclass(frozen=True)
class WeightModel:
    """Populated depth bins in increasing order.

    Depths falling between or outside populated bins use the nearest bin
    (the shallower one on a tie), so the model covers every depth >= 1.
    """

    depth_bins: tuple[DepthBin, ...]
    experiments: tuple[Experiment, ...] = field(default=())
    machine: str = ""
    bin_width: int = BIN_WIDTH

    def bin_for(self, depth: int) -> DepthBin:
        if not self.depth_bins:
            raise ValueError("empty weight model")

        def gap(b: DepthBin) -> int:
            return 0 if b.lo <= depth <= b.hi else (b.lo - depth if depth < b.lo else depth - b.hi)

        return min(self.depth_bins, key=lambda b: (gap(b), b.lo))

    def to_json(self) -> dict:
        return {
            "machine": self.machine,
            "bin_width": self.bin_width,
            "eps": EPS,
            "depth_bins": [{"lo": b.lo, "hi": b.hi, "weight": b.weight} for b in self.depth_bins],
            "experiments": [
                {"circuit_id": e.circuit_id, "depth": e.depth, "best_weight": e.best_weight} for e in self.experiments
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> WeightModel:
        bins = tuple(DepthBin(int(b["lo"]), int(b["hi"]), float(b["weight"])) for b in data["depth_bins"])
        exps = tuple(
            Experiment(str(e["circuit_id"]), int(e["depth"]), float(e["best_weight"])) for e in data.get("experiments", [])
        )
        return cls(bins, exps, str(data.get("machine", "")), int(data.get("bin_width", BIN_WIDTH)))


def geometric_mean(values: Sequence[float], eps: float = EPS) -> float:
    return math.exp(sum(math.log(max(v, eps)) for v in values) / len(values))


def fit(experiments: Iterable[Experiment], machine: str = "", bin_width: int = BIN_WIDTH) -> WeightModel:
    exps = tuple(experiments)
    if not exps:
        raise ValueError("cannot fit a weight model without experiments")
    groups: dict[int, list[float]] = {}
    for e in exps:
        groups.setdefault((e.depth - 1) // bin_width, []).append(e.best_weight)
    bins = tuple(
        DepthBin(k * bin_width + 1, (k + 1) * bin_width, geometric_mean(ws)) for k, ws in sorted(groups.items())
    )
    return WeightModel(bins, exps, machine, bin_width)


def choose_weight(model: WeightModel | None, depth: int) -> float:
    if model is None or not model.depth_bins:
        return FALLBACK_WEIGHT
    return model.bin_for(depth).weight


def load_model(path: str | Path) -> WeightModel:
    return WeightModel.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def save_model(model: WeightModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json(), indent=1) + "\n", encoding="utf-8")
