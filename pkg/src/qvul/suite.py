"""Oracle-evaluated comparison suites.

Manifest JSON::

    {"device": "grid-3x3",
     "calibration": {"synthetic": {"seed": 7, "idle": 0.004, "crosstalk": 0.02}}
                    | {"path": "calib.json"},
     "shots": 8192, "seed": 1,
     "weight": 0.1 | "model": "model.json",
     "circuits": [{"bench": "QFT", "size": 5, "layout": "dense", "routing": "lookahead",
                   "opt": 1, "seed": 0, "scale": 2.0},
                  {"qasm": "f.qasm", "correct": "0101"}]}

``scale`` multiplies every error rate of the calibration for that circuit.
Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import calib
from .bench import BenchmarkSpec, correct_output, generate
from .calib import CalibrationSnapshot
from .circuit import CompiledCircuit
from .estimators import esp
from .oracle import SrResult, default_workers, run_fault_injection
from .qasm import parse_qasm
from .topology import DeviceTopology, load_topology, resolve
from .transpile import CompileConfig, transpile
from .weight import WEIGHTS, WeightModel, best_weight, choose_weight, sweep_curve


class SuiteError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SuiteCase:
    case_id: str
    circuit: CompiledCircuit
    snapshot: CalibrationSnapshot
    correct: str


@dataclass(frozen=True, eq=False)
class CaseResult:
    case_id: str
    depth: int
    cx_count: int
    oracle: SrResult
    esp: float
    curve: np.ndarray  # 1-CQV over WEIGHTS
    case: SuiteCase

    @property
    def sr(self) -> float:
        return self.oracle.sr

    @property
    def best_weight(self) -> float:
        return best_weight(self.curve, self.sr)

    def cqv_at(self, w: float) -> float:
        k = int(round(w * 100))
        if abs(w - WEIGHTS[k]) < 1e-12:
            return float(self.curve[k])
        from .estimators import estimate

        return estimate(self.case.circuit, self.case.snapshot, w).one_minus_cqv


@dataclass(frozen=True)
class ComparisonRow:
    case_id: str
    depth: int
    sr: float
    ci_low: float
    ci_high: float
    esp: float
    weight: float
    one_minus_cqv: float

    @property
    def esp_abs(self) -> float:
        return abs(self.esp - self.sr)

    @property
    def cqv_abs(self) -> float:
        return abs(self.one_minus_cqv - self.sr)

    @property
    def esp_rel(self) -> float:
        return self.esp_abs / self.sr if self.sr > 0 else float("inf")

    @property
    def cqv_rel(self) -> float:
        return self.cqv_abs / self.sr if self.sr > 0 else float("inf")

    @property
    def ambiguous(self) -> bool:
        """Both predictions fall inside the oracle's confidence interval."""
        return all(self.ci_low <= p <= self.ci_high for p in (self.esp, self.one_minus_cqv))

    def to_json(self) -> dict:
        return {
            "id": self.case_id,
            "depth": self.depth,
            "sr": self.sr,
            "ci95": [self.ci_low, self.ci_high],
            "esp": self.esp,
            "weight": self.weight,
            "one_minus_cqv": self.one_minus_cqv,
            "esp_abs_error": self.esp_abs,
            "cqv_abs_error": self.cqv_abs,
            "esp_rel_error": self.esp_rel,
            "cqv_rel_error": self.cqv_rel,
        }


def evaluate_case(case: SuiteCase, shots: int, seed: int, workers: int = 1) -> CaseResult:
    from .cycles import schedule

    sr = run_fault_injection(case.circuit, case.snapshot, shots, seed, case.correct, workers=workers)
    return CaseResult(
        case.case_id,
        schedule(case.circuit).depth,
        case.circuit.cx_count(),
        sr,
        esp(case.circuit, case.snapshot),
        sweep_curve(case.circuit, case.snapshot),
        case,
    )


def evaluate(cases: Sequence[SuiteCase], shots: int, seed: int, workers: int | None = None) -> list[CaseResult]:
    """Evaluate cases in parallel; results come back in input order."""
    workers = workers or default_workers()
    if workers > 1 and len(cases) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda c: evaluate_case(c, shots, seed), cases))
    return [evaluate_case(c, shots, seed) for c in cases]


def compare(results: Sequence[CaseResult], weight_for: Callable[[CaseResult], float]) -> list[ComparisonRow]:
    rows = []
    for r in results:
        w = weight_for(r)
        rows.append(
            ComparisonRow(r.case_id, r.depth, r.sr, r.oracle.ci_low, r.oracle.ci_high, r.esp, w, r.cqv_at(w))
        )
    return rows


def aggregate(rows: Sequence[ComparisonRow]) -> dict:
    if not rows:
        return {"count": 0}
    finite = [r for r in rows if r.sr > 0]
    mean = lambda xs: float(np.mean(xs)) if xs else float("nan")  # noqa: E731
    return {
        "count": len(rows),
        "esp_abs_error": mean([r.esp_abs for r in rows]),
        "cqv_abs_error": mean([r.cqv_abs for r in rows]),
        "esp_rel_error": mean([r.esp_rel for r in finite]),
        "cqv_rel_error": mean([r.cqv_rel for r in finite]),
        "cqv_wins": sum(r.cqv_rel < r.esp_rel for r in finite),
    }


def rows_csv(rows: Sequence[ComparisonRow]) -> str:
    cols = ["id", "depth", "sr", "esp", "weight", "one_minus_cqv", "esp_abs_error", "cqv_abs_error", "esp_rel_error", "cqv_rel_error"]
    lines = [",".join(cols)]
    for r in rows:
        d = r.to_json()
        lines.append(",".join(str(d[c]) for c in cols))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- manifests


def _snapshot(spec: dict, device: DeviceTopology, base: Path) -> CalibrationSnapshot:
    if "path" in spec:
        snap = calib.load(base / spec["path"], device)
    elif "synthetic" in spec:
        snap = calib.synthetic(device, **spec["synthetic"])
    elif "uniform" in spec:
        snap = calib.uniform(device, **spec["uniform"])
    else:
        raise SuiteError("calibration needs 'path', 'synthetic' or 'uniform'")
    snap.check_device(device)
    return snap


def load_cases(manifest: dict, base: Path = Path(".")) -> list[SuiteCase]:
    try:
        name = str(manifest["device"])
        device = load_topology(base / name) if name.endswith(".json") else resolve(name)
    except (KeyError, ValueError, OSError) as exc:
        raise SuiteError(f"bad device: {exc}") from None
    snap = _snapshot(manifest.get("calibration", {"uniform": {}}), device, base)
    cases = []
    for k, entry in enumerate(manifest.get("circuits", [])):
        scale = float(entry.get("scale", 1.0))
        s = snap if scale == 1.0 else snap.scaled(scale)
        if "bench" in entry:
            spec = BenchmarkSpec(entry["bench"], int(entry["size"]), entry.get("secret"), entry.get("oracle", "balanced"),
                                 bool(entry.get("inverse", False)))
            cfg = CompileConfig(entry.get("layout", "trivial"), entry.get("routing", "greedy_nearest"),
                                int(entry.get("opt", 1)), int(entry.get("seed", 0)))
            circuit = transpile(generate(spec), device, cfg)
            correct = correct_output(spec)
            cid = entry.get("id", f"{spec.label}/{cfg.label}/x{scale:g}")
        elif "qasm" in entry:
            circuit = parse_qasm((base / entry["qasm"]).read_text(encoding="utf-8"), device)
            correct = str(entry["correct"])
            cid = entry.get("id", f"{entry['qasm']}/x{scale:g}")
        else:
            raise SuiteError(f"circuit entry {k} needs 'bench' or 'qasm'")
        cases.append(SuiteCase(cid, circuit, s, correct))
    if not cases:
        raise SuiteError("suite lists no circuits")
    return cases


def weight_rule(manifest: dict, base: Path = Path(".")) -> Callable[[CaseResult], float]:
    if "model" in manifest:
        from .weight import load_model

        model: WeightModel | None = load_model(base / manifest["model"])
        return lambda r: choose_weight(model, r.depth)
    w = float(manifest.get("weight", 0.1))
    if not 0 <= w <= 1:
        raise SuiteError("weight must lie in [0, 1]")
    return lambda r: w


def load_manifest(path: str | Path) -> tuple[dict, Path]:
    p = Path(path)
    return json.loads(p.read_text(encoding="utf-8")), p.parent
