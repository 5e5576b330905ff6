"""Static vulnerability analysis and success-rate estimation for compiled quantum circuits."""

from __future__ import annotations

__version__ = "0.1.0"

from .ace import AceMap, analyze, mark_unace
from .bench import BenchmarkSpec, correct_output, generate
from .calib import CalibrationSnapshot
from .circuit import CompiledCircuit, Gate, LogicalCircuit
from .cycles import BookingTable, CycleSchedule, build_booking_table, schedule
from .estimators import EstimateReport, cqv, esp, estimate, qvf
from .oracle import SrResult, inject_at, run_fault_injection, simulate_noiseless
from .qasm import parse_qasm, serialize_qasm
from .topology import DeviceTopology
from .transpile import CompileConfig, transpile
from .weight import WeightModel, choose_weight, fit, sweep_best_weight

__all__ = [
    "AceMap", "BenchmarkSpec", "BookingTable", "CalibrationSnapshot", "CompileConfig", "CompiledCircuit",
    "CycleSchedule", "DeviceTopology", "EstimateReport", "Gate", "LogicalCircuit", "SrResult", "WeightModel",
    "analyze", "build_booking_table", "choose_weight", "correct_output", "cqv", "esp", "estimate", "fit",
    "generate", "inject_at", "mark_unace", "parse_qasm", "qvf", "run_fault_injection", "schedule",
    "serialize_qasm", "simulate_noiseless", "sweep_best_weight", "transpile",
]
