"""Command-line front end: ``qvul <command> ...``.

Every JSON report embeds a ``manifest`` block (command, input hashes, config
hash, version, timestamp, seed).  Apart from the timestamp, reruns produce
identical bytes.  Exit codes: 0 success, 1 estimation failure, 2 input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import __version__, calib
from .bench import BenchmarkSpec, correct_output, generate
from .calib import CalibrationSnapshot
from .circuit import CompiledCircuit, LogicalCircuit
from .oracle import OracleError, as_compiled, run_fault_injection
from .qasm import parse_qasm, read_metadata, serialize_qasm
from .topology import DeviceTopology, resolve
from .transpile import LAYOUTS, ROUTINGS, CompileConfig, RoutingError, transpile

log = logging.getLogger("qvul")

EXIT_OK, EXIT_FAILURE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    config_hash: str = ""
    version: str = __version__
    timestamp: str = ""
    seed: int | None = None

    @classmethod
    def build(cls, command: str, paths: Sequence[str | Path], config: dict, seed: int | None = None):
        inputs = {}
        for p in paths:
            if p is not None and Path(p).is_file():
                inputs[str(p)] = hashlib.sha256(Path(p).read_bytes()).hexdigest()
        blob = json.dumps(config, sort_keys=True, default=str).encode()
        return cls(
            command,
            inputs,
            hashlib.sha256(blob).hexdigest(),
            __version__,
            datetime.now(timezone.utc).isoformat(timespec="seconds"),
            seed,
        )


def _dump(payload: dict) -> str:
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# where results go does not change what was computed
_OUTPUT_ARGS = {"func", "out", "csv", "json", "plot", "trace", "record", "verbose"}


def _config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in _OUTPUT_ARGS}


# ---------------------------------------------------------------- input helpers


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None


def _device(name: str | None) -> DeviceTopology | None:
    if name is None:
        return None
    try:
        return resolve(name)
    except (OSError, ValueError) as exc:
        raise InputError(f"unknown device {name!r}: {exc}") from None


def _circuit(path: str, device_name: str | None = None) -> tuple[CompiledCircuit, dict[str, str]]:
    """Parse a QASM file into a compiled circuit.

    The device comes from ``device_name``, else from the file's metadata; a
    file with neither is treated as running on an all-to-all device.
    """
    text = _read_text(path)
    meta = read_metadata(text)
    device = _device(device_name or meta.get("device"))
    try:
        circ = parse_qasm(text, device)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    return as_compiled(circ), meta


def _logical(path: str) -> tuple[LogicalCircuit, dict[str, str]]:
    text = _read_text(path)
    try:
        return parse_qasm(text), read_metadata(text)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _snapshot(spec: str, device: DeviceTopology) -> CalibrationSnapshot:
    """``uniform``, ``synthetic:SEED`` or a calibration JSON path."""
    try:
        if spec == "uniform":
            snap = calib.uniform(device)
        elif spec.startswith("synthetic:"):
            snap = calib.synthetic(device, int(spec.split(":", 1)[1]))
        else:
            snap = calib.load(spec, device)
        snap.check_device(device)
        return snap
    except OSError as exc:
        raise InputError(f"{spec}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InputError(f"calibration {spec}: {exc}") from None


def _annotations(path: str | None, circ: CompiledCircuit):
    if path is None:
        return None
    from . import entanglement
    from .cycles import schedule

    try:
        return entanglement.load(path, circ.virtual_names(), schedule(circ).depth)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- commands


def cmd_bench(args) -> int:
    try:
        spec = BenchmarkSpec(args.name, args.size, args.secret, args.oracle, args.inverse,
                             Fraction(args.phase) if args.phase else None, args.large)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    text = serialize_qasm(generate(spec))
    lines = text.splitlines(keepends=True)
    lines.insert(2, f"// qvul: correct={correct_output(spec)} bench={spec.label}\n")
    _emit("".join(lines), args.out)
    return EXIT_OK


def cmd_transpile(args) -> int:
    logical, meta = _logical(args.circuit)
    device = _device(args.device)
    try:
        cfg = CompileConfig(args.layout, args.routing, args.opt, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    compiled = transpile(logical, device, cfg)
    text = serialize_qasm(compiled)
    keep = {k: v for k, v in meta.items() if k in ("correct", "bench")}
    if keep:
        lines = text.splitlines(keepends=True)
        extra = " ".join(f"{k}={v}" for k, v in sorted(keep.items()))
        lines.insert(2, f"// qvul: {extra} config={cfg.label}\n")
        text = "".join(lines)
    _emit(text, args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    from .ace import analyze

    circ, _ = _circuit(args.circuit, args.device)
    _, table, ace_map = analyze(circ, _annotations(args.annotations, circ))
    manifest = RunManifest.build("analyze", [args.circuit, args.annotations, args.device], _config(args))
    if args.json:
        payload = json.loads(table.to_json())
        payload["counts"] = ace_map.counts()
        payload["fixpoint_sweeps"] = ace_map.sweeps
        payload["entanglement"] = table.entanglement.to_json(table.names)
        payload["manifest"] = asdict(manifest)
        Path(args.json).write_text(_dump(payload), encoding="utf-8")
    if args.csv or not args.json:
        _emit(table.to_csv(), args.csv)
    if args.plot:
        from . import plots

        plots.ace_heatmap(table, args.plot)
    return EXIT_OK


def _real_sr(values: list[float] | None, count: int) -> list[float | None]:
    if not values:
        return [None] * count
    if len(values) != count:
        raise InputError(f"--real-sr given {len(values)} times for {count} circuits")
    for v in values:
        if not 0 <= v <= 1:
            raise InputError("--real-sr must lie in [0, 1]")
    return list(values)


def cmd_estimate(args) -> int:
    from .estimators import estimate
    from .weight import choose_weight, load_model

    labels = args.label or [Path(c).stem for c in args.circuit]
    if len(labels) != len(args.circuit):
        raise InputError(f"--label given {len(labels)} times for {len(args.circuit)} circuits")
    real = _real_sr(args.real_sr, len(args.circuit))
    model = None
    if args.model:
        try:
            model = load_model(args.model)
        except (OSError, ValueError, KeyError) as exc:
            raise InputError(f"{args.model}: {exc}") from None
    if args.weight is not None and not 0 <= args.weight <= 1:
        raise InputError("--weight must lie in [0, 1]")

    reports, rows = [], []
    for path, label, sr in zip(args.circuit, labels, real):
        circ, _ = _circuit(path, args.device)
        snap = _snapshot(args.calib, circ.device)
        if args.weight is not None:
            w = args.weight
        else:
            from .cycles import schedule

            w = choose_weight(model, schedule(circ).depth)
        rep = estimate(circ, snap, w, _annotations(args.annotations, circ), trace=bool(args.trace or args.plot))
        entry = {"label": label, "circuit": path, **rep.to_json()}
        if sr is not None:
            entry["real_sr"] = sr
        reports.append(entry)
        rows.append((label, sr, rep.esp, rep.one_minus_cqv))
        if args.trace:
            Path(args.trace).mkdir(parents=True, exist_ok=True)
            (Path(args.trace) / f"{label}_trace.csv").write_text(rep.trace_csv(circ.virtual_names()), encoding="utf-8")
        if args.plot:
            from . import plots

            Path(args.plot).mkdir(parents=True, exist_ok=True)
            plots.cqv_traces(rep.traces, circ.virtual_names(), Path(args.plot) / f"{label}_trace.png")

    manifest = RunManifest.build("estimate", [*args.circuit, args.calib, args.model, args.device], _config(args))
    payload = {"reports": reports, "manifest": asdict(manifest)}
    _emit(_dump(payload), args.out)
    if args.csv:
        lines = ["label,real_sr,esp,one_minus_cqv"]
        for label, sr, e, c in rows:
            lines.append(f"{label},{'' if sr is None else repr(sr)},{e!r},{c!r}")
        Path(args.csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if args.plot:
        from . import plots

        plots.prediction_bars([r[0] for r in rows], [r[2] for r in rows], [r[3] for r in rows],
                              [r[1] for r in rows], Path(args.plot) / "predictions.png")
    return EXIT_OK


def _correct_for(args, meta: dict[str, str]) -> str:
    correct = args.correct or meta.get("correct")
    if correct is None:
        raise InputError("no correct output: pass --correct or use a file written by 'qvul bench'")
    return correct


def cmd_oracle(args) -> int:
    circ, meta = _circuit(args.circuit, args.device)
    snap = _snapshot(args.calib, circ.device)
    correct = _correct_for(args, meta)
    if args.shots < 1:
        raise InputError("--shots must be positive")
    res = run_fault_injection(circ, snap, args.shots, args.seed, correct, workers=args.workers)
    manifest = RunManifest.build("oracle", [args.circuit, args.calib, args.device], _config(args), args.seed)
    _emit(_dump({**res.to_json(), "correct_output": correct, "manifest": asdict(manifest)}), args.out)
    return EXIT_OK


def cmd_weight_sweep(args) -> int:
    from .cycles import schedule
    from .weight import sweep_best_weight

    circ, meta = _circuit(args.circuit, args.device)
    snap = _snapshot(args.calib, circ.device)
    oracle = None
    if args.real_sr is None:
        res = run_fault_injection(circ, snap, args.shots, args.seed, _correct_for(args, meta), workers=args.workers)
        real, oracle = res.sr, res.to_json()
    else:
        if not 0 <= args.real_sr <= 1:
            raise InputError("--real-sr must lie in [0, 1]")
        real = args.real_sr
    result = sweep_best_weight(circ, snap, real, _annotations(args.annotations, circ))
    depth = schedule(circ).depth
    cid = args.id or Path(args.circuit).stem
    if args.csv:
        Path(args.csv).write_text(result.to_csv(), encoding="utf-8")
    if args.record:
        rec = Path(args.record)
        runs = json.loads(rec.read_text(encoding="utf-8")) if rec.exists() else {"experiments": []}
        runs["experiments"] = [e for e in runs["experiments"] if e["circuit_id"] != cid]
        runs["experiments"].append({"circuit_id": cid, "depth": depth, "best_weight": result.best_weight})
        rec.write_text(_dump(runs), encoding="utf-8")
    if args.plot:
        from . import plots

        plots.sweep_curve(result.weights, result.predictions, real, result.best_weight, args.plot)
    manifest = RunManifest.build("weight sweep", [args.circuit, args.calib, args.device], _config(args), args.seed)
    payload = {"circuit_id": cid, "depth": depth, "real_sr": real, "best_weight": result.best_weight,
               "manifest": asdict(manifest)}
    if oracle is not None:
        payload["oracle"] = oracle
    _emit(_dump(payload), args.out)
    return EXIT_OK


def cmd_weight_fit(args) -> int:
    from .weight import Experiment, fit

    try:
        data = json.loads(_read_text(args.inp))
        entries = data["experiments"] if isinstance(data, dict) else data
        exps = [Experiment(str(e["circuit_id"]), int(e["depth"]), float(e["best_weight"])) for e in entries]
        model = fit(exps, args.machine, args.bin_width)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{args.inp}: {exc}") from None
    payload = model.to_json()
    payload["manifest"] = asdict(RunManifest.build("weight fit", [args.inp], _config(args)))
    _emit(_dump(payload), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    from . import suite

    try:
        manifest, base = suite.load_manifest(args.suite)
        cases = suite.load_cases(manifest, base)
        rule = suite.weight_rule(manifest, base)
    except OSError as exc:
        raise InputError(f"{args.suite}: {exc.strerror or exc}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{args.suite}: {exc}") from None
    shots, seed = int(manifest.get("shots", 8192)), int(manifest.get("seed", 1))
    results = suite.evaluate(cases, shots, seed, args.workers)
    rows = suite.compare(results, rule)
    run = RunManifest.build("compare", [args.suite], _config(args), seed)
    payload = {"rows": [r.to_json() for r in rows], "aggregate": suite.aggregate(rows), "manifest": asdict(run)}
    _emit(_dump(payload), args.out)
    if args.csv:
        Path(args.csv).write_text(suite.rows_csv(rows), encoding="utf-8")
    if args.plot:
        from . import plots

        plots.compare_scatter(rows, args.plot)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qvul", description="Vulnerability-aware success-rate estimation for compiled circuits.")
    p.add_argument("--version", action="version", version=f"qvul {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="write a benchmark circuit as QASM")
    b.add_argument("--name", required=True, help="BV, DJ, QFT or QPE")
    b.add_argument("--size", type=int, required=True)
    b.add_argument("--secret", help="hidden string / DJ mask / QFT input, MSB first")
    b.add_argument("--oracle", default="balanced", choices=["balanced", "constant0", "constant1"])
    b.add_argument("--inverse", action="store_true", help="QFT: run the inverse direction")
    b.add_argument("--phase", help="QPE eigenphase as a fraction, e.g. 3/8")
    b.add_argument("--large", action="store_true", help="allow sizes beyond 16 (scaling runs)")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("transpile", help="map a logical circuit onto a device")
    t.add_argument("--circuit", required=True)
    t.add_argument("--device", required=True, help="builtin name (grid-3x3, hexagon-27, heavy-hex-127, line-N) or JSON")
    t.add_argument("--layout", default="trivial", choices=LAYOUTS)
    t.add_argument("--routing", default="greedy_nearest", choices=[*ROUTINGS, "greedy"])
    t.add_argument("--opt", type=int, default=1, choices=[0, 1, 2])
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out")
    t.set_defaults(func=cmd_transpile)

    def circuit_args(sp, many=False):
        if many:
            sp.add_argument("circuit", nargs="+")
        else:
            sp.add_argument("--circuit", required=True)
        sp.add_argument("--device", help="defaults to the device named in the QASM metadata")
        sp.add_argument("--annotations", help="entanglement annotation JSON")

    a = sub.add_parser("analyze", help="booking table with ACE marks")
    circuit_args(a)
    a.add_argument("--csv", help="booking-table CSV path (stdout when no output is given)")
    a.add_argument("--json", help="booking-table JSON path")
    a.add_argument("--plot", help="write an ACE heatmap PNG here")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("estimate", help="ESP, QVF, UQVF and 1-CQV")
    circuit_args(e, many=True)
    e.add_argument("--calib", default="uniform", help="calibration JSON, 'uniform' or 'synthetic:SEED'")
    g = e.add_mutually_exclusive_group()
    g.add_argument("--weight", type=float)
    g.add_argument("--model", help="weight model JSON from 'weight fit'")
    e.add_argument("--real-sr", type=float, action="append", help="measured SR, once per circuit")
    e.add_argument("--label", action="append", help="configuration label, once per circuit")
    e.add_argument("--out", help="report JSON (stdout when omitted)")
    e.add_argument("--csv", help="plot-ready CSV: label,real_sr,esp,one_minus_cqv")
    e.add_argument("--trace", help="directory for per-cycle S trace CSVs")
    e.add_argument("--plot", help="directory for PNG figures")
    e.set_defaults(func=cmd_estimate)

    def oracle_args(sp):
        sp.add_argument("--calib", default="uniform")
        sp.add_argument("--shots", type=int, default=8192)
        sp.add_argument("--seed", type=int, default=1)
        sp.add_argument("--correct", help="expected bit string, classical bit 0 rightmost")
        sp.add_argument("--workers", type=int, help="defaults to QVUL_THREADS or the CPU count")

    o = sub.add_parser("oracle", help="Monte Carlo fault-injection success rate")
    circuit_args(o)
    oracle_args(o)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    w = sub.add_parser("weight", help="best-weight sweeps and model fitting")
    wsub = w.add_subparsers(dest="weight_command", required=True)
    ws = wsub.add_parser("sweep", help="101-point weight sweep against a real or oracle SR")
    circuit_args(ws)
    oracle_args(ws)
    ws.add_argument("--real-sr", type=float, help="skip the oracle and use this SR")
    ws.add_argument("--id", help="circuit id recorded in --record")
    ws.add_argument("--csv", help="sweep CSV: weight,prediction,abs_error")
    ws.add_argument("--record", help="runs JSON to append this experiment to")
    ws.add_argument("--plot", help="write the sweep curve PNG here")
    ws.add_argument("--out")
    ws.set_defaults(func=cmd_weight_sweep)
    wf = wsub.add_parser("fit", help="fit the depth-binned weight model")
    wf.add_argument("--in", dest="inp", required=True)
    wf.add_argument("--out")
    wf.add_argument("--machine", default="")
    wf.add_argument("--bin-width", type=int, default=25)
    wf.set_defaults(func=cmd_weight_fit)

    c = sub.add_parser("compare", help="oracle-evaluated ESP vs 1-CQV comparison suite")
    c.add_argument("--suite", required=True)
    c.add_argument("--out")
    c.add_argument("--csv")
    c.add_argument("--plot", help="write a prediction scatter PNG here")
    c.add_argument("--workers", type=int)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="qvul: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"qvul: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OracleError, RoutingError) as exc:
        print(f"qvul: failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"qvul: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"qvul: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
