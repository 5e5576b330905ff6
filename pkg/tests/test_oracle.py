from __future__ import annotations

import math

import numpy as np
import pytest

from qvul import calib
from qvul.bench import BenchmarkSpec, correct_output, generate
from qvul.cycles import schedule
from qvul.oracle import (
    NoiseSpec,
    OracleError,
    inject_at,
    run_fault_injection,
    simulate_noiseless,
    tv_distance,
    wilson_interval,
)
from qvul.topology import grid, line
from qvul.transpile import CompileConfig, transpile

from conftest import make


def test_noiseless_examples():
    assert simulate_noiseless(generate(BenchmarkSpec("BV", 4, "101"))) == {"101": pytest.approx(1.0)}
    bell = simulate_noiseless(make("h q[0]; cx q[0],q[1]; measure q[0]->c[0]; measure q[1]->c[1];", 2, 2))
    assert bell == {"00": pytest.approx(0.5), "11": pytest.approx(0.5)}


def test_transpiled_qft5_equivalent():
    logical = generate(BenchmarkSpec("QFT", 5, "01101"))
    cc = transpile(logical, grid(3, 3), CompileConfig("dense", "lookahead", 1, 5))
    assert tv_distance(simulate_noiseless(logical), simulate_noiseless(cc)) < 1e-9


def test_distribution_normalized():
    d = simulate_noiseless(make("h q[0]; sx q[1]; rz(0.3) q[1]; cx q[1],q[2]; sx q[2]; "
                                "measure q[0]->c[0]; measure q[1]->c[1]; measure q[2]->c[2];", 3, 3))
    assert sum(d.values()) == pytest.approx(1.0, abs=1e-12)


def test_mid_circuit_measurement_branches():
    c = make("h q[0]; measure q[0]->c[0]; cx q[0],q[1]; measure q[1]->c[1];", 2, 2)
    assert simulate_noiseless(c) == {"00": pytest.approx(0.5), "11": pytest.approx(0.5)}


def test_qubit_cap():
    c = make(" ".join(f"x q[{q}];" for q in range(15)), 15)
    with pytest.raises(OracleError):
        simulate_noiseless(c)
    # idle rows do not count toward the cap
    wide = make("x q[0]; measure q[0]->c[0];", 20, 1)
    assert simulate_noiseless(wide) == {"1": pytest.approx(1.0)}


def test_inject_examples():
    c = make("x q[0]; measure q[0]->c[0];", 1, 1)
    assert inject_at(c, 0, 1, "X") == {"0": pytest.approx(1.0)}
    assert inject_at(c, 0, 1, "Z") == {"1": pytest.approx(1.0)}
    # a Z on the target before a cx kicks back onto an X-basis control
    k = make("x q[1]; h q[1]; h q[0]; cx q[0],q[1]; h q[0]; measure q[0]->c[0];", 2, 1)
    assert simulate_noiseless(k) == {"1": pytest.approx(1.0)}
    assert inject_at(k, 1, 1, "Z") == {"0": pytest.approx(1.0)}
    with pytest.raises(OracleError):
        inject_at(c, 0, 5, "X")
    with pytest.raises(OracleError):
        inject_at(c, 0, 0, "W")


def test_zero_noise_is_perfect():
    spec = BenchmarkSpec("BV", 5)
    cc = transpile(generate(spec), grid(3, 3), CompileConfig("dense"))
    snap = calib.uniform(grid(3, 3), sq=0, meas=0, cx=0)
    r = run_fault_injection(cc, snap, 3000, 1, correct_output(spec))
    assert r.sr == 1.0 and r.trials == 3000


def test_full_depolarizing_halves_plus_state():
    c = make("h q[0]; h q[0]; measure q[0]->c[0];", 1, 1)
    sched = schedule(c)
    noise = NoiseSpec(sched, np.array([1.0, 0.0, 0.0]), np.zeros((sched.depth, 1)))
    r = run_fault_injection(c, noise, 20_000, 3, "0")
    assert r.ci_low <= 0.5 <= r.ci_high


def test_sr_decreases_with_error_scale():
    spec = BenchmarkSpec("QFT", 4)
    cc = transpile(generate(spec), grid(3, 3), CompileConfig("dense", "lookahead", 1))
    base = calib.uniform(grid(3, 3))
    srs = [run_fault_injection(cc, base.scaled(s), 8192, 1, correct_output(spec)).sr for s in (1, 3, 9)]
    assert 0 < srs[2] < srs[1] < srs[0] < 1


def test_seeded_and_worker_independent():
    spec = BenchmarkSpec("QPE", 4)
    cc = transpile(generate(spec), line(4), CompileConfig())
    snap = calib.synthetic(line(4), 2, scale=3, idle=1e-3)
    a = run_fault_injection(cc, snap, 5000, 9, correct_output(spec), workers=1)
    b = run_fault_injection(cc, snap, 5000, 9, correct_output(spec), workers=3)
    assert a == b
    assert run_fault_injection(cc, snap, 5000, 10, correct_output(spec)) != a


def test_single_gate_matches_analytic():
    p, m = 0.2, 0.05
    snap = calib.uniform(line(1), sq=p, meas=m, cx=0)
    r = run_fault_injection(make("x q[0]; measure q[0]->c[0];", 1, 1), snap, 40_000, 4, "1")
    # X or Y out of the four Paulis flips the bit
    analytic = (1 - p / 2) * (1 - m) + (p / 2) * m
    assert abs(r.sr - analytic) <= 3 * math.sqrt(analytic * (1 - analytic) / r.trials)


def test_input_errors():
    c = make("x q[0]; measure q[0]->c[0];", 1, 1)
    snap = calib.uniform(line(1))
    with pytest.raises(OracleError):
        run_fault_injection(c, snap, 0, 1, "1")
    with pytest.raises(OracleError):
        run_fault_injection(c, snap, 10, 1, None)
    with pytest.raises(OracleError):
        run_fault_injection(c, snap, 10, 1, "10")


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - lo == pytest.approx(0.1918, abs=1e-3)
    assert wilson_interval(0, 10)[0] == pytest.approx(0.0) and wilson_interval(10, 10)[1] == pytest.approx(1.0)
