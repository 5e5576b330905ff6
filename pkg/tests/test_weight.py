from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qvul import calib
from qvul.ace import analyze
from qvul.bench import BenchmarkSpec, correct_output, generate
from qvul.estimators import cqv
from qvul.oracle import run_fault_injection
from qvul.topology import grid
from qvul.transpile import CompileConfig, transpile
from qvul.weight import (
    EPS,
    FALLBACK_WEIGHT,
    WEIGHTS,
    DepthBin,
    Experiment,
    WeightModel,
    best_weight,
    choose_weight,
    fit,
    geometric_mean,
    load_model,
    save_model,
    sweep_best_weight,
    sweep_curve,
)


@pytest.fixture(scope="module")
def qft_case():
    dev = grid(3, 3)
    spec = BenchmarkSpec("QFT", 5)
    cc = transpile(generate(spec), dev, CompileConfig("dense", "lookahead", 1))
    return cc, calib.synthetic(dev, 4, idle=2e-3), correct_output(spec)


def test_grid():
    assert len(WEIGHTS) == 101 and WEIGHTS[0] == 0 and WEIGHTS[-1] == 1 and WEIGHTS[37] == 0.37


def test_boundaries(qft_case):
    cc, snap, _ = qft_case
    curve = sweep_curve(cc, snap)
    assert best_weight(curve, float(curve[0])) == 0.0
    assert best_weight(curve, float(curve[-1]) / 2) == 1.0
    with pytest.raises(ValueError):
        best_weight(curve, 1.5)


def test_ties_go_to_smaller_weight():
    curve = np.ones(101)
    assert best_weight(curve, 0.5) == 0.0
    curve = np.linspace(1, 0, 101)
    assert best_weight(curve, (curve[30] + curve[31]) / 2) == 0.30


def test_oracle_sweep_matches_brute_force(qft_case):
    cc, snap, correct = qft_case
    sr = run_fault_injection(cc, snap, 4000, 1, correct).sr
    res = sweep_best_weight(cc, snap, sr)
    _, table, a = analyze(cc)
    brute = [abs(cqv(a, table, snap, float(w))[0] - sr) for w in WEIGHTS]
    assert res.best_weight == float(WEIGHTS[int(np.argmin(brute))])
    assert res.abs_errors == pytest.approx(brute, abs=1e-15)
    lines = res.to_csv().splitlines()
    assert lines[0] == "weight,prediction,abs_error" and len(lines) == 102


def test_fit_examples():
    m = fit([Experiment("a", 80, 0.2)])
    assert m.depth_bins == (DepthBin(76, 100, pytest.approx(0.2)),)
    m = fit([Experiment("a", 30, 0.1), Experiment("b", 40, 0.4)])
    assert m.depth_bins[0].weight == pytest.approx(math.exp((math.log(0.1) + math.log(0.4)) / 2))
    assert m.depth_bins[0].weight == pytest.approx(0.2)
    deep = fit([Experiment("x", 160, 0.0), Experiment("y", 170, 0.01), Experiment("z", 155, 0.0)])
    assert choose_weight(deep, 160) <= 0.05
    with pytest.raises(ValueError):
        fit([])


def test_choose_weight_rules():
    m = fit([Experiment("a", 160, 0.01), Experiment("b", 60, 0.3)])
    assert choose_weight(m, 10) == pytest.approx(0.3)
    assert choose_weight(m, 500) == pytest.approx(0.01)
    # 100 is 25 away from the 51-75 bin and 51 from 151-175
    assert choose_weight(m, 100) == pytest.approx(0.3)
    assert choose_weight(None, 80) == FALLBACK_WEIGHT


def test_nearest_bin_tie_prefers_shallower():
    m = WeightModel((DepthBin(1, 25, 0.5), DepthBin(51, 75, 0.1)))
    assert choose_weight(m, 38) == 0.5


def test_geometric_mean_clamps():
    assert geometric_mean([0.0, 0.0]) == pytest.approx(EPS)


def test_model_json_round_trip(tmp_path):
    m = fit([Experiment("a", 30, 0.1), Experiment("b", 90, 0.0)], machine="grid")
    save_model(m, tmp_path / "m.json")
    assert load_model(tmp_path / "m.json") == m


def test_experiment_validation():
    with pytest.raises(ValueError):
        Experiment("a", 0, 0.1)
    with pytest.raises(ValueError):
        Experiment("a", 5, 1.1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 300), st.sampled_from(list(WEIGHTS))), min_size=1, max_size=20))
def test_fit_is_deterministic_and_bounded(items):
    exps = [Experiment(f"c{k}", d, float(w)) for k, (d, w) in enumerate(items)]
    a, b = fit(exps), fit(list(exps))
    assert a == b
    bins = a.depth_bins
    assert all(0 < x.weight <= 1 and x.hi - x.lo == 24 and (x.lo - 1) % 25 == 0 for x in bins)
    assert all(p.hi < q.lo for p, q in zip(bins, bins[1:]))
    for d in (1, 50, 1000):
        assert 0 < choose_weight(a, d) <= 1
