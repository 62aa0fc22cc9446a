import csv
import json
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qslab.errors import BadPrime, ConfigError
from qslab.lab import (ConicBundle, ExperimentConfig, ExperimentReport, builtin_conic_bundle,
                       hilbert_bruteforce, hilbert_symbol, local_symbol, run_experiment,
                       theta_exponent)
from qslab.poly import HomogeneousPoly

ODD = [3, 5, 7, 11, 13, 17, 19]
nonzero = st.integers(-200, 200).filter(bool)
rat = st.fractions(min_value=-50, max_value=50, max_denominator=30).filter(bool)


def cfg(**kw):
    return ExperimentConfig.from_dict(kw)


def run(**kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_experiment(cfg(**kw))


def test_hilbert_examples():
    for p in (5, 13, 17):
        for t in (1, -3, p, 7 * p, p**3):
            assert hilbert_symbol(-1, t, p) == 1
    for p in (3, 7, 11, 19):
        assert hilbert_symbol(-1, p, p) == -1
    assert hilbert_symbol(-1, -1, 0) == -1 and hilbert_symbol(2, -1, 0) == 1
    with pytest.raises(BadPrime):
        hilbert_symbol(3, 5, 2)


@given(rat, rat, st.sampled_from(ODD))
def test_hilbert_symmetric(a, b, p):
    assert hilbert_symbol(a, b, p) == hilbert_symbol(b, a, p)


@given(rat, rat, rat, st.sampled_from(ODD))
def test_hilbert_bimultiplicative(a, b, c, p):
    assert hilbert_symbol(a * b, c, p) == hilbert_symbol(a, c, p) * hilbert_symbol(b, c, p)


def test_hilbert_against_search():
    for p in ODD:
        for a in range(-30, 31):
            for b in range(-30, 31):
                if a and b:
                    assert hilbert_symbol(a, b, p) == hilbert_bruteforce(a, b, p), (a, b, p)


@given(st.lists(nonzero, min_size=1, max_size=20), st.sampled_from([-1, 2, 3, -7, 15]),
       st.sampled_from(ODD))
def test_local_symbol_vectorized(ts, a, p):
    assert local_symbol(a, np.array(ts), p).tolist() == [hilbert_symbol(a, t, p) for t in ts]


def test_config_validation():
    with pytest.raises(ConfigError):
        cfg(scenario="baseline", B=[32, 16])
    with pytest.raises(ConfigError):
        cfg(scenario="nope", B=[16])
    with pytest.raises(ConfigError):
        cfg(scenario="thin1", B=[16])
    with pytest.raises(ConfigError):
        cfg(scenario="baseline", B=[16], schema_version=99)
    with pytest.raises(ConfigError):
        cfg(scenario="baseline", B=[16], colour="blue")
    with pytest.raises(ConfigError):
        cfg(scenario="equidist", B=[16], conditions=[{"p": 2, "predicate": "all"}])
    with pytest.raises(ConfigError):
        cfg(scenario="baseline", B=[16], form="diag:1,0")


def test_report_formats(tmp_path):
    rep = ExperimentReport("x", ["B", "ratio", "prediction", "count"])
    rep.add_row(B=4, ratio=1 / 3, prediction=Fraction(3, 4), count=7)
    with pytest.raises(ValueError):
        rep.add_row(B=4, ratio=0.5, prediction=None, count=1)
    rep.write(str(tmp_path))
    rows = list(csv.reader(open(tmp_path / "report.csv", encoding="utf-8")))
    assert rows == [["B", "ratio", "prediction", "count"], ["4", "0.333333333333", "3/4", "7"]]
    assert json.load(open(tmp_path / "report.json"))["rows"][0]["prediction"] == "3/4"


def test_baseline_runs():
    r = run(scenario="baseline", B=[4, 8, 16, 32])
    assert r.column("total") == [120, 1000, 8632, 65096]
    assert abs(r.fit["slope"] - 3) < 0.3
    assert r.metadata["environment"]["numpy"] == np.__version__
    assert run(scenario="baseline", B=[8]).fit["flag"] == "insufficient points"
    assert all(v == 0 for v in run(scenario="baseline", B=[4, 8, 12, 16], form="diag:1,1,1,1,1").column("total"))


def test_thin_scenarios():
    r1 = run(scenario="thin1", B=[8, 16, 32, 64], divisor=["x0"])
    assert all(0 <= x <= 1 for x in r1.column("ratio"))
    assert 0.7 < r1.fit["saving_exponent"] < 1.3
    r2 = run(scenario="thin2", B=[8, 16, 32, 64])
    assert r2.fit["monotone_decreasing"]
    triv = run(scenario="thin2", B=[8, 16, 32, 64], predicate="all")
    assert triv.column("ratio") == [1.0] * 4 and abs(triv.fit["slope"]) < 1e-12
    assert theta_exponent(4) == 1 / 16


def test_fibration_scenarios():
    base = run(scenario="fibration", B=[16, 24, 32, 48], p_cutoff=50)
    more = run(scenario="fibration", B=[16, 24, 32, 48], p_cutoff=100)
    assert all(b <= a for a, b in zip(base.column("ratio"), more.column("ratio")))
    assert base.fit["Delta"] == 1
    split = run(scenario="fibration", B=[16, 24, 32, 48], fibration={"a": 1, "components": ["x0", "x1"]})
    assert split.fit["Delta"] == 0
    # every fibre of u^2 - v^2 = t w^2 has a point
    assert split.column("ratio") == [1.0] * 4
    assert "tail_estimate_sum_C_over_p" in base.metadata["truncation"]


def test_conic_bundle_oracles():
    b = builtin_conic_bundle()
    X = np.array([[3, 3, 0, 0, 0], [3, 21, 0, 0, 0], [-1, 1, 0, 0, 0], [0, 5, 0, 0, 0]])
    t = b.values(X)
    assert t.tolist() == [9, 63, -1, 0]
    assert b.soluble_mask(t, 100).tolist() == [True, False, False, True]
    cb = ConicBundle.parse({"a": -1, "components": ["x0*x1"]}, 5)
    assert cb.values(X).tolist() == t.tolist()


def test_friable_scenarios():
    inf = run(scenario="friable", B=[8, 16, 32, 64], divisor=["x0"], y=float("inf"))
    assert inf.column("ratio") == [1.0] * 4
    r1 = run(scenario="friable", B=[8, 16, 32, 64], divisor=["x0"], y=10)
    r2 = run(scenario="friable", B=[8, 16, 32, 64], divisor=["x0", "x1"], y=10)
    assert all(b < a for a, b in zip(r1.column("ratio"), r2.column("ratio")))


def test_equidist_and_circle():
    full = run(scenario="equidist", B=[8, 16, 32, 64], conditions=[{"p": 3, "predicate": "full"}])
    assert full.column("ratio") == [1.0] * 4 and full.fit["prediction"] == 1
    two = run(scenario="equidist", B=[8, 16, 32, 64],
              conditions=[{"p": 3, "predicate": "x0_nonzero"}, {"p": 7, "predicate": "x1_nonzero"}])
    assert two.fit["prediction"] == Fraction(3, 4) * Fraction(7, 8)
    c = run(scenario="circle", B=[10])
    assert 0.5 < c.rows[0]["main_ratio"] < 1.5
    tiny = run(scenario="circle", B=[1], form="diag:3,3,3,3,-3")
    assert tiny.rows[0]["flag"] == "below support threshold" and tiny.rows[0]["weighted_count"] == 0


def test_experiment_writes(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"schema_version": 1, "scenario": "baseline", "B": [4, 8, 16, 32]}))
    rep = run_experiment(ExperimentConfig.load(str(conf)), str(tmp_path / "out"))
    assert (tmp_path / "out" / "report.csv").exists() and len(rep.rows) == 4
