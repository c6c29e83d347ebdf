import json

import numpy as np
import pytest

from sharpweights import experiments, suites
from sharpweights.experiments import ExperimentReport, fit_exponent
from sharpweights.suites import run_property_suites

SMALL = {"sparse": 3, "matrix": 1, "cov": 4, "duality": 2, "oracle": 20}


def test_fit_exact_powers():
    xs = np.array([1.0, 2.0, 5.0, 11.0])
    assert fit_exponent(list(zip(xs, xs**2))).slope == pytest.approx(2.0)
    flat = fit_exponent(list(zip(xs, np.full(4, 3.0))))
    assert flat.slope == pytest.approx(0.0, abs=1e-12)
    assert flat.intercept == pytest.approx(np.log(3.0))


def test_fit_noisy():
    rng = np.random.default_rng(0)
    xs = np.geomspace(1, 1e4, 40)
    ys = xs ** (4 / 3) * np.exp(rng.normal(0, 0.01, xs.size))
    fit = fit_exponent(list(zip(xs, ys)))
    assert abs(fit.slope - 4 / 3) <= 0.01
    assert fit.residual < 0.02


@pytest.mark.parametrize("pts", [[(1, 1), (2, 4)], [(1, 1), (2, 0), (3, 9)], [(1, 1), (1, 2), (3, 9)], [(2, 4), (1, 1), (3, 9)]])
def test_fit_rejects(pts):
    with pytest.raises(ValueError):
        fit_exponent(pts)


def test_empty_grids_rejected():
    with pytest.raises(ValueError):
        experiments.run_sharpness_small_p(1.5, [])
    with pytest.raises(ValueError):
        experiments.run_power_weight(2.0, [])


def test_synthetic_report_round_trip():
    rep = ExperimentReport("synthetic", {"p": 2.0})
    rep.points = [{"N": n, "y": float(n * n)} for n in (2, 3, 5, 8)]
    rep.fit = fit_exponent([(r["N"], r["y"]) for r in rep.points])
    rep.check("slope", rep.fit.slope, "in [1.9, 2.1]", abs(rep.fit.slope - 2) <= 0.1)
    assert rep.passed
    d = json.loads(rep.to_json())
    assert d["fit"]["slope"] == pytest.approx(2.0) and d["passed"] is True
    lines = rep.to_csv().splitlines()
    assert lines[0] == "N,y" and len(lines) == 5
    rep.check("forced", 1.0, "<= 0", False)
    assert not rep.passed


def test_small_p_report_structure():
    rep = experiments.run_sharpness_small_p(1.5, (10, 14, 18))
    names = [c.name for c in rep.checks]
    assert "ap_over_N band" in names and "measure >= sum of head lengths" in names
    for r in rep.points:
        assert r["measure"] >= r["head_sum"]
        assert r["ap_over_N"] > 0
    assert rep.fit is not None


def test_hilbert_report_has_diagnostic():
    rep = experiments.run_hilbert_small_p(1.5, (10, 14, 18))
    assert "hilbert_exact_slope" in rep.bands
    assert all(r["hilbert_measure"] >= r["measure"] for r in rep.points)


def test_suites_deterministic():
    a = run_property_suites(3, SMALL)
    b = run_property_suites(3, SMALL)
    assert a.to_json() == b.to_json()
    assert a.passed


def test_suites_sizes_independent():
    # changing one suite's size leaves the other suites' draws alone
    a = run_property_suites(1, dict(SMALL, oracle=10), only=["cov", "oracle"])
    b = run_property_suites(1, dict(SMALL, oracle=30), only=["cov", "oracle"])
    cov = lambda r: [c for c in r.to_dict()["checks"] if c["name"].startswith("cov")]
    assert cov(a) == cov(b)


def test_suites_reject_unknown_names():
    with pytest.raises(ValueError):
        run_property_suites(0, {"nope": 1})
    with pytest.raises(ValueError):
        run_property_suites(0, only=["nope"])


def test_corrupted_split_is_caught(monkeypatch):
    # a "split" that hands back the family unchanged misses the sparseness bound
    monkeypatch.setattr(suites, "split_sparse", lambda S, m: [S])
    rep = run_property_suites(0, {"sparse": 2}, only=["sparse"])
    assert not rep.passed
    bad = [c for c in rep.checks if not c.passed]
    assert any("split" in c.name for c in bad)
    wit = next(c for c in bad if "split" in c.name).witness
    assert "family" in wit and wit["family"]["cubes"]


def test_corrupted_weak_norm_is_caught(monkeypatch):
    real = suites.weak_lp_quasinorm

    def off(g, p, *a, **k):
        rep = real(g, p, *a, **k)
        rep.value *= 1.01
        return rep

    monkeypatch.setattr(suites, "weak_lp_quasinorm", off)
    rep = run_property_suites(0, {"oracle": 10}, only=["oracle"])
    assert not rep.passed
    assert all(c.witness for c in rep.checks if not c.passed)
