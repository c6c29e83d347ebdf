import math

import numpy as np
import pytest

from sharpweights.functionals import (
    SearchConfig,
    ainf_constant,
    ap_constant,
    ap_duality_check,
    ap_functional,
    cov_functional,
    default_domain,
    reverse_holder_probe,
)
from sharpweights.dyadic import standard_lattice
from sharpweights.sparse import SparseFamily, random_sparse_family, random_step_on_lattice
from sharpweights.stepfn import Interval, StepFunction, integrate
from sharpweights.weights import build_power_weight, build_weight_small_p

TWO = StepFunction([0, 1, 2], [4.0, 1.0])


def _periodic_cfg(N):
    P = 2.0 ** (N + 2)
    return SearchConfig(domain=Interval(-P / 2, P))


def test_ap_functional_examples():
    assert ap_functional(StepFunction.constant(3.0, 0, 5), 1.7, Interval(1, 2)) == pytest.approx(1.0)
    assert ap_functional(TWO, 2.0, Interval(0, 2)) == pytest.approx(25 / 16)


@pytest.mark.parametrize("lam", [1e-6, 1e-3, 1.0, 1e3, 1e6])
def test_ap_functional_scale_invariant(lam):
    assert ap_functional(TWO * lam, 3.0, Interval(0, 2)) == pytest.approx(ap_functional(TWO, 3.0, Interval(0, 2)), rel=1e-12)


def test_ap_functional_rejects_nonpositive():
    with pytest.raises(ValueError):
        ap_functional(StepFunction([0, 1, 2], [0.0, 1.0]), 2.0, Interval(0, 2))


def test_ap_constant_constant_weight():
    assert ap_constant(StepFunction.constant(2.0, 0, 3), 2.0).value == pytest.approx(1.0)


def test_ap_constant_power_weight_against_finer_mesh():
    eps = 2.0**-4
    coarse = ap_constant(build_power_weight(eps), 2.0).value
    fine = ap_constant(build_power_weight(eps, ratio_log2=1 / 160), 2.0).value
    assert 0.2 <= eps * coarse <= 5
    assert coarse == pytest.approx(fine, rel=1e-3)


def test_ap_constant_small_p_band():
    vals = [ap_constant(build_weight_small_p(N, 1.5), 1.5, _periodic_cfg(N)).value / N for N in (10, 14, 18)]
    assert max(vals) / min(vals) <= 4


def test_default_domain_covers_the_period_seam():
    w = build_weight_small_p(10, 1.5)
    dom = default_domain(w)
    assert dom.a < 0 < 2.0**12 <= dom.b
    # the seam at 0 carries a larger constant than a single half period
    half = ap_constant(w, 1.5, SearchConfig(domain=Interval(0, 2.0**11))).value
    assert ap_constant(w, 1.5).value > half


def test_ap_constant_dominates_members_and_is_scale_invariant():
    rng = np.random.default_rng(1)
    edges = np.concatenate(([0.0], np.cumsum(rng.exponential(size=30))))
    w = StepFunction(edges, np.exp(rng.normal(0, 1.5, size=30)))
    rep = ap_constant(w, 2.5)
    for _ in range(200):
        a, b = np.sort(rng.uniform(edges[0], edges[-1], 2))
        assert rep.value >= ap_functional(w, 2.5, Interval(a, b)) * (1 - 1e-12)
    scaled = ap_constant(w * 1e4, 2.5)
    assert scaled.value == pytest.approx(rep.value, rel=1e-12)
    assert scaled.argmax == rep.argmax
    assert rep.value >= rep.stage1_value and rep.refinement_residual >= 0


def test_duality_examples():
    one = ap_duality_check(StepFunction.constant(1.0, 0, 1), 3.0)
    assert one.sigma_ap == pytest.approx(1.0) and one.w_ap_root == pytest.approx(1.0)
    two = ap_duality_check(TWO, 2.0)
    assert two.sigma_ap == pytest.approx(two.w_ap_root, rel=1e-12)
    assert two.w_ap_root == pytest.approx(25 / 16)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_duality_random_weights(p):
    rng = np.random.default_rng(int(p * 10))
    for _ in range(10):
        edges = np.concatenate(([0.0], np.cumsum(rng.exponential(size=50))))
        w = StepFunction(edges, np.exp(rng.normal(0, 2, size=50)))
        assert ap_duality_check(w, p).max_rel_gap <= 1e-9


def test_ainf_constant_weight():
    assert ainf_constant(StepFunction.constant(1.0, 0, 1)).value == pytest.approx(1.0, abs=1e-6)


def test_ainf_two_piece_closed_form():
    # w = 1 on [0,1), 2 on [1,2): on [0,1) the best interval ends at 2, giving (3-x)/(2-x)
    rep = ainf_constant(StepFunction([0, 1, 2], [1.0, 2.0]))
    assert rep.value == pytest.approx((3 + math.log(2)) / 3, rel=1e-8)
    assert rep.value >= 1.0


def test_ainf_power_weight_quadrature_stable():
    eps = 0.125
    w = build_power_weight(eps)
    a = ainf_constant(w, order=8)
    b = ainf_constant(w, order=16)
    assert a.value == pytest.approx(b.value, rel=1e-4)
    assert 0.1 <= eps * a.value <= 10


def test_reverse_holder_constant_weight():
    r = reverse_holder_probe(StepFunction.constant(5.0, 0, 1), 2.0)
    assert r.r_max == 2.0 and r.witness is None


def test_reverse_holder_power_sweep():
    for j in range(2, 9):
        eps = 2.0**-j
        r = reverse_holder_probe(build_power_weight(eps), 2.0)
        assert r.r_max - 1 >= eps


def test_reverse_holder_small_p_band():
    vals = []
    for N in (10, 14, 18):
        r = reverse_holder_probe(build_weight_small_p(N, 1.5), 1.5, _periodic_cfg(N))
        vals.append((r.r_max - 1) * r.ap)
    assert max(vals) / min(vals) <= 4


def test_cov_examples():
    L = standard_lattice()
    Q = L.cube(0, 0)
    w = StepFunction([0, 0.5, 1], [1.0, 3.0])
    res = cov_functional(SparseFamily(L, (Q,), 1.0), {Q: 1.0}, w, 2.0)
    assert res.lhs == pytest.approx(integrate(w, L.interval(Q)) ** 0.5)
    assert res.lhs == pytest.approx(res.rhs, rel=1e-14)
    zero = cov_functional(SparseFamily(L, (Q,), 1.0), {Q: 0.0}, w, 2.0)
    assert zero == (0.0, 0.0)
    with pytest.raises(KeyError):
        cov_functional(SparseFamily(L, (Q,), 1.0), {}, w, 2.0)


def test_cov_comparable_on_random_families():
    L = standard_lattice()
    rng = np.random.default_rng(5)
    ratios = []
    for _ in range(20):
        S = random_sparse_family(rng, L, L.cube(0, 0), 0.5, max_depth=7)
        w = random_step_on_lattice(rng, L, L.cube(0, 0), 8, zero_fraction=0.0, spread=1.0)
        res = cov_functional(S, {Q: float(rng.exponential()) for Q in S.cubes}, w, 2.0)
        ratios.append(res.lhs / res.rhs)
    assert max(max(ratios), 1 / min(ratios)) <= 32
