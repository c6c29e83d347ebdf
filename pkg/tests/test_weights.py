
import numpy as np
import pytest

from sharpweights.stepfn import Interval, integrate, pointwise_power
from sharpweights.weights import (
    WeightFamilyParams,
    build_power_weight,
    build_weight_large_p,
    build_weight_small_p,
    dual_weight,
    floor_log2_power,
    head_set,
    k0_of,
    partition_Jk,
    power_tail_integral,
)


def _tiles(part, k):
    ivs = part.intervals()
    assert ivs[0].a == 2.0**k and ivs[-1].b == 2.0 ** (k + 1)
    assert all(x.b == y.a for x, y in zip(ivs, ivs[1:]))
    return ivs


def test_partition_k3():
    part = partition_Jk(3, 3)
    ivs = _tiles(part, 3)
    # L_3^1 is the union of the minus and plus pieces at level 1
    assert part.minus[0].length + part.plus[0].length == pytest.approx(2.5)
    assert sum(I.length for I in ivs) == 8.0


def test_partition_k4_level3():
    part = partition_Jk(4, 4)
    _tiles(part, 4)
    assert part.minus[2].length == pytest.approx(0.75)


@pytest.mark.parametrize("k,head", [(5, 5.0), (10, 10.0), (12, 12.0**1.5), (20, 19.0**2)])
def test_partition_tiles_and_halves(k, head):
    part = partition_Jk(k, head)
    ivs = _tiles(part, k)
    assert sum(I.length for I in ivs) == pytest.approx(2.0**k)
    L = 2.0**k - head
    for j in range(1, k):
        minus, plus = part.level(j)
        assert minus.length + plus.length == pytest.approx(L * 2.0**-j)
    # terminal piece: what is left next to the head
    assert part.minus[-1].a == 2.0**k + head


def test_partition_rejects_long_head():
    with pytest.raises(ValueError):
        partition_Jk(3, 8.0)


def test_k0_values():
    assert k0_of(2) == 3
    assert k0_of(3) == 7
    for p in (2.0, 2.5, 3.0):
        k = k0_of(p)
        assert k ** (p - 1) < 2 ** (k - 1)
        assert not (k - 1) ** (p - 1) < 2 ** (k - 2)


def test_floor_log2_power_exact_for_integers():
    assert floor_log2_power(8, 1.0) == 3
    assert floor_log2_power(7, 2.0) == 5  # 49
    with pytest.raises(ValueError):
        floor_log2_power(4, 0.5 + 1e-12)


@pytest.mark.parametrize("p", [1.25, 1.5, 1.75])
def test_small_p_weight_structure(p):
    N = 12
    w = build_weight_small_p(N, p)
    assert w.period == 2.0 ** (N + 2)
    assert w(0.5) == 1.0 and w(7.9) == 1.0
    for k in range(3, N + 1):
        v = w(2.0**k + 0.5 * k)
        assert v == pytest.approx(2.0 ** ((k + 1) * p))
        assert v ** (1 / p) > 2.0**k + k
    # mesh count from the tiling: [0,8), then I_k and k pieces on each side, mirrored
    assert w.n_pieces == 2 * (1 + sum(2 * k + 1 for k in range(3, N + 1)))
    mids = 0.5 * (w.breakpoints[:-1] + w.breakpoints[1:])
    np.testing.assert_array_equal(w(mids), w(2.0 ** (N + 2) - mids))


def test_small_p_adjacent_jumps():
    p, N = 1.5, 14
    w = build_weight_small_p(N, p)
    v = w.values[: w.n_pieces // 2]
    ratios = np.maximum(v[1:] / v[:-1], v[:-1] / v[1:])
    assert ratios[0] <= 2.0 ** (4 * p) * (1 + 1e-12)
    assert np.all(ratios[1:] <= 2.0 ** (p + 1) * (1 + 1e-12))


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_large_p_weight_structure(p):
    N = 20
    w = build_weight_large_p(N, p)
    k0 = k0_of(p)
    assert w(0.5) == 1.0 and w(2.0 ** (k0 + 1) - 0.5) == 1.0
    for k in range(k0 + 1, N + 1):
        assert w(2.0**k + 0.5) == pytest.approx(2.0 ** ((k + 1) * p))
    E = head_set(N, p)
    assert sum(I.length for I in E) == sum(k ** (p - 1) for k in range(k0 + 1, N + 1))


def test_large_p_sigma_mass():
    p, N = 2.0, 20
    sigma = dual_weight(build_weight_large_p(N, p), p)
    masses = [k * integrate(sigma, Interval(2.0**k, 2.0 ** (k + 1))) for k in range(k0_of(p) + 1, N + 1)]
    assert min(masses) >= 0.3


def test_parameter_domains():
    with pytest.raises(ValueError):
        build_weight_small_p(12, 2.0)
    with pytest.raises(ValueError):
        build_weight_small_p(41, 1.5)
    with pytest.raises(ValueError):
        build_weight_large_p(9, 3.0)
    with pytest.raises(ValueError):
        build_power_weight(0.75)
    with pytest.raises(ValueError):
        WeightFamilyParams("small-p", 1.5, N=4)


def test_power_weight_averages_and_value():
    eps = 0.125
    w = build_power_weight(eps)
    assert w(0.5) == 1 / eps and w(-0.5) == 1 / eps
    hs = 2.0 ** (np.arange(20, 160) / 16)
    for h in hs[::7]:
        got = integrate(w, Interval(0, h)) / h
        assert got == pytest.approx(h ** (eps - 1) / eps, rel=1e-12)
    assert w(-37.0) == w(37.0)


@pytest.mark.parametrize("eps", [0.5, 0.25, 2.0**-6])
@pytest.mark.parametrize("p", [2.0, 3.0])
def test_power_tail_integral_discretized(eps, p):
    w = build_power_weight(eps)
    sigma = dual_weight(w, p)
    q = p / (p - 1)
    left, right, vals = sigma.pieces(Interval(2.0, 2.0**10))
    mid = float(np.sum(vals * (left ** (1 - q) - right ** (1 - q)) / (q - 1)))
    tail = (p - 1) / eps * 2.0 ** (10 * -eps / (p - 1))
    assert mid + tail == pytest.approx(power_tail_integral(eps, p), rel=1e-3)


def test_dual_weight_is_power():
    w = build_weight_small_p(8, 1.5)
    s = dual_weight(w, 1.5)
    np.testing.assert_allclose(s.values, w.values ** -2.0)
    assert pointwise_power(s, -0.5).values == pytest.approx(w.values)
