import numpy as np
import pytest

from sharpweights.dyadic import (
    DyadicCube,
    GenerationCapError,
    children,
    dyadic_cover,
    standard_lattice,
    three_lattices,
)
from sharpweights.stepfn import Interval


def test_children_of_unit_interval():
    L = standard_lattice()
    Q = L.cube(0, 0)
    kids = children(Q, L)
    assert [L.interval(c).to_list() for c in kids] == [[0.0, 0.5], [0.5, 1.0]]
    assert sum(L.volume(c) for c in kids) == L.volume(Q)
    assert len([g for c in kids for g in children(c, L)]) == 4


@pytest.mark.parametrize("lat", range(3))
def test_children_tile_parent_on_every_lattice(lat):
    L = three_lattices()[lat]
    rng = np.random.default_rng(lat)
    for _ in range(50):
        Q = L.locate(float(rng.uniform(-50, 50)), int(rng.integers(-5, 10)))
        I = L.interval(Q)
        a, b = (L.interval(c) for c in L.children(Q))
        assert a.a == pytest.approx(I.a, abs=1e-12) and b.b == pytest.approx(I.b, abs=1e-12)
        assert a.b == pytest.approx(b.a, abs=1e-12)
        assert all(L.parent(c) == Q for c in L.children(Q))


def test_generation_cap_is_an_error():
    L = standard_lattice()
    with pytest.raises(GenerationCapError):
        L.cube(L.cap + 1, 0)
    with pytest.raises(GenerationCapError):
        L.children(L.cube(L.cap, 0))


def test_cover_examples():
    Ls = three_lattices()
    _, R = dyadic_cover(Interval(0.4, 0.9), Ls)
    I = Ls[R.lattice_id].interval(R)
    assert I.a <= 0.4 and I.b >= 0.9 and I.length <= 1.5
    lid, R = dyadic_cover(Interval(0.25, 0.5), Ls)
    assert Ls[lid].interval(R).length == 0.25
    lid, R = dyadic_cover(Interval(0.0, 8.0), Ls)
    assert lid == 0 and Ls[0].interval(R).to_list() == [0.0, 8.0]
    lid, R = dyadic_cover(Interval(0.9, 1.1), Ls)
    I = Ls[lid].interval(R)
    assert lid != 0 and I.length <= 0.6 and I.a <= 0.9 and I.b >= 1.1


def test_cover_ratio_on_random_intervals():
    Ls = three_lattices()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        a = float(rng.uniform(0, 2**20))
        ell = float(2.0 ** rng.uniform(-10, 15))
        lid, R = dyadic_cover(Interval(a, a + ell), Ls)
        I = Ls[lid].interval(R)
        assert I.a <= a and I.b >= a + ell
        worst = max(worst, I.length / ell)
    assert worst <= 3.0


@pytest.mark.parametrize("lat", range(3))
def test_nestedness(lat):
    L = three_lattices()[lat]
    rng = np.random.default_rng(10 + lat)
    cubes = [L.locate(float(rng.uniform(0, 4)), int(rng.integers(0, 6))) for _ in range(60)]
    for P in cubes:
        for Q in cubes:
            I, J = L.interval(P), L.interval(Q)
            disjoint = I.b <= J.a + 1e-12 or J.b <= I.a + 1e-12
            assert disjoint or L.contains(P, Q) or L.contains(Q, P)


def test_common_ancestor_and_id_roundtrip():
    L = three_lattices()[2]
    P, Q = L.locate(0.1, 8), L.locate(3.7, 8)
    g = 8
    while L.ancestor(P, g) != L.ancestor(Q, g):
        g -= 1
    assert g >= -8
    c = DyadicCube.parse(P.id)
    assert c == P and P.id.startswith("L2/g8/i")


def test_cubes_in_window_tile():
    L = three_lattices()[1]
    Q = L.locate(0.3, 0)
    I = L.interval(Q)
    cubes = L.cubes_in(I, 4)
    assert len(cubes) == 16
    assert sum(L.interval(c).length for c in cubes) == pytest.approx(I.length)
