"""Sparse families of dyadic cubes and the stopping-time constructions built on them.

All families live in one lattice.  Containment is decided on cube indices, so
sparseness ratios are exact: the union of the strict family descendants of a
cube is the disjoint union of its nearest family descendants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .dyadic import DyadicCube, DyadicLattice
from .stepfn import Interval, StepFunction, integrate


class SparsenessError(ValueError):
    pass


# -- forest structure ------------------------------------------------------


def _single_lattice(cubes: Iterable[DyadicCube], lattice: DyadicLattice):
    for Q in cubes:
        if Q.lattice_id != lattice.lattice_id:
            raise ValueError(f"cube {Q} is not in lattice L{lattice.lattice_id}; families cannot mix lattices")


def family_parents(cubes: Iterable[DyadicCube], lattice: DyadicLattice) -> dict:
    """Nearest strict ancestor inside the family for every cube (``None`` for roots)."""
    cubes = set(cubes)
    _single_lattice(cubes, lattice)
    if not cubes:
        return {}
    top = min(Q.generation for Q in cubes)
    parents = {}
    for Q in cubes:
        R, found = Q, None
        while R.generation > top:
            R = lattice.parent(R)
            if R in cubes:
                found = R
                break
        parents[Q] = found
    return parents


def family_depths(cubes: Iterable[DyadicCube], lattice: DyadicLattice) -> dict:
    """Number of strict family ancestors of every cube."""
    parents = family_parents(cubes, lattice)
    depth = {}

    def get(Q):
        if Q not in depth:
            P = parents[Q]
            depth[Q] = 0 if P is None else get(P) + 1
        return depth[Q]

    for Q in sorted(parents, key=lambda c: c.generation):
        get(Q)
    return depth


def _core_ratios(cubes, lattice: DyadicLattice) -> dict:
    parents = family_parents(cubes, lattice)
    covered = {Q: 0.0 for Q in parents}
    for R, P in parents.items():
        if P is not None:
            covered[P] += lattice.volume(R)
    return {Q: 1.0 - covered[Q] / lattice.volume(Q) for Q in parents}


def verify_sparseness(cubes: Iterable[DyadicCube], lattice: DyadicLattice) -> float:
    """``min_Q |E_Q| / |Q|`` with ``E_Q = Q`` minus its strict family descendants; 1 for an empty family."""
    ratios = _core_ratios(list(cubes), lattice)
    return min(ratios.values(), default=1.0)


@dataclass(frozen=True, eq=False)
class SparseFamily:
    lattice: DyadicLattice
    cubes: tuple
    eta: float

    def __post_init__(self):
        cubes = tuple(sorted(set(self.cubes)))
        object.__setattr__(self, "cubes", cubes)
        if not 0 < self.eta <= 1:
            raise ValueError("sparseness parameter must lie in (0, 1]")
        actual = verify_sparseness(cubes, self.lattice)
        if actual < self.eta * (1 - 1e-12):
            raise SparsenessError(f"family is only {actual:.6g}-sparse, {self.eta:.6g} was claimed")
        object.__setattr__(self, "measured_eta", actual)

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def interval(self, Q: DyadicCube) -> Interval:
        return self.lattice.interval(Q)

    def cores(self) -> dict:
        """``E_Q`` as sorted lists of disjoint intervals."""
        parents = family_parents(self.cubes, self.lattice)
        kids = {Q: [] for Q in self.cubes}
        for R, P in parents.items():
            if P is not None:
                kids[P].append(self.lattice.interval(R))
        return {Q: _subtract(self.lattice.interval(Q), kids[Q]) for Q in self.cubes}

    def to_dict(self) -> dict:
        return {
            "lattice": self.lattice.lattice_id,
            "shift": list(self.lattice.shift),
            "base": self.lattice.base,
            "origin": self.lattice.origin,
            "eta": self.eta,
            "cubes": [Q.id for Q in self.cubes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SparseFamily":
        L = DyadicLattice(int(d["lattice"]), tuple(d["shift"]), float(d["base"]), float(d["origin"]))
        return cls(L, tuple(DyadicCube.parse(s) for s in d["cubes"]), float(d["eta"]))


def _subtract(I: Interval, holes: Sequence[Interval]) -> list[Interval]:
    out, x = [], I.a
    for H in sorted(holes, key=lambda J: J.a):
        if H.a > x:
            out.append(Interval(x, H.a))
        x = max(x, H.b)
    if x < I.b:
        out.append(Interval(x, I.b))
    return out


# -- splitting -------------------------------------------------------------


def split_bound(eta: float, m: int) -> float:
    return m / (m + 1.0 / eta - 1.0)


def _greedy_split(S: SparseFamily, m: int) -> list[list]:
    """Finest cubes first; each cube joins the class where its own core is largest."""
    classes = [[] for _ in range(m)]
    for Q in sorted(S.cubes, key=lambda c: -c.generation):
        best, arg = -1.0, 0
        for r in range(m):
            ratio = _core_ratios(classes[r] + [Q], S.lattice)[Q]
            if ratio > best + 1e-15:
                best, arg = ratio, r
        classes[arg].append(Q)
    return classes


def split_sparse(S: SparseFamily, m: int) -> list[SparseFamily]:
    """Split ``S`` into ``m`` families each at least ``m/(m + 1/eta - 1)``-sparse.

    Cubes go to the residue class of their family depth modulo ``m``.  If a
    class fails verification a greedy reassignment is tried before giving up.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    target = split_bound(S.eta, m)
    depth = family_depths(S.cubes, S.lattice)
    classes = [[Q for Q in S.cubes if depth[Q] % m == r] for r in range(m)]
    if any(verify_sparseness(c, S.lattice) < target * (1 - 1e-12) for c in classes):
        classes = _greedy_split(S, m)
        worst = min(verify_sparseness(c, S.lattice) for c in classes)
        if worst < target * (1 - 1e-12):
            raise SparsenessError(f"split reached only {worst:.6g}, needed {target:.6g}")
    return [SparseFamily(S.lattice, tuple(c), target) for c in classes]


# -- selection -------------------------------------------------------------


@dataclass
class SpprSelection:
    F: list
    G: dict
    ratios: dict  # Q -> int_Q phi / int_{G_Q} phi

    @property
    def worst(self) -> float:
        return max(self.ratios.values(), default=0.0)


def average(phi: StepFunction, I: Interval) -> float:
    return integrate(phi, I) / I.length


def sppr_select(S: SparseFamily, phi: StepFunction, gamma: float) -> SpprSelection:
    """``F = {Q : gamma <= avg_Q phi <= 4 gamma}`` and ``G_Q = Q`` minus the strict F-descendants."""
    eta = verify_sparseness(S.cubes, S.lattice)
    if eta < 7.0 / 8.0 * (1 - 1e-12):
        raise SparsenessError(f"selection needs a 7/8-sparse family, this one is {eta:.6g}-sparse")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    L = S.lattice
    F = [Q for Q in S.cubes if gamma <= average(phi, L.interval(Q)) <= 4 * gamma]
    parents = family_parents(F, L)
    holes = {Q: [] for Q in F}
    for R, P in parents.items():
        if P is not None:
            holes[P].append(L.interval(R))
    G, ratios = {}, {}
    for Q in F:
        I = L.interval(Q)
        G[Q] = _subtract(I, holes[Q])
        whole = integrate(phi, I)
        part = whole - sum(integrate(phi, H) for H in holes[Q])
        ratios[Q] = whole / part if part > 0 else math.inf
    return SpprSelection(F, G, ratios)


# -- Calderon-Zygmund decomposition ----------------------------------------


@dataclass
class CZDecomposition:
    gamma: float
    lattice: DyadicLattice
    window: DyadicCube
    cubes: list
    good: StepFunction
    bad: StepFunction

    def omega(self) -> list[Interval]:
        return sorted((self.lattice.interval(Q) for Q in self.cubes), key=lambda I: I.a)


def _constant_on(f: StepFunction, I: Interval) -> bool:
    lo, hi = np.searchsorted(f.breakpoints, [I.a, I.b], side="right")
    return hi - lo == 0 or (hi - lo == 1 and f.breakpoints[lo] == I.b)


class _Averager:
    """Averages over subintervals of a window from one prefix-sum table.

    Values within a relative ``1e-9`` of a threshold are recomputed with
    :func:`integrate` before a decision is taken.
    """

    def __init__(self, f: StepFunction, W: Interval):
        left, right, vals = f.pieces(W)
        self.f = f
        self.nodes = np.concatenate((left, right[-1:]))
        self.G = np.concatenate(([0.0], np.cumsum(vals * (right - left))))

    def above(self, I: Interval, gamma: float) -> bool:
        Ga, Gb = np.interp([I.a, I.b], self.nodes, self.G)
        avg = (Gb - Ga) / I.length
        if abs(avg - gamma) <= 1e-9 * max(abs(gamma), 1e-300):
            avg = average(self.f, I)
        return avg > gamma


def cz_decompose(psi: StepFunction, gamma: float, lattice: DyadicLattice, window: DyadicCube) -> CZDecomposition:
    """Maximal cubes of ``D(window)`` with ``avg psi > gamma``, and ``psi = g + b``."""
    W = lattice.interval(window)
    if np.any(psi.pieces(W)[2] < 0):
        raise ValueError("psi must be nonnegative")
    if average(psi, W) > gamma:
        raise ValueError("gamma is below the average over the window; the window itself would be selected")
    avg = _Averager(psi, W)
    cubes, stack = [], [window]
    while stack:
        R = stack.pop()
        I = lattice.interval(R)
        if R != window and avg.above(I, gamma):
            cubes.append(R)
        elif not _constant_on(psi, I):
            stack.extend(lattice.children(R))
    cubes.sort()
    ivs = [lattice.interval(Q) for Q in cubes]
    left, right, vals = psi.pieces(W)
    edges = np.unique(np.concatenate((left, right, [I.a for I in ivs], [I.b for I in ivs])))
    mid = 0.5 * (edges[:-1] + edges[1:])
    psi_v = psi(mid)
    good = psi_v.copy()
    bad = np.zeros_like(psi_v)
    for I in ivs:
        sel = (mid >= I.a) & (mid < I.b)
        avg = average(psi, I)
        good[sel] = avg
        bad[sel] = psi_v[sel] - avg
    return CZDecomposition(gamma, lattice, window, cubes, StepFunction(edges, good), StepFunction(edges, bad))


@dataclass
class VanishingWitness:
    max_abs: float
    scale: float
    x: Optional[float]

    @property
    def ok(self) -> bool:
        return self.max_abs <= 1e-12 * max(self.scale, 1e-300)


def vanishing_check(lam: Optional[dict], S: SparseFamily, cz: CZDecomposition) -> VanishingWitness:
    """``max |T_{lam,S} b|`` off the union of the selected cubes, with the scale it is measured against."""
    from .operators import weighted_sparse_apply

    if S.lattice.lattice_id != cz.lattice.lattice_id or S.lattice.shift != cz.lattice.shift:
        raise ValueError("the sparse family and the decomposition must share one lattice")
    if not S.cubes:
        return VanishingWitness(0.0, 0.0, None)
    Tb = weighted_sparse_apply(lam, S, cz.bad)
    absb = StepFunction(cz.bad.breakpoints, np.abs(cz.bad.values))
    scale = float(np.max(np.abs(weighted_sparse_apply(lam, S, absb).values)))
    mid = 0.5 * (Tb.breakpoints[:-1] + Tb.breakpoints[1:])
    off = np.ones(mid.size, dtype=bool)
    for I in cz.omega():
        off &= ~((mid >= I.a) & (mid < I.b))
    vals = np.abs(Tb.values[off])
    if vals.size == 0:
        return VanishingWitness(0.0, scale, None)
    k = int(np.argmax(vals))
    return VanishingWitness(float(vals[k]), scale, float(mid[off][k]))


# -- level families --------------------------------------------------------


@dataclass
class LevelFamily:
    k: int
    cubes: list
    maximal: list


class LevelPartition(list):
    """List of :class:`LevelFamily`; cubes with zero average are kept in ``zero``."""

    def __init__(self, families, zero):
        super().__init__(families)
        self.zero = zero


def level_index(avg: float, base: float = 4.0) -> int:
    """The ``k`` with ``base**(-k-1) < avg <= base**(-k)``."""
    k = math.floor(-math.log(avg) / math.log(base))
    while avg > base ** (-k):
        k -= 1
    while avg <= base ** (-k - 1):
        k += 1
    return k


def level_families(S: SparseFamily, phi: StepFunction, base: float = 4.0) -> LevelPartition:
    groups, zero = {}, []
    for Q in S.cubes:
        a = average(phi, S.lattice.interval(Q))
        if a <= 0:
            zero.append(Q)
            continue
        groups.setdefault(level_index(a, base), []).append(Q)
    fams = []
    for k in sorted(groups):
        parents = family_parents(groups[k], S.lattice)
        fams.append(LevelFamily(k, sorted(groups[k]), sorted(Q for Q, P in parents.items() if P is None)))
    return LevelPartition(fams, zero)


def overlap_distribution(F: Iterable[DyadicCube], R: DyadicCube, lattice: DyadicLattice) -> dict:
    """``m -> |{x in R : #{Q' in F, Q' inside R, x in Q'} > m}|`` for ``m = 0 .. max count``."""
    inside = [Q for Q in F if lattice.contains(R, Q)]
    if not inside:
        return {0: 0.0}
    ivs = [lattice.interval(Q) for Q in inside]
    edges = np.unique(np.concatenate([[I.a, I.b] for I in ivs]))
    mid = 0.5 * (edges[:-1] + edges[1:])
    count = np.zeros(mid.size, dtype=np.int64)
    for I in ivs:
        count += (mid >= I.a) & (mid < I.b)
    lens = np.diff(edges)
    return {m: float(np.sum(lens[count > m])) for m in range(int(count.max()) + 1)}


# -- the matrix stopping-time construction ---------------------------------


@dataclass
class SpbReport:
    points: int
    worst_ratio: dict  # r -> max over sampled x of lhs**r / rhs(r)
    omega_fractions: list
    holds: bool

    def to_dict(self):
        return {
            "points": self.points,
            "worst_ratio": {str(r): v for r, v in self.worst_ratio.items()},
            "max_omega_fraction": max(self.omega_fractions, default=0.0),
            "holds": self.holds,
        }


def spb_construct(Q: DyadicCube, W, p, f, reducer: Optional[Callable] = None, r_values=None,
                  samples: int = 1000, rng: Optional[np.random.Generator] = None):
    """Stopping-time sparse family for the local dyadic Christ-Goldberg maximal function.

    ``Q`` is a cube of the standard lattice on the mesh of ``W``.  On each
    selected cube ``R`` the stopping set is where the dyadic maximal function
    of ``|V_R**-1 W**(-1/p) f|`` exceeds twice its average over ``R``; its
    maximal cubes are selected next.  Returns the family and a report of the
    pointwise domination checked at ``samples`` uniform points of ``Q``.
    """
    from .matweight import Candidate, cg_maximal_pieces, op_norm, reducing_operator

    p = float(p)
    L = DyadicLattice(0, (0,), W.base.length, W.base.a)
    if Q.lattice_id != 0 or Q.generation < 0 or Q.generation > W.depth:
        raise ValueError("Q must be a mesh cube of the standard lattice")
    f = np.asarray(f, dtype=np.float64).reshape(W.size, W.n)
    r_values = (1.0, p) if r_values is None else tuple(r_values)
    reducer = reducer or (lambda c: reducing_operator(c, p, W).A)
    Wm = W.power(-1.0 / p)
    Wp = W.power(1.0 / p)

    def span(R):
        width = 2 ** (W.depth - R.generation)
        return R.index[0] * width, (R.index[0] + 1) * width

    family, data, fractions = [], {}, []
    stack = [Q]
    while stack:
        R = stack.pop()
        if R.generation > W.depth:
            raise RuntimeError("stopping-time iteration went below the mesh")
        i, j = span(R)
        idx = np.arange(i, j)
        V = reducer(Candidate(R.id, L.interval(R), idx, np.full(j - i, 1.0 / (j - i))))
        Vi = np.linalg.inv(V)
        phi = np.linalg.norm(np.einsum("ab,ybc,yc->ya", Vi, Wm[i:j], f[i:j]), axis=-1)
        avg = float(phi.mean())
        family.append(R)
        data[R] = (i, j, V, avg)
        if avg == 0:
            fractions.append(0.0)
            continue
        # maximal subcubes with average above 2 avg, found top-down
        picked, todo = [], [R]
        while todo:
            C = todo.pop()
            a, b = span(C)
            if C != R and phi[a - i : b - i].mean() > 2 * avg:
                picked.append(C)
            elif b - a > 1:
                todo.extend(L.children(C))
        frac = sum(span(C)[1] - span(C)[0] for C in picked) / (j - i)
        fractions.append(frac)
        if frac > 0.5:
            raise RuntimeError(f"stopping set covers {frac} of {R}")
        stack.extend(picked)

    S = SparseFamily(L, tuple(family), 0.5)
    rng = rng or np.random.default_rng(0)
    IQ = L.interval(Q)
    pts = np.sort(rng.uniform(IQ.a, IQ.b, size=samples))
    # every quantity below is constant on mesh pieces; evaluate at the piece of each point
    xs = np.minimum(((pts - W.base.a) / W.h).astype(np.int64), W.size - 1)
    M = cg_maximal_pieces(W, p, f, "dyadic-local", Q.generation)
    cache = {}
    worst = {r: 0.0 for r in r_values}
    for x in xs.tolist():
        if x in cache:
            continue
        terms = []
        for R in family:
            i, j, V, avg = data[R]
            if i <= x < j:
                terms.append(float(op_norm(Wp[x] @ V)) * avg)
        terms = cache[x] = np.array(terms)
        for r in r_values:
            rhs = 2.0**r * np.sum(terms**r)
            lhs = M[x] ** r
            worst[r] = max(worst[r], lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf))
    holds = all(v <= 1 + 1e-10 for v in worst.values())
    return S, SpbReport(int(pts.size), worst, fractions, holds)


# -- random families for the suites ----------------------------------------


def random_sparse_family(rng: np.random.Generator, lattice: DyadicLattice, top: DyadicCube, eta: float,
                         max_depth: int = 10, max_step: int = 5) -> SparseFamily:
    """Random ``eta``-sparse family below ``top``.

    Each selected cube picks a random depth offset ``k`` and keeps at most
    ``floor((1 - eta) 2**k)`` of its generation-``k`` descendants.
    """
    cubes, stack = [], [top]
    while stack:
        Q = stack.pop()
        cubes.append(Q)
        room = max_depth - (Q.generation - top.generation)
        if room <= 0:
            continue
        k = int(rng.integers(1, min(max_step, room) + 1))
        allowed = int(math.floor((1 - eta) * 2**k + 1e-12))
        if allowed == 0:
            continue
        count = int(rng.integers(0, allowed + 1))
        subs = list(lattice.descendants(Q, k))[-(2**k):]
        for c in rng.choice(len(subs), size=count, replace=False):
            stack.append(subs[int(c)])
    return SparseFamily(lattice, tuple(cubes), eta)


def random_step_on_lattice(rng: np.random.Generator, lattice: DyadicLattice, top: DyadicCube, depth: int,
                           zero_fraction: float = 0.3, spread: float = 2.0) -> StepFunction:
    """Nonnegative step function constant on the generation ``top + depth`` cubes of ``top``."""
    I = lattice.interval(top)
    n = 2**depth
    edges = I.a + (I.b - I.a) * np.arange(n + 1) / n
    vals = np.exp(rng.normal(0.0, spread, size=n))
    vals[rng.random(n) < zero_fraction] = 0.0
    return StepFunction(edges, vals)
