"""Seeded randomized property suites.

Every suite draws its instances from its own child of one ``SeedSequence``,
so changing the size of one suite leaves the others untouched.  A violated
property becomes a failed check carrying the serialized offending instance.
"""
from __future__ import annotations

import math
import time
from typing import Optional

import numpy as np
import scipy.linalg

from . import fixtures
from .dyadic import standard_lattice, three_lattices
from .experiments import ExperimentReport, _map
from .functionals import SearchConfig, ap_duality_check, cov_functional
from .matweight import (
    cg_maximal,
    cg_strong_norm_estimate,
    matrix_ap,
    mesh_cubes,
    norms_commute,
    prop_pr1_check,
    prop_pr2_check,
    random_matrix_weight,
    reducing_operator,
    scap_check,
)
from .operators import dyadic_maximal, weak_lp_bruteforce, weak_lp_quasinorm
from .sparse import (
    SparseFamily,
    average,
    cz_decompose,
    overlap_distribution,
    random_sparse_family,
    random_step_on_lattice,
    spb_construct,
    split_bound,
    split_sparse,
    sppr_select,
    vanishing_check,
    verify_sparseness,
)
from .stepfn import Interval, StepFunction, integrate
from .weights import build_power_weight, build_weight_large_p, build_weight_small_p

DEFAULT_SIZES = {"sparse": 200, "matrix": 50, "cov": 100, "duality": 50, "oracle": 1000}
SUITES = ("sparse", "matrix", "cov", "duality", "oracle")


class _Tally:
    """Worst value of one property over a suite, with the first offending instance."""

    def __init__(self, name: str, threshold: str, larger_is_worse: bool = True):
        self.name, self.threshold, self.up = name, threshold, larger_is_worse
        self.worst = -math.inf if larger_is_worse else math.inf
        self.count = 0
        self.failures = 0
        self.witness = None

    def add(self, value: float, ok: bool, witness=None):
        self.count += 1
        if (value > self.worst) if self.up else (value < self.worst):
            self.worst = value
        if not ok:
            self.failures += 1
            if self.witness is None:
                self.witness = witness() if callable(witness) else witness

    def emit(self, rep: ExperimentReport, suite: str):
        w = None if self.witness is None else dict(self.witness, failures=self.failures)
        value = self.worst if self.count else 0.0
        rep.check(f"{suite}: {self.name}", value, self.threshold, self.failures == 0 and self.count > 0, w)


# -- sparse ------------------------------------------------------------------


def _cz_invariants(cz, psi, gamma):
    """Largest violation of: mean zero per cube, disjointness, ``g <= 2 gamma``, selection above gamma."""
    L = cz.lattice
    ivs = cz.omega()
    mean = 0.0
    for I in ivs:
        scale = integrate(psi, I)
        mean = max(mean, abs(integrate(cz.bad, I)) / scale)
    overlap = any(ivs[k].b > ivs[k + 1].a for k in range(len(ivs) - 1))
    nested = any(L.contains(P, Q) for P in cz.cubes for Q in cz.cubes if P != Q)
    gmax = float(np.max(cz.good.values)) / gamma
    low = min((average(psi, I) / gamma for I in ivs), default=math.inf)
    return mean, overlap or nested, gmax, low


def sparse_suite(rng: np.random.Generator, n: int, rep: ExperimentReport):
    L = standard_lattice()
    top = L.cube(0, 0)
    sel = _Tally("selection ratio int_Q phi / int_G_Q phi", "<= 8")
    splits = {m: _Tally(f"split m={m} sparseness minus bound", ">= 0", larger_is_worse=False) for m in (2, 3)}
    vanish = _Tally("T b off Omega relative to |T||b|", "<= 1e-12")
    cz_mean = _Tally("CZ mean of b per cube relative", "<= 1e-12")
    cz_disj = _Tally("CZ cubes overlapping", "== 0")
    cz_good = _Tally("CZ max g / gamma", "<= 2")
    cz_low = _Tally("CZ min selected average / gamma", "> 1", larger_is_worse=False)
    spb = _Tally("stopping-time domination lhs^r / (2^r sum)", "<= 1")
    overlap = []
    for t in range(n):
        eta = 7.0 / 8.0 if t % 2 == 0 else 0.5
        S = random_sparse_family(rng, L, top, eta)
        phi = random_step_on_lattice(rng, L, top, 10)
        wit = lambda: {"instance": t, "family": S.to_dict(), "phi": phi.to_dict()}
        for m in (2, 3):
            target = split_bound(S.eta, m)
            got = min(verify_sparseness(F.cubes, L) for F in split_sparse(S, m)) - target
            splits[m].add(got, got >= -1e-12 * target, wit)
        if eta == 7.0 / 8.0:
            gamma = float(np.exp(rng.normal()))
            r = sppr_select(S, phi, gamma).worst
            sel.add(r, r <= 8.0, lambda: dict(wit(), gamma=gamma))
            dist = overlap_distribution(S.cubes, top, L)
            overlap.extend((m, dist[m]) for m in dist if m > 0 and dist[m] > 0)
        base = average(phi, L.interval(top))
        gamma = base * float(1.0 + rng.exponential(2.0))
        cz = cz_decompose(phi, gamma, L, top)
        mean, bad_disj, gmax, low = _cz_invariants(cz, phi, gamma)
        czw = lambda: dict(wit(), gamma=gamma)
        cz_mean.add(mean, mean <= 1e-12, czw)
        cz_disj.add(float(bad_disj), not bad_disj, czw)
        cz_good.add(gmax, gmax <= 2.0, czw)
        cz_low.add(low, low > 1.0, czw)
        lam = {Q: StepFunction.indicator(*L.interval(Q).to_list(), height=float(rng.random())) for Q in S.cubes}
        v = vanishing_check(lam, S, cz)
        vanish.add(v.max_abs / max(v.scale, 1e-300), v.ok, lambda: dict(czw(), x=v.x))
        # the matrix stopping time; p = 3 on every fifth instance keeps the suite fast
        p = 3.0 if t % 5 == 4 else 2.0
        W = random_matrix_weight(rng, 2, 8, 1.0)
        f = rng.normal(size=(W.size, 2)) * (rng.random((W.size, 1)) < 0.7)
        _, srep = spb_construct(L.cube(0, 0), W, p, f, samples=1000, rng=rng)
        worst = max(srep.worst_ratio.values())
        spb.add(worst, srep.holds, lambda: {"instance": t, "p": p, "W": W.to_dict(), "f": f.tolist(),
                                             "report": srep.to_dict()})
    for T in (sel, splits[2], splits[3], vanish, cz_mean, cz_disj, cz_good, cz_low, spb):
        T.emit(rep, "sparse")
    if overlap:
        # measure{count > m} <= theta^m fitted as the largest per-level decay
        theta = max(mu ** (1.0 / m) for m, mu in overlap if m >= 1)
        rep.bands["sparse_overlap_theta"] = theta
        rep.check("sparse: overlap decay theta", theta, f"<= {fixtures.OVERLAP_THETA}", theta <= fixtures.OVERLAP_THETA)


# -- matrix ------------------------------------------------------------------


def matrix_suite(rng: np.random.Generator, n: int, rep: ExperimentReport, cubes_per_weight: int = 3):
    exact = _Tally("p=2 reducing operator |ratio - 1|", "<= 1e-8")
    two_sided = _Tally("p=3 reducing operator c_high / c_low", f"<= {math.sqrt(2) * 1.05:.6g}")
    pr1 = _Tally("Pr1 ratio", "<= 4")
    pr2 = _Tally("Pr2 ratio at s = 1 + 1/(8[W])", f"<= {fixtures.PR2_BOUND}")
    scap = _Tally("scalar A_p of |W^(1/p)u|^p / [W]_A_p", "<= 1")
    strong = _Tally("strong estimate / [W]^(1/(p-1))", f"<= {fixtures.STRONG_C}")
    comm = _Tally("| ||AB|| - ||BA|| | relative", "<= 1e-10")
    for t in range(n):
        W = random_matrix_weight(rng, 2, 8, 1.0)
        cands = mesh_cubes(W)
        wit = lambda: {"instance": t, "W": W.to_dict()}
        for p in (2.0, 3.0):
            ap = matrix_ap(W, p, cands).value
            for k in rng.choice(len(cands), size=cubes_per_weight, replace=False):
                c = cands[int(k)]
                V = reducing_operator(c, p, W)
                cw = lambda: dict(wit(), p=p, cube=c.label)
                if p == 2.0:
                    dev = max(abs(V.c_low - 1.0), abs(V.c_high - 1.0))
                    exact.add(dev, dev <= 1e-8, cw)
                else:
                    two_sided.add(V.ratio, V.ratio <= math.sqrt(2) * 1.05, cw)
                f = rng.normal(size=(W.size, 2))
                r1 = prop_pr1_check(c, p, W, f, V)
                pr1.add(r1.ratio, r1.ratio <= 4.0 and r1.ratio <= r1.bound * (1 + 1e-12), cw)
                r2 = prop_pr2_check(c, p, W, ap=ap, V=V)
                pr2.add(r2.ratio, r2.ratio <= fixtures.PR2_BOUND, cw)
                y = int(rng.integers(W.size))
                A, B = V.A, W.power(-1.0 / p)[y]
                d = norms_commute(A, B)
                comm.add(d, d <= 1e-10, cw)
            for u in rng.normal(size=(16, 2)):
                s_ap, m_ap = scap_check(W, p, u, cands)
                scap.add(s_ap / m_ap, s_ap <= m_ap * (1 + 1e-9), lambda: dict(wit(), p=p, u=u.tolist()))
            probes = [rng.normal(size=(W.size, 2)) for _ in range(3)]
            probes += [np.eye(2)[int(rng.integers(2))] * (np.arange(W.size) == int(rng.integers(W.size)))[:, None]]
            est = cg_strong_norm_estimate(W, p, probes) / ap ** (1.0 / (p - 1.0))
            strong.add(est, est <= fixtures.STRONG_C, lambda: dict(wit(), p=p))
    for T in (exact, two_sided, pr1, pr2, scap, strong, comm):
        T.emit(rep, "matrix")


# -- cov -----------------------------------------------------------------------


def cov_suite(rng: np.random.Generator, n: int, rep: ExperimentReport):
    L = standard_lattice()
    top = L.cube(0, 0)
    lo, hi = math.inf, 0.0
    first = None
    single = _Tally("singleton |lhs - rhs| / rhs", "<= 1e-12")
    for t in range(n):
        eta = 0.5 if t % 2 else 7.0 / 8.0
        S = random_sparse_family(rng, L, top, eta, max_depth=8)
        w = random_step_on_lattice(rng, L, top, 9, zero_fraction=0.0, spread=1.5)
        lam = {Q: float(rng.exponential()) for Q in S.cubes}
        res = cov_functional(S, lam, w, 2.0)
        r = res.lhs / res.rhs
        lo, hi = min(lo, r), max(hi, r)
        if first is None and not (1.0 / fixtures.COV_C <= r <= fixtures.COV_C):
            first = {"instance": t, "family": S.to_dict(), "w": w.to_dict(), "lambda": {Q.id: v for Q, v in lam.items()}}
        Q = S.cubes[int(rng.integers(len(S)))]
        lone = SparseFamily(L, (Q,), 1.0)
        p = float(rng.uniform(1.2, 4.0))
        one = cov_functional(lone, {Q: 1.0}, w, p)
        gap = abs(one.lhs - one.rhs) / one.rhs
        single.add(gap, gap <= 1e-12, {"instance": t, "cube": Q.id, "p": p, "w": w.to_dict()})
    C = max(hi, 1.0 / lo)
    rep.bands["cov_ratio"] = {"min": lo, "max": hi, "C": C}
    rep.check("cov: suite-wide C with lhs/rhs in [1/C, C]", C, f"<= {fixtures.COV_C}", C <= fixtures.COV_C, first)
    single.emit(rep, "cov")


# -- duality -------------------------------------------------------------------


def _scalar_suite_weights(rng: np.random.Generator, n: int):
    out = []
    for N in (10, 14):
        for p in (1.25, 1.5, 1.75):
            P = 2.0 ** (N + 2)
            out.append((f"small-p N={N} p={p}", build_weight_small_p(N, p), p, SearchConfig(domain=Interval(-P / 2, P))))
    for N in (16, 20):
        for p in (2.0, 3.0):
            P = 2.0 ** (N + 2)
            out.append((f"large-p N={N} p={p}", build_weight_large_p(N, p), p, SearchConfig(domain=Interval(-P / 2, P))))
    for eps in (0.25, 0.0625):
        for p in (2.0, 3.0):
            out.append((f"power eps={eps} p={p}", build_power_weight(eps), p, None))
    for t in range(n):
        edges = np.concatenate(([0.0], np.cumsum(rng.exponential(size=50))))
        w = StepFunction(edges, np.exp(rng.normal(0.0, 2.0, size=50)))
        for p in (1.5, 3.0):
            out.append((f"random #{t} p={p}", w, p, None))
    return out


def duality_suite(rng: np.random.Generator, n: int, rep: ExperimentReport, tol: float = 1e-9):
    T = _Tally("per-interval duality gap", f"<= {tol}")
    for label, w, p, cfg in _scalar_suite_weights(rng, n):
        d = ap_duality_check(w, p, cfg)
        T.add(d.max_rel_gap, d.max_rel_gap <= tol, {"weight": label, "w": w.to_dict(), "p": p})
    T.emit(rep, "duality")


# -- oracles -------------------------------------------------------------------


def _avg_oracle(f: StepFunction, a: float, b: float) -> float:
    bp, v = f.breakpoints, f.values
    lo, hi = np.maximum(bp[:-1], a), np.minimum(bp[1:], b)
    return float(np.sum(v * np.clip(hi - lo, 0.0, None))) / (b - a)


def dyadic_oracle(f: StepFunction, lattice, window_cube, x: float, depth: int) -> float:
    """Averages over every cube of every generation down to ``depth`` below the window."""
    best = -math.inf
    g0 = window_cube.generation
    W = lattice.interval(window_cube)
    for g in range(g0, g0 + depth + 1):
        for Q in lattice.cubes_in(W, g):
            I = lattice.interval(Q)
            if I.a <= x < I.b:
                best = max(best, _avg_oracle(f, I.a, I.b))
    return best


def cg_oracle(W, p: float, f: np.ndarray, x: float, mode: str) -> float:
    """Loop over candidate intervals with matrix powers from ``scipy.linalg.fractional_matrix_power``."""
    h = W.h
    px = int((x - W.base.a) // h)
    Wx = np.real(scipy.linalg.fractional_matrix_power(W.pieces[px], 1.0 / p))
    ys = [Wx @ np.real(scipy.linalg.fractional_matrix_power(W.pieces[y], -1.0 / p)) @ f[y] for y in range(W.size)]
    vals = [float(np.sqrt(np.sum(v * v))) for v in ys]
    if mode == "dyadic-local":
        spans = []
        for g in range(W.depth + 1):
            width = 2 ** (W.depth - g)
            i = (px // width) * width
            spans.append((i, i + width))
    else:
        spans = [(i, j) for i in range(px + 1) for j in range(px + 1, W.size + 1)]
    return max(sum(vals[i:j]) / (j - i) for i, j in spans)


def weak_oracle(g: StepFunction, p: float, weight: Optional[StepFunction] = None) -> float:
    """``max_v v * mu{g >= v}**(1/p)`` by a double loop over pieces."""
    bp, vals = g.breakpoints, g.values
    best = 0.0
    for v in vals:
        if v <= 0:
            continue
        mu = 0.0
        for k in range(vals.size):
            if vals[k] >= v:
                if weight is None:
                    mu += bp[k + 1] - bp[k]
                else:
                    mu += _avg_oracle(weight, bp[k], bp[k + 1]) * (bp[k + 1] - bp[k])
        best = max(best, v * mu ** (1.0 / p))
    return best


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def oracle_suite(rng: np.random.Generator, n: int, rep: ExperimentReport, grid_every: int = 20):
    dy = _Tally("dyadic_maximal vs cube enumeration", "<= 1e-10")
    cg = _Tally("cg_maximal vs fractional-power loops", "<= 1e-10")
    wk = _Tally("weak quasinorm vs double loop", "<= 1e-10")
    grid = _Tally("level-grid scan / exact", "<= 1", larger_is_worse=True)
    lattices = three_lattices()
    for t in range(n):
        # dyadic maximal on a lattice-aligned step function
        L = lattices[t % 3]
        Q0 = L.locate(float(rng.uniform(-2, 2)), 0)
        I0 = L.interval(Q0)
        depth = int(rng.integers(1, 7))
        cells = L.cubes_in(I0, depth)
        edges = np.array([L.interval(c).a for c in cells] + [I0.b])
        keep = np.concatenate(([True], rng.random(edges.size - 2) < 0.5, [True]))
        edges = edges[keep]
        f = StepFunction(edges, np.exp(rng.normal(0.0, 1.5, size=edges.size - 1)))
        x = float(rng.uniform(I0.a, I0.b))
        got, want = dyadic_maximal(f, L, x, I0), dyadic_oracle(f, L, Q0, x, depth)
        dy.add(_rel(got, want), _rel(got, want) <= 1e-10, {"lattice": L.lattice_id, "f": f.to_dict(), "x": x})
        # Christ-Goldberg maximal on a small matrix weight
        Wt = random_matrix_weight(rng, int(rng.integers(2, 4)), int(rng.integers(1, 5)), 0.8)
        p = float(rng.choice([1.5, 2.0, 3.0]))
        fv = rng.normal(size=(Wt.size, Wt.n))
        x = float(rng.uniform(0.0, 1.0))
        mode = "dyadic-local" if t % 2 == 0 else "all-mesh-intervals"
        got, want = cg_maximal(Wt, p, fv, x, mode), cg_oracle(Wt, p, fv, x, mode)
        cg.add(_rel(got, want), _rel(got, want) <= 1e-10,
               {"W": Wt.to_dict(), "p": p, "f": fv.tolist(), "x": x, "mode": mode})
        # weak quasinorm, with ties and an optional weight
        k = int(rng.integers(1, 13))
        edges = np.concatenate(([0.0], np.cumsum(rng.exponential(size=k))))
        vals = rng.integers(0, 5, size=k).astype(float) if t % 3 == 0 else np.abs(rng.normal(size=k))
        g = StepFunction(edges, vals)
        q = float(rng.uniform(0.5, 4.0))
        wt = None
        if t % 4 == 1:
            wt = StepFunction(np.linspace(edges[0], edges[-1], 7), np.exp(rng.normal(size=6)))
        got, want = weak_lp_quasinorm(g, q, weight=wt).value, weak_oracle(g, q, wt)
        wk.add(_rel(got, want), _rel(got, want) <= 1e-10,
               {"g": g.to_dict(), "p": q, "weight": None if wt is None else wt.to_dict()})
        if t % grid_every == 0 and got > 0:
            scan = weak_lp_bruteforce(g, q, weight=wt)
            grid.add(scan / got, scan <= got * (1 + 1e-12), {"g": g.to_dict(), "p": q})
    for T in (dy, cg, wk, grid):
        T.emit(rep, "oracle")


_RUNNERS = {
    "sparse": sparse_suite,
    "matrix": matrix_suite,
    "cov": cov_suite,
    "duality": duality_suite,
    "oracle": oracle_suite,
}


def _run_one(args):
    name, child, n = args
    rep = ExperimentReport(name, {})
    t0 = time.perf_counter()
    _RUNNERS[name](np.random.default_rng(child), n, rep)
    return rep.checks, rep.bands, time.perf_counter() - t0


def run_property_suites(seed: int = 0, sizes: Optional[dict] = None, only=None, jobs: int = 1) -> ExperimentReport:
    """Run the randomized suites; ``sizes`` overrides instance counts per suite.

    With ``jobs > 1`` the suites run in separate processes; the report is the
    same as for a sequential run because every suite owns its seed.
    """
    sz = dict(DEFAULT_SIZES)
    if sizes:
        unknown = set(sizes) - set(sz)
        if unknown:
            raise ValueError(f"unknown suites {sorted(unknown)}")
        sz.update(sizes)
    names = SUITES if only is None else tuple(only)
    for name in names:
        if name not in _RUNNERS:
            raise ValueError(f"unknown suite {name!r}")
    rep = ExperimentReport("suites", {"sizes": {k: sz[k] for k in names}}, seed=seed)
    children = dict(zip(SUITES, np.random.SeedSequence(seed).spawn(len(SUITES))))
    results = _map(_run_one, [(name, children[name], sz[name]) for name in names], jobs)
    rep.timing = {}
    for name, (checks, bands, elapsed) in zip(names, results):
        rep.checks.extend(checks)
        rep.bands.update(bands)
        rep.timing[name] = elapsed
    rep.wall_clock = sum(rep.timing.values())
    return rep
