"""Scalar weight functionals: A_p, A_infinity, reverse Hoelder probing and the
two-sided sparse functional.

The A_p supremum over all intervals is searched in two stages.  Stage one
evaluates every interval whose endpoints are mesh points; each start point
is one row of cumulative sums, which keeps the sums of positive masses
accurate even when the weight spans many orders of magnitude.  Stage two
moves the endpoints of the best candidates inside their neighbouring pieces
by golden-section search.  Every reported value is the exact functional of
some interval, hence a lower bound for the true supremum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .stepfn import (
    DomainError,
    Exponent,
    Interval,
    StepFunction,
    as_exponent,
    as_interval,
    integrate,
    pointwise_power,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchConfig:
    domain: Optional[Interval] = None
    passes: int = 2
    steps: int = 24
    tol: float = 1e-3
    top: int = 8

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.domain is not None:
            object.__setattr__(self, "domain", as_interval(self.domain))


@dataclass
class ApReport:
    value: float
    argmax: Interval
    refinement_residual: float
    candidates_examined: int
    stage1_value: float = field(default=float("nan"))
    p: float = field(default=float("nan"))

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax": self.argmax.to_list(),
            "refinement_residual": self.refinement_residual,
            "candidates_examined": self.candidates_examined,
            "stage1_value": self.stage1_value,
            "p": self.p,
        }


def default_domain(w: StepFunction) -> Interval:
    """One and a half periods for periodic weights, otherwise the mesh span.

    A single half-period misses intervals straddling the period seam, which
    can carry the largest averages.
    """
    x0, x1 = w.breakpoints[0], w.breakpoints[-1]
    if w.period is not None:
        return Interval(x0 - w.period / 2, x0 + w.period)
    return Interval(x0, x1)


def _domain(w, cfg: Optional[SearchConfig]) -> Interval:
    if cfg is not None and cfg.domain is not None:
        return cfg.domain
    return default_domain(w)


def _check_positive(w: StepFunction, dom: Interval):
    _, _, vals = w.pieces(dom)
    if vals.size == 0:
        raise ValueError("empty search domain")
    if np.any(vals <= 0):
        raise DomainError("the weight must be positive on the search domain")


def ap_functional(w: StepFunction, p, I) -> float:
    """``(avg_I w) (avg_I w**(-1/(p-1)))**(p-1)``, exact."""
    p = as_exponent(p)
    I = as_interval(I)
    left, right, vals = w.pieces(I)
    if np.any(vals <= 0):
        raise DomainError("A_p functional of a weight that is not positive on the interval")
    lens = right - left
    avg_w = np.sum(vals * lens) / I.length
    avg_s = np.sum(vals ** p.dual_power * lens) / I.length
    return float(avg_w * avg_s ** (p.p - 1.0))


class _Mesh:
    """Pieces of a weight on a domain, with the masses needed by the pair scans."""

    def __init__(self, w: StepFunction, dom: Interval):
        left, right, vals = w.pieces(dom)
        self.nodes = np.concatenate((left, right[-1:]))
        self.lengths = right - left
        self.values = vals

    @property
    def size(self) -> int:
        return self.values.size

    def rows(self, *masses):
        """Yield ``(i, cum_length, cum_mass_1, ...)`` for intervals starting at node ``i``."""
        for i in range(self.size):
            yield (i, np.cumsum(self.lengths[i:]), *(np.cumsum(m[i:]) for m in masses))


def _pair_values(mesh: _Mesh, p: float):
    """Per-row maxima of the A_p functional over node pairs: (values, end indices)."""
    mw = mesh.values * mesh.lengths
    ms = mesh.values ** (-1.0 / (p - 1.0)) * mesh.lengths
    best = np.empty(mesh.size)
    arg = np.empty(mesh.size, dtype=np.int64)
    for i, L, A, S in mesh.rows(mw, ms):
        vals = (A / L) * (S / L) ** (p - 1.0)
        j = int(np.argmax(vals))
        best[i] = vals[j]
        arg[i] = i + j + 1
    return best, arg


def _golden_max(f, lo: float, hi: float, steps: int):
    """Golden-section search for a maximum of ``f`` on ``[lo, hi]``; returns the best point seen."""
    seen = [(f(lo), lo), (f(hi), hi)]
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    seen += [(fc, c), (fd, d)]
    for _ in range(steps):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
            seen.append((fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
            seen.append((fd, d))
    return max(seen)


def _refine(w, p, dom: Interval, nodes: np.ndarray, i: int, j: int, cfg: SearchConfig):
    """Move the endpoints of ``[nodes[i], nodes[j]]`` inside their neighbouring pieces."""
    a, b = float(nodes[i]), float(nodes[j])
    a_lo, a_hi = float(nodes[max(i - 1, 0)]), float(nodes[min(i + 1, nodes.size - 1)])
    b_lo, b_hi = float(nodes[max(j - 1, 0)]), float(nodes[min(j + 1, nodes.size - 1)])
    best = ap_functional(w, p, Interval(a, b))
    count = 1
    residual = 0.0

    def val(lo, hi):
        nonlocal count
        count += 1
        if not hi > lo:
            return -math.inf
        return ap_functional(w, p, Interval(lo, hi))

    for _ in range(cfg.passes):
        before = best
        if a_hi > a_lo:
            fa, xa = _golden_max(lambda x: val(x, b), a_lo, min(a_hi, b), cfg.steps)
            if fa > best:
                best, a = fa, xa
        if b_hi > b_lo:
            fb, xb = _golden_max(lambda x: val(a, x), max(b_lo, a), b_hi, cfg.steps)
            if fb > best:
                best, b = fb, xb
        residual = (best - before) / best
    return best, Interval(a, b), residual, count


def ap_constant(w: StepFunction, p, cfg: Optional[SearchConfig] = None) -> ApReport:
    """Lower bound for ``[w]_{A_p}`` by node-pair enumeration plus endpoint refinement."""
    cfg = cfg or SearchConfig()
    p = as_exponent(p)
    dom = _domain(w, cfg)
    _check_positive(w, dom)
    mesh = _Mesh(w, dom)
    best, arg = _pair_values(mesh, p.p)
    examined = mesh.size * (mesh.size + 1) // 2
    i0 = int(np.argmax(best))
    stage1 = float(best[i0])
    report = ApReport(stage1, Interval(mesh.nodes[i0], mesh.nodes[arg[i0]]), 0.0, examined, stage1, p.p)
    if cfg.passes <= 0 or cfg.steps <= 0:
        return report
    order = np.argsort(best)[::-1][: cfg.top]
    residuals = []
    for i in order:
        val, I, res, count = _refine(w, p, dom, mesh.nodes, int(i), int(arg[i]), cfg)
        report.candidates_examined += count
        residuals.append(res)
        if val > report.value:
            report.value, report.argmax = val, I
            report.refinement_residual = res
    if report.value == stage1:
        report.refinement_residual = max(residuals) if residuals else 0.0
    return report


class DualityCheck(NamedTuple):
    sigma_ap: float
    w_ap_root: float
    max_rel_gap: float


def ap_duality_check(w: StepFunction, p, cfg: Optional[SearchConfig] = None) -> DualityCheck:
    """``[sigma]_{A_p'}`` against ``[w]_{A_p}**(1/(p-1))`` over the same node-pair intervals.

    ``sigma`` and ``sigma**(-1/(p'-1))`` are recomputed from the mesh values, so
    the comparison checks the identity interval by interval rather than
    assuming it.
    """
    p = as_exponent(p)
    q = Exponent(p.conjugate)
    dom = _domain(w, cfg)
    _check_positive(w, dom)
    mesh = _Mesh(w, dom)
    sigma = mesh.values ** p.dual_power
    back = sigma ** q.dual_power
    mw = mesh.values * mesh.lengths
    ms = sigma * mesh.lengths
    mb = back * mesh.lengths
    s_best = w_best = 0.0
    gap = 0.0
    for i, L, A, S, B in mesh.rows(mw, ms, mb):
        w_root = ((A / L) * (S / L) ** (p.p - 1.0)) ** (1.0 / (p.p - 1.0))
        s_val = (S / L) * (B / L) ** (q.p - 1.0)
        gap = max(gap, float(np.max(np.abs(s_val - w_root) / w_root)))
        s_best = max(s_best, float(s_val.max()))
        w_best = max(w_best, float(w_root.max()))
    return DualityCheck(s_best, w_best, gap)


def _candidate_intervals(mesh: _Mesh, limit: int):
    """Node pairs on a thinned node set (at most ``limit`` nodes)."""
    idx = np.arange(mesh.nodes.size)
    if idx.size > limit:
        idx = np.unique(np.round(np.linspace(0, idx.size - 1, limit)).astype(int))
    pts = mesh.nodes[idx]
    return [(float(pts[a]), float(pts[b])) for a in range(pts.size) for b in range(a + 1, pts.size)]


class AinfReport(NamedTuple):
    value: float
    argmax: Interval
    quadrature_residual: float
    approximate: bool = True


def ainf_constant(w: StepFunction, cfg: Optional[SearchConfig] = None, node_limit: int = 24, order: int = 8) -> AinfReport:
    """Fujii-Wilson constant ``sup_Q w(Q)**-1 int_Q M(w chi_Q)``, by Gauss quadrature per piece.

    Candidate cubes are node pairs on a thinned node set.  The quadrature
    residual is the largest relative change between ``order`` and
    ``2*order`` Gauss points over all candidates.
    """
    from .operators import maximal_of_step

    dom = _domain(w, cfg)
    _check_positive(w, dom)
    mesh = _Mesh(w, dom)
    best, best_I, resid = -math.inf, None, 0.0
    for a, b in _candidate_intervals(mesh, node_limit):
        g = w.restrict(Interval(a, b))
        mass = g.total()
        vals = []
        for n in (order, 2 * order):
            x, wt = np.polynomial.legendre.leggauss(n)
            lo, hi = g.breakpoints[:-1, None], g.breakpoints[1:, None]
            pts = 0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)
            Mx = maximal_of_step(g, pts.ravel()).reshape(pts.shape)
            vals.append(float(np.sum(0.5 * (hi - lo) * wt[None, :] * Mx)) / mass)
        resid = max(resid, abs(vals[1] - vals[0]) / vals[1])
        if vals[1] > best:
            best, best_I = vals[1], Interval(a, b)
    return AinfReport(best, best_I, resid)


class ReverseHolderProbe(NamedTuple):
    r_max: float
    c_estimate: float
    witness: Optional[Interval]
    ap: float


def _rh_holds(mesh: _Mesh, r: float):
    mw = mesh.values * mesh.lengths
    mr = mesh.values**r * mesh.lengths
    for i, L, A, R in mesh.rows(mw, mr):
        lhs = (R / L) ** (1.0 / r)
        rhs = 2.0 * A / L
        bad = np.nonzero(lhs > rhs * (1 + 1e-12))[0]
        if bad.size:
            j = int(bad[0])
            return Interval(mesh.nodes[i], mesh.nodes[i + j + 1])
    return None


def reverse_holder_probe(w: StepFunction, p, cfg: Optional[SearchConfig] = None, max_j: int = 20) -> ReverseHolderProbe:
    """Largest ``r = 1 + 2**-j`` with ``(avg w**r)**(1/r) <= 2 avg w`` on every node-pair interval.

    The inequality is monotone in ``r`` (power means increase), so the grid is
    bisected.  ``r_max`` is ``nan`` when even ``1 + 2**-max_j`` fails; the
    witness is then a violating interval.
    """
    dom = _domain(w, cfg)
    _check_positive(w, dom)
    mesh = _Mesh(w, dom)
    grid = [1.0 + 2.0**-j for j in range(max_j + 1)]
    witness = _rh_holds(mesh, grid[-1])
    ap = ap_constant(w, p, cfg).value
    if witness is not None:
        return ReverseHolderProbe(float("nan"), float("nan"), witness, ap)
    if _rh_holds(mesh, grid[0]) is None:
        lo = 0
    else:
        lo, hi = max_j, 0  # grid[lo] holds, grid[hi] fails
        while lo - hi > 1:
            mid = (lo + hi) // 2
            if _rh_holds(mesh, grid[mid]) is None:
                lo = mid
            else:
                hi = mid
    r_max = grid[lo]
    return ReverseHolderProbe(r_max, 1.0 / ((r_max - 1.0) * ap), None, ap)


class CovResult(NamedTuple):
    lhs: float
    rhs: float


def cov_functional(S, lam: dict, w: StepFunction, p) -> CovResult:
    """Both sides of the Cascante-Ortega-Verbitsky equivalence for a finite family.

    ``lhs = ||sum lam_Q chi_Q||_{L^p(w)}`` and
    ``rhs = (sum_Q lam_Q (w(Q)**-1 sum_{Q' in Q} lam_Q' w(Q'))**(p-1) w(Q))**(1/p)``.
    """
    p = as_exponent(p).p
    cubes = list(S.cubes)
    missing = [Q for Q in cubes if Q not in lam]
    if missing:
        raise KeyError(f"lambda missing on {missing[0]}")
    if not cubes:
        return CovResult(0.0, 0.0)
    ivs = {Q: S.lattice.interval(Q) for Q in cubes}
    wQ = {Q: integrate(w, ivs[Q]) for Q in cubes}
    # lhs: the sum is a step function on the cube endpoints
    edges = np.unique(np.concatenate([[I.a, I.b] for I in ivs.values()]))
    diff = np.zeros(edges.size)
    for Q in cubes:
        diff[np.searchsorted(edges, ivs[Q].a)] += lam[Q]
        diff[np.searchsorted(edges, ivs[Q].b)] -= lam[Q]
    h = StepFunction(edges, np.maximum(np.cumsum(diff)[:-1], 0.0))
    lhs = integrate(pointwise_power(h, p) * w.restrict(h.support), h.support) ** (1.0 / p)
    total = 0.0
    for Q in cubes:
        if lam[Q] == 0:
            continue
        inner = sum(lam[R] * wQ[R] for R in cubes if S.lattice.contains(Q, R))
        total += lam[Q] * (inner / wQ[Q]) ** (p - 1.0) * wQ[Q]
    return CovResult(float(lhs), float(total ** (1.0 / p)))
