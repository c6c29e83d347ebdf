"""Scalar operators evaluated exactly on step functions.

Maximal functions, Hardy operator and its adjoint, the Hilbert transform,
sparse operators and weak-type quasinorms.  Where a quantity involves a
smooth integrand (the dual-Hardy experiment) Gauss-Legendre quadrature is
used per mesh cell and its error estimate is reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .stepfn import (
    AnalyticForm,
    DomainError,
    Interval,
    StepFunction,
    as_exponent,
    as_interval,
    compare_measure,
    integrate,
    pointwise_power,
)


def maximal_chi_unit(x):
    """Uncentred maximal function of the indicator of ``[0, 1]``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > 1, 1.0 / np.where(x > 1, x, 1.0), np.where(x < 0, 1.0 / (1.0 - np.minimum(x, 0.0)), 1.0))
    return out if out.ndim else float(out)


def _require_bounded_support(f: StepFunction):
    if f.period is not None:
        raise ValueError("maximal functions here need a non-periodic step function")


def maximal_of_step(f: StepFunction, xs) -> np.ndarray:
    """Exact uncentred maximal function of a nonnegative step function at the points ``xs``.

    The average over ``[s, t]`` containing ``x`` is a convex combination of the
    averages over ``[s, x]`` and ``[x, t]``, so only one-sided intervals need
    checking, and for those the average is monotone in the free endpoint
    across each piece; the supremum is therefore attained at mesh nodes or in
    the limit of short intervals.
    """
    _require_bounded_support(f)
    if np.any(f.values < 0) or f.outside_value < 0:
        raise DomainError("maximal function of a negative step function")
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    nodes = f.breakpoints
    G = np.concatenate(([0.0], np.cumsum(f.values * f.lengths)))
    out = np.empty(xs.size)
    chunk = max(1, 2_000_000 // nodes.size)
    for start in range(0, xs.size, chunk):
        x = xs[start : start + chunk]
        i = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, f.n_pieces - 1)
        inside = (x >= nodes[0]) & (x < nodes[-1])
        # G at x, extended by the outside value off the mesh
        Gx = np.where(
            x < nodes[0],
            f.outside_value * (x - nodes[0]),
            np.where(x >= nodes[-1], G[-1] + f.outside_value * (x - nodes[-1]), G[i] + f.values[i] * (x - nodes[i])),
        )
        dx = nodes[None, :] - x[:, None]
        dG = G[None, :] - Gx[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            slopes = np.where(np.abs(dx) > 0, dG / dx, -np.inf)
        local = np.where(inside, f.values[i], f.outside_value)
        # left neighbour value matters when x sits on a node
        left_val = np.where(i > 0, f.values[np.maximum(i - 1, 0)], f.outside_value)
        on_node = np.isin(x, nodes)
        local = np.where(on_node, np.maximum(local, left_val), local)
        out[start : start + chunk] = np.maximum(np.max(slopes, axis=1), np.maximum(local, f.outside_value))
    return out


def uncentered_maximal(f: StepFunction, x: float, tol: float = 1e-12) -> float:
    """``sup_{I containing x} avg_I f`` for nonnegative ``f``.

    Candidate endpoints are the mesh nodes together with ``x``; this candidate
    set already contains the supremum (see :func:`maximal_of_step`), so the
    result is exact up to rounding and ``tol`` is only an accuracy contract.
    """
    return float(maximal_of_step(f, [x])[0])


def dyadic_maximal(f: StepFunction, lattice, x: float, window) -> float:
    """``sup`` of averages of ``f`` over the cubes of ``lattice`` inside ``window`` that contain ``x``."""
    W = as_interval(window)
    if not W.a <= x < W.b:
        raise ValueError(f"point {x} outside the window [{W.a}, {W.b})")
    g = max(-lattice.cap, math.ceil(math.log2(lattice.base / W.length) - 1e-9))
    best = -math.inf
    while True:
        Q = lattice.locate(x, g)
        I = lattice.interval(Q)
        # endpoints of shifted lattices carry rounding; compare up to a sliver of the side
        tol = 1e-12 * I.length
        if I.a >= W.a - tol and I.b <= W.b + tol:
            best = max(best, integrate(f, I) / I.length)
            inner = (f.breakpoints > I.a + tol) & (f.breakpoints < I.b - tol)
            if not inner.any():
                # f is constant on I; smaller cubes give the same average
                return float(best)
        if g >= lattice.cap:
            return float(best)
        g += 1


def _halfline(f: StepFunction):
    if f.period is not None or f.outside_value != 0 or f.breakpoints[0] < 0:
        raise ValueError("Hardy operators need a step function supported in [0, inf)")


def hardy(f: StepFunction, x):
    """``(1/x) int_0^x f``."""
    _halfline(f)
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("the Hardy operator is evaluated at x > 0")
    nodes = f.breakpoints
    G = np.concatenate(([0.0], np.cumsum(f.values * f.lengths)))
    i = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, f.n_pieces - 1)
    Gx = np.where(x < nodes[0], 0.0, np.where(x >= nodes[-1], G[-1], G[i] + f.values[i] * (x - nodes[i])))
    out = Gx / x
    return out if out.ndim else float(out)


def dual_hardy(f: StepFunction, x):
    """``int_x^inf f(t)/t dt = sum_i c_i ln(b_i / max(a_i, x))``."""
    _halfline(f)
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("the dual Hardy operator is evaluated at x > 0")
    a, b, c = f.breakpoints[:-1], f.breakpoints[1:], f.values
    xx = np.atleast_1d(x)[:, None]
    lo = np.maximum(a[None, :], xx)
    with np.errstate(divide="ignore"):
        terms = np.where(b[None, :] > lo, c[None, :] * np.log(b[None, :] / lo), 0.0)
    out = terms.sum(axis=1)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def hilbert_step(f: StepFunction, x):
    """``p.v. int f(t)/(x - t) dt = sum_i c_i ln(|x - a_i| / |x - b_i|)``."""
    if f.period is not None or f.outside_value != 0:
        raise ValueError("the Hilbert transform needs a compactly supported step function")
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.isin(x, f.breakpoints)):
        raise DomainError("Hilbert transform of a step function at one of its breakpoints")
    a, b, c = f.breakpoints[:-1], f.breakpoints[1:], f.values
    xx = np.atleast_1d(x)[:, None]
    out = np.sum(c[None, :] * np.log(np.abs(xx - a[None, :]) / np.abs(xx - b[None, :])), axis=1)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def _family_mesh(S, extra: Sequence[np.ndarray] = ()):
    ivs = {Q: S.lattice.interval(Q) for Q in S.cubes}
    pts = [np.array([I.a for I in ivs.values()]), np.array([I.b for I in ivs.values()]), *extra]
    lo = min(I.a for I in ivs.values())
    hi = max(I.b for I in ivs.values())
    edges = np.unique(np.concatenate(pts))
    edges = edges[(edges >= lo) & (edges <= hi)]
    return ivs, edges


def sparse_apply(S, phi: StepFunction) -> StepFunction:
    """``A_S phi = sum_Q (avg_Q phi) chi_Q`` on the common refinement mesh."""
    return weighted_sparse_apply(None, S, phi)


def weighted_sparse_apply(lam: Optional[dict], S, psi: StepFunction) -> StepFunction:
    """``T_{lam,S} psi = sum_Q lam_Q(x) (avg_Q psi) chi_Q(x)``; ``lam=None`` means ``lam_Q = 1``."""
    if not S.cubes:
        return StepFunction([0.0, 1.0], [0.0])
    extra = [psi.breakpoints] if psi.period is None else []
    if lam is not None:
        missing = [Q for Q in S.cubes if Q not in lam]
        if missing:
            raise KeyError(f"lambda missing on {missing[0]}")
        extra += [lam[Q].breakpoints for Q in S.cubes]
    ivs, edges = _family_mesh(S, extra)
    mid = 0.5 * (edges[:-1] + edges[1:])
    vals = np.zeros(mid.size)
    for Q, I in ivs.items():
        avg = integrate(psi, I) / I.length
        ia, ib = np.searchsorted(edges, [I.a, I.b])
        if lam is None:
            vals[ia:ib] += avg
        else:
            vals[ia:ib] += lam[Q](mid[ia:ib]) * avg
    return StepFunction(edges, vals)


@dataclass
class WeakNormReport:
    value: float
    level: float
    level_grid_size: int

    def to_dict(self):
        return {"value": self.value, "achieving_level": self.level, "level_grid_size": self.level_grid_size}


def weak_lp_quasinorm(g: StepFunction, p, window=None, weight: Optional[StepFunction] = None) -> WeakNormReport:
    """``sup_alpha alpha * mu{g > alpha}**(1/p)``, exact over the piece values of ``g``.

    For ``alpha`` between consecutive piece values ``v_{k-1} <= alpha < v_k`` the
    superlevel set is ``{g >= v_k}``, so the supremum is
    ``max_k v_k * mu{g >= v_k}**(1/p)``.  ``mu`` is Lebesgue measure or
    ``weight(x) dx``.
    """
    p = as_exponent(p).p if not isinstance(p, (int, float)) or p > 1 else float(p)
    if p <= 0:
        raise ValueError("p must be positive")
    window = as_interval(window) if window is not None else g.support
    left, right, vals = g.pieces(window)
    if weight is None:
        mass = right - left
    else:
        mass = np.array([integrate(weight, Interval(a, b)) for a, b in zip(left, right)])
    pos = vals > 0
    vals, mass = vals[pos], mass[pos]
    if vals.size == 0:
        return WeakNormReport(0.0, 0.0, 0)
    order = np.argsort(vals)[::-1]
    v_sorted = vals[order]
    cum = np.cumsum(mass[order])
    levels, last = np.unique(v_sorted[::-1], return_index=True)
    # mu{g >= v} = cumulative mass up to the last occurrence of v in descending order
    idx_last = v_sorted.size - 1 - last
    mu = cum[idx_last]
    cand = levels * mu ** (1.0 / p)
    k = int(np.argmax(cand))
    return WeakNormReport(float(cand[k]), float(levels[k]), int(levels.size))


def weak_lp_bruteforce(g: StepFunction, p: float, window=None, weight=None, n_levels: int = 10_000) -> float:
    """Oracle: the weak quasinorm on a uniform level grid plus the piece values approached from below."""
    window = as_interval(window) if window is not None else g.support
    left, right, vals = g.pieces(window)
    top = vals.max()
    if top <= 0:
        return 0.0
    alphas = np.concatenate((np.linspace(0, top, n_levels, endpoint=False)[1:], vals[vals > 0] * (1 - 1e-15)))
    best = 0.0
    for a in alphas:
        sel = vals > a
        if weight is None:
            mu = float(np.sum((right - left)[sel]))
        else:
            mu = sum(integrate(weight, Interval(x, y)) for x, y in zip(left[sel], right[sel]))
        best = max(best, a * mu ** (1.0 / p))
    return best


def strong_lp_norm(g: StepFunction, p: float, window=None, weight=None) -> float:
    window = as_interval(window) if window is not None else g.support
    left, right, vals = g.pieces(window)
    if weight is None:
        mass = right - left
    else:
        mass = np.array([integrate(weight, Interval(a, b)) for a, b in zip(left, right)])
    return float(np.sum(np.abs(vals) ** p * mass) ** (1.0 / p))


def sharpness_functional_small_p(w: StepFunction, p, window) -> float:
    """``|{x in window : w(x)**(1/p) > x}|``, solved exactly piece by piece."""
    p = as_exponent(p).p
    return compare_measure(pointwise_power(w, 1.0 / p), AnalyticForm("identity"), window)


def hilbert_sharpness_functional(w: StepFunction, p, window) -> float:
    """``|{x in window : w(x)**(1/p) H(chi_[0,1])(x) > 1}|`` for a window inside ``(1, inf)``."""
    p = as_exponent(p).p
    return compare_measure(pointwise_power(w, 1.0 / p), AnalyticForm("inv_hilbert_unit"), window)


@dataclass(frozen=True)
class QuadConfig:
    order: int = 16
    tol: float = 1e-4


@dataclass
class QuadReport:
    value: float
    error_estimate: float
    cells: int
    flagged: bool

    def to_dict(self):
        return {"value": self.value, "error_estimate": self.error_estimate, "cells": self.cells, "flagged": self.flagged}


def _gauss(order):
    x, wt = np.polynomial.legendre.leggauss(order)
    return x, wt


def dual_hardy_experiment(w: StepFunction, p, E: Sequence[Interval], quad: QuadConfig = QuadConfig()) -> QuadReport:
    """``||H*(w**(1/p) chi_E)||_{L^{p'}(sigma)}`` with ``sigma = w**(-1/(p-1))``.

    ``H*`` is exact (sums of logarithms); on each cell of the common mesh of
    ``w`` and ``E`` the integrand is ``sigma * (H*(b) + c ln(b/x))**p'`` with
    constants ``sigma``, ``c``, integrated by Gauss-Legendre with a
    half-cell comparison as error estimate.  Cells outside ``E`` carry an
    exact constant integrand.
    """
    p = as_exponent(p)
    q = p.conjugate
    E = sorted((as_interval(I) for I in E), key=lambda I: I.a)
    if not E or E[0].a <= 0:
        raise ValueError("E must be a nonempty union of intervals in (0, inf)")
    top = E[-1].b
    wp = pointwise_power(w, 1.0 / p.p)
    g_pieces = []
    for I in E:
        l, r, v = wp.pieces(I)
        g_pieces += list(zip(l, r, v))
    g = StepFunction.from_pieces(g_pieces)
    first = g.breakpoints[0]
    w_left, w_right, w_vals = w.pieces(Interval(first, top))
    edges = np.unique(np.concatenate((w_left, w_right, g.breakpoints)))
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    sig = w(mid) ** p.dual_power
    c = g(mid)
    Hb = dual_hardy(g, hi)
    # integral on (0, first): H* is constant there
    H0 = dual_hardy(g, first)
    head = H0**q * integrate(pointwise_power(w, p.dual_power), Interval(0.0, first))
    flat = c == 0
    flat_part = float(np.sum(sig[flat] * Hb[flat] ** q * (hi - lo)[flat]))

    x, wt = _gauss(quad.order)
    lo_c, hi_c, s_c, c_c, Hb_c = lo[~flat], hi[~flat], sig[~flat], c[~flat], Hb[~flat]

    def cell_integral(a, b):
        pts = 0.5 * (b - a)[:, None] * x[None, :] + 0.5 * (b + a)[:, None]
        vals = (Hb_c[:, None] + c_c[:, None] * np.log(hi_c[:, None] / pts)) ** q
        return 0.5 * (b - a) * np.sum(wt[None, :] * vals, axis=1)

    whole = cell_integral(lo_c, hi_c)
    midp = 0.5 * (lo_c + hi_c)
    halves = cell_integral(lo_c, midp) + cell_integral(midp, hi_c)
    curved = float(np.sum(s_c * halves))
    err = float(np.sum(s_c * np.abs(halves - whole)))
    total = head + flat_part + curved
    value = total ** (1.0 / q)
    rel = err / total if total > 0 else 0.0
    return QuadReport(value, rel, int(edges.size - 1), rel > quad.tol)


def dual_hardy_plateau(w: StepFunction, p, E: Sequence[Interval], points) -> np.ndarray:
    """``H*(w**(1/p) chi_E)`` at the given points."""
    p = as_exponent(p)
    wp = pointwise_power(w, 1.0 / p.p)
    g_pieces = []
    for I in sorted((as_interval(I) for I in E), key=lambda I: I.a):
        l, r, v = wp.pieces(I)
        g_pieces += list(zip(l, r, v))
    return dual_hardy(StepFunction.from_pieces(g_pieces), np.asarray(points, dtype=np.float64))
