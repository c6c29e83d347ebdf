"""Matrix weights on a dyadic mesh.

A :class:`MatrixWeight` stores ``2**depth`` symmetric positive-definite
``n x n`` matrices, one per dyadic piece of a base interval.  Everything is a
finite sum over pieces, so the matrix A_p and A_1 functionals, the
Christ-Goldberg maximal function and the reducing-operator norm ``rho`` are
exact up to rounding.  Reducing operators for ``p != 2`` come from the
minimum-volume ellipsoid of sampled boundary points of the ``rho`` unit ball.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .dyadic import DyadicLattice, three_lattices
from .stepfn import DomainError, Interval, as_exponent, as_interval

MAX_CONDITION = 1e10
MAX_N = 4
MAX_DEPTH = 12


class ConvergenceError(RuntimeError):
    pass


def _check_spd(A: np.ndarray, what="matrix"):
    A = np.asarray(A, dtype=np.float64)
    if A.shape[-1] != A.shape[-2]:
        raise DomainError(f"{what} is not square")
    scale = np.max(np.abs(A), axis=(-2, -1), keepdims=True)
    if np.any(np.abs(A - np.swapaxes(A, -1, -2)) > 1e-12 * np.maximum(scale, 1.0)):
        raise DomainError(f"{what} is not symmetric")
    lam, U = np.linalg.eigh(A)
    if np.any(lam <= 0):
        raise DomainError(f"{what} is not positive definite")
    return lam, U


def matrix_power(A, s: float) -> np.ndarray:
    """``A**s`` for symmetric positive-definite ``A`` (batched over leading axes)."""
    lam, U = _check_spd(A)
    return (U * lam[..., None, :] ** s) @ np.swapaxes(U, -1, -2)


def op_norm(M: np.ndarray) -> np.ndarray:
    """Spectral norms of a batch of matrices, through the eigenvalues of ``M^T M``."""
    G = np.swapaxes(M, -1, -2) @ M
    return np.sqrt(np.maximum(np.linalg.eigvalsh(G)[..., -1], 0.0))


@dataclass(frozen=True, eq=False)
class MatrixWeight:
    base: Interval
    depth: int
    pieces: np.ndarray  # (2**depth, n, n)

    def __post_init__(self):
        base = as_interval(self.base)
        P = np.array(self.pieces, dtype=np.float64)
        if P.ndim == 1:
            P = P[:, None, None]
        if P.ndim != 3 or P.shape[1] != P.shape[2]:
            raise ValueError("pieces must have shape (2**depth, n, n)")
        if not 0 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"mesh depth must lie in [0, {MAX_DEPTH}]")
        if P.shape[0] != 2**self.depth:
            raise ValueError(f"expected {2 ** self.depth} pieces, got {P.shape[0]}")
        if P.shape[1] > MAX_N:
            raise ValueError(f"matrix dimension is capped at {MAX_N}")
        lam, U = _check_spd(P, "weight piece")
        cond = lam[:, -1] / lam[:, 0]
        if np.any(cond > MAX_CONDITION):
            raise DomainError(f"condition number {cond.max():.3g} exceeds {MAX_CONDITION:g}")
        P.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "pieces", P)
        object.__setattr__(self, "_eig", (lam, U))
        object.__setattr__(self, "_cache", {})

    @property
    def n(self) -> int:
        return self.pieces.shape[1]

    @property
    def size(self) -> int:
        return self.pieces.shape[0]

    @property
    def h(self) -> float:
        return self.base.length / self.size

    @property
    def nodes(self) -> np.ndarray:
        return self.base.a + self.h * np.arange(self.size + 1)

    @property
    def condition_numbers(self) -> np.ndarray:
        lam = self._eig[0]
        return lam[:, -1] / lam[:, 0]

    def power(self, s: float) -> np.ndarray:
        """Per-piece ``W**s``, cached."""
        key = ("pow", float(s))
        if key not in self._cache:
            lam, U = self._eig
            self._cache[key] = (U * lam[:, None, :] ** s) @ np.swapaxes(U, -1, -2)
        return self._cache[key]

    def piece_of(self, x: float) -> int:
        if not self.base.a <= x < self.base.b:
            raise ValueError(f"point {x} is off the mesh [{self.base.a}, {self.base.b})")
        return min(int((x - self.base.a) // self.h), self.size - 1)

    @classmethod
    def constant(cls, A, depth: int = 0, base=(0.0, 1.0)) -> "MatrixWeight":
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        return cls(as_interval(base), depth, np.broadcast_to(A, (2**depth, *A.shape)).copy())

    def scaled(self, c: float) -> "MatrixWeight":
        return MatrixWeight(self.base, self.depth, c * self.pieces)

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_list(),
            "depth": self.depth,
            "n": self.n,
            "pieces": [P.ravel().tolist() for P in self.pieces],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixWeight":
        n = int(d["n"])
        P = np.array(d["pieces"], dtype=np.float64).reshape(-1, n, n)
        return cls(as_interval(d["base"]), int(d["depth"]), P)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "MatrixWeight":
        return cls.from_dict(json.loads(s))


def random_matrix_weight(rng: np.random.Generator, n: int = 2, depth: int = 8, spread: float = 1.0, base=(0.0, 1.0)) -> MatrixWeight:
    """Random SPD field: a dyadic multiplicative cascade of log-eigenvalues and random rotations."""
    P = 2**depth
    logs = np.zeros((P, n))
    for g in range(depth + 1):
        blocks = 2**g
        jumps = rng.normal(0.0, spread / math.sqrt(depth + 1), size=(blocks, n))
        logs += np.repeat(jumps, P // blocks, axis=0)
    Q, _ = np.linalg.qr(rng.normal(size=(P, n, n)))
    W = (Q * np.exp(logs)[:, None, :]) @ np.swapaxes(Q, -1, -2)
    return MatrixWeight(as_interval(base), depth, 0.5 * (W + np.swapaxes(W, -1, -2)))


# -- candidate cubes -------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    """A cube as nonnegative piece fractions summing to one."""

    label: str
    interval: Interval
    idx: np.ndarray
    frac: np.ndarray


def _candidate(W: MatrixWeight, label: str, I: Interval) -> Candidate:
    nodes = W.nodes
    i0 = max(int(np.searchsorted(nodes, I.a, side="right")) - 1, 0)
    i1 = min(int(np.searchsorted(nodes, I.b, side="left")), W.size)
    idx = np.arange(i0, i1)
    lo = np.maximum(nodes[idx], I.a)
    hi = np.minimum(nodes[idx + 1], I.b)
    keep = hi > lo
    return Candidate(label, I, idx[keep], (hi - lo)[keep] / I.length)


def lattices_for(W: MatrixWeight) -> list[DyadicLattice]:
    return three_lattices(1, base=W.base.length, origin=W.base.a)


def mesh_cubes(W: MatrixWeight, lattices: Optional[Sequence[DyadicLattice]] = None, max_generation: Optional[int] = None) -> list[Candidate]:
    """Cubes of generations ``0..depth`` of the given lattices that lie inside the base interval."""
    lattices = lattices_for(W) if lattices is None else lattices
    top = W.depth if max_generation is None else max_generation
    out = []
    for L in lattices:
        for g in range(0, top + 1):
            for Q in L.cubes_in(W.base, g):
                out.append(_candidate(W, Q.id, L.interval(Q)))
    return out


def interval_candidates(W: MatrixWeight) -> list[Candidate]:
    """Every interval whose endpoints are mesh nodes."""
    nodes = W.nodes
    return [
        _candidate(W, f"[{i},{j})", Interval(nodes[i], nodes[j]))
        for i in range(W.size)
        for j in range(i + 1, W.size + 1)
    ]


def _frac_matrix(W: MatrixWeight, cands: Sequence[Candidate]) -> np.ndarray:
    F = np.zeros((len(cands), W.size))
    for r, c in enumerate(cands):
        F[r, c.idx] = c.frac
    return F


# -- functionals -----------------------------------------------------------


def norm_table(W: MatrixWeight, p: float) -> np.ndarray:
    """``T[x, y] = ||W_x**(1/p) W_y**(-1/p)||`` over all piece pairs."""
    key = ("norms", float(p))
    if key not in W._cache:
        A = W.power(1.0 / p)
        B = W.power(-1.0 / p)
        W._cache[key] = op_norm(A[:, None, :, :] @ B[None, :, :, :])
    return W._cache[key]


@dataclass
class MatrixApReport:
    value: float
    argmax: str
    candidates: int

    def to_dict(self):
        return {"value": self.value, "argmax": self.argmax, "candidates": self.candidates}


def matrix_ap(W: MatrixWeight, p, candidates: Optional[Sequence[Candidate]] = None) -> MatrixApReport:
    """``sup_Q avg_x (avg_y ||W_x**(1/p) W_y**(-1/p)||**p')**(p/p')`` over the candidate cubes."""
    p = as_exponent(p)
    cands = mesh_cubes(W) if candidates is None else list(candidates)
    F = _frac_matrix(W, cands)
    T = norm_table(W, p.p) ** p.conjugate
    inner = F @ T.T  # inner[c, x] = sum_y F[c, y] T[x, y]
    vals = np.sum(F * inner ** (p.p / p.conjugate), axis=1)
    k = int(np.argmax(vals))
    return MatrixApReport(float(vals[k]), cands[k].label, len(cands))


def matrix_a1(W: MatrixWeight, candidates: Optional[Sequence[Candidate]] = None) -> MatrixApReport:
    """``sup_Q esssup_{y in Q} avg_x ||W_x W_y**-1||``."""
    cands = mesh_cubes(W) if candidates is None else list(candidates)
    T = op_norm(W.pieces[:, None] @ W.power(-1.0)[None, :])
    best, arg = -math.inf, ""
    for c in cands:
        v = float(np.max(c.frac @ T[np.ix_(c.idx, c.idx)]))
        if v > best:
            best, arg = v, c.label
    return MatrixApReport(best, arg, len(cands))


def scalar_ap_on(values: np.ndarray, p, candidates: Sequence[Candidate]) -> float:
    """Scalar A_p functional of a piecewise-constant weight over the same candidates."""
    p = as_exponent(p)
    best = -math.inf
    for c in candidates:
        v = values[c.idx]
        best = max(best, float(np.dot(c.frac, v) * np.dot(c.frac, v**p.dual_power) ** (p.p - 1.0)))
    return best


def rho_eval(Q, p, W: MatrixWeight, u) -> float:
    """``(avg_Q |W**(-1/p) u|**p')**(1/p')``."""
    p = as_exponent(p)
    c = Q if isinstance(Q, Candidate) else _candidate(W, "Q", as_interval(Q))
    u = np.asarray(u, dtype=np.float64)
    vec = W.power(-1.0 / p.p)[c.idx] @ u
    return float(np.dot(c.frac, np.linalg.norm(vec, axis=-1) ** p.conjugate) ** (1.0 / p.conjugate))


def _rho_many(c: Candidate, p, W: MatrixWeight, U: np.ndarray) -> np.ndarray:
    p = as_exponent(p)
    vec = np.einsum("yij,kj->kyi", W.power(-1.0 / p.p)[c.idx], U)
    return (np.linalg.norm(vec, axis=-1) ** p.conjugate @ c.frac) ** (1.0 / p.conjugate)


# -- reducing operators ----------------------------------------------------


@dataclass
class ReducingOperator:
    A: np.ndarray
    cube: str
    p: float
    c_low: float
    c_high: float
    iterations: int = 0

    @property
    def ratio(self) -> float:
        return self.c_high / self.c_low

    def to_dict(self):
        return {
            "A": self.A.tolist(),
            "cube": self.cube,
            "p": self.p,
            "c_low": self.c_low,
            "c_high": self.c_high,
            "iterations": self.iterations,
        }


def _khachiyan(X: np.ndarray, tol: float, max_iter: int):
    m, n = X.shape
    u = np.full(m, 1.0 / m)
    for it in range(1, max_iter + 1):
        S = (X.T * u) @ X
        M = np.einsum("ij,jk,ik->i", X, np.linalg.inv(S), X)
        j = int(np.argmax(M))
        support = u > 0
        k = int(np.flatnonzero(support)[np.argmin(M[support])])
        up, down = M[j] / n - 1.0, 1.0 - M[k] / n
        if up <= tol:
            return np.linalg.inv(S) / n, it
        if up >= down:
            beta = (M[j] - n) / (n * (M[j] - 1.0))
            u *= 1.0 - beta
            u[j] += beta
        else:
            drop = u[k] / (1.0 - u[k])
            beta = min((n - M[k]) / (n * (M[k] - 1.0)), drop) if M[k] > 1 else drop
            u *= 1.0 + beta
            u[k] = max(u[k] - beta, 0.0)
    raise ConvergenceError(f"ellipsoid iteration did not reach tolerance {tol} in {max_iter} steps")


def _fit_inside(P: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Scale ``P`` so that the largest ``x^T P x`` is exactly one."""
    return P / np.max(np.einsum("ij,jk,ik->i", X, P, X))


def centered_mvee(X: np.ndarray, tol: float = 1e-8, warm_tol: float = 1e-4, max_iter: int = 200_000):
    """Minimum-volume ellipsoid ``{u : u^T P u <= 1}`` containing ``+-X[i]``.

    Khachiyan's coordinate ascent (with Todd-Yildirim away steps) runs to a
    relative feasibility of ``warm_tol``; its tail converges slowly, so the
    result is then polished by SLSQP on the Cholesky factor of ``P`` with
    tolerance ``tol``.  The returned ``P`` is scaled so that every point lies
    in the ellipsoid.  Returns ``(P, iterations)``.
    """
    from scipy.optimize import minimize

    m, n = X.shape
    P0, it = _khachiyan(X, warm_tol, max_iter)
    P0 = _fit_inside(P0, X)
    L0 = np.linalg.cholesky(P0)
    tri = np.tril_indices(n)
    diag = np.array([tri[0][i] == tri[1][i] for i in range(len(tri[0]))])

    def unpack(z):
        L = np.zeros((n, n))
        L[tri] = z
        return L

    def objective(z):
        return -2.0 * np.sum(np.log(np.abs(z[diag])))

    def constraints(z):
        L = unpack(z)
        return 1.0 - np.sum((X @ L) ** 2, axis=1)

    res = minimize(
        objective,
        L0[tri],
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": constraints}],
        options={"ftol": tol, "maxiter": 500},
    )
    if res.success:
        L = unpack(res.x)
        P1 = _fit_inside(L @ L.T, X)
        if np.linalg.det(P1) > np.linalg.det(P0):
            return P1, it + int(res.nit)
    return P0, it


def _directions(n: int, K: int, rng: Optional[np.random.Generator], offset: float = 0.0) -> np.ndarray:
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        t = np.pi * (np.arange(K) + offset) / K
        return np.stack((np.cos(t), np.sin(t)), axis=1)
    rng = rng or np.random.default_rng(0)
    U = rng.normal(size=(K, n))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def reducing_operator(Q, p, W: MatrixWeight, K: int = 64, seed: int = 0, tol: float = 1e-8) -> ReducingOperator:
    """SPD ``A`` with ``c_low rho(u) <= |A u| <= c_high rho(u)``.

    ``p = 2`` uses ``A = (avg_Q W**-1)**(1/2)``, for which ``rho(u) = |A u|``.
    Otherwise ``A = P**(1/2)`` where ``{u^T P u <= 1}`` is the minimum-volume
    ellipsoid around the sampled points ``u/rho(u)``.  The constants are
    measured on ``4K`` fresh directions.
    """
    p = as_exponent(p)
    c = Q if isinstance(Q, Candidate) else _candidate(W, "Q", as_interval(Q))
    n = W.n
    if n == 2 and K < 64:
        raise ValueError("at least 64 directions are needed for n = 2")
    rng = np.random.default_rng(seed)
    it = 0
    if p.p == 2.0:
        A = matrix_power(np.einsum("y,yij->ij", c.frac, W.power(-1.0)[c.idx]), 0.5)
    else:
        U = _directions(n, K, rng)
        pts = U / _rho_many(c, p, W, U)[:, None]
        P, it = centered_mvee(pts, tol=tol)
        A = matrix_power(0.5 * (P + P.T), 0.5)
    fresh = _directions(n, 4 * K, rng, offset=0.5 / 4) if n == 2 else _directions(n, 4 * K, rng)
    ratio = np.linalg.norm(fresh @ A.T, axis=1) / _rho_many(c, p, W, fresh)
    return ReducingOperator(A, c.label, p.p, float(ratio.min()), float(ratio.max()), it)


# -- Christ-Goldberg maximal operator ---------------------------------------


def _cg_candidates(W: MatrixWeight, mode: str, px: int, window=None):
    """Piece ranges ``[i, j)`` of the candidate intervals containing piece ``px``."""
    if mode == "all-mesh-intervals":
        return [(i, j) for i in range(px + 1) for j in range(px + 1, W.size + 1)]
    if mode == "dyadic-local":
        top = 0 if window is None else window
        out = []
        for g in range(top, W.depth + 1):
            span = 2 ** (W.depth - g)
            i = (px // span) * span
            out.append((i, i + span))
        return out
    raise ValueError(f"unknown mode {mode!r}")


def cg_integrands(W: MatrixWeight, p, f: np.ndarray) -> np.ndarray:
    """``H[x, y] = |W_x**(1/p) W_y**(-1/p) f_y|`` over all piece pairs."""
    p = as_exponent(p).p
    f = np.asarray(f, dtype=np.float64).reshape(W.size, W.n)
    v = np.einsum("yij,yj->yi", W.power(-1.0 / p), f)
    return np.linalg.norm(np.einsum("xij,yj->xyi", W.power(1.0 / p), v), axis=-1)


def cg_maximal_pieces(W: MatrixWeight, p, f: np.ndarray, mode: str = "dyadic-local", top_generation: int = 0) -> np.ndarray:
    """``M_{W,p} f`` on every piece (it is constant on pieces for mesh candidates)."""
    H = cg_integrands(W, p, f)
    out = np.empty(W.size)
    if mode == "dyadic-local":
        for x in range(W.size):
            best = 0.0
            for i, j in _cg_candidates(W, mode, x, top_generation):
                best = max(best, float(H[x, i:j].mean()))
            out[x] = best
        return out
    if mode == "all-mesh-intervals":
        for x in range(W.size):
            G = np.concatenate(([0.0], np.cumsum(H[x])))
            i = np.arange(x + 1)[:, None]
            j = np.arange(x + 1, W.size + 1)[None, :]
            out[x] = float(np.max((G[j] - G[i]) / (j - i)))
        return out
    raise ValueError(f"unknown mode {mode!r}")


def cg_maximal(W: MatrixWeight, p, f, x: float, mode: str = "dyadic-local", top_generation: int = 0) -> float:
    """``sup_{R containing x} avg_R |W(x)**(1/p) W(y)**(-1/p) f(y)| dy`` over mesh candidates."""
    px = W.piece_of(x)
    H = cg_integrands(W, p, f)[px]
    G = np.concatenate(([0.0], np.cumsum(H)))
    return max(float((G[j] - G[i]) / (j - i)) for i, j in _cg_candidates(W, mode, px, top_generation))


# -- reducing-operator checks ----------------------------------------------


@dataclass
class Pr1Result:
    ratio: float
    bound: float

    def to_dict(self):
        return {"ratio": self.ratio, "bound": self.bound}


def prop_pr1_check(Q, p, W: MatrixWeight, f, V: Optional[ReducingOperator] = None) -> Pr1Result:
    """``avg_Q |V**-1 W**(-1/p) f| / (avg_Q |f|**p)**(1/p)`` and the bound ``n c_high / c_low``."""
    p = as_exponent(p)
    c = Q if isinstance(Q, Candidate) else _candidate(W, "Q", as_interval(Q))
    V = V or reducing_operator(c, p, W)
    f = np.asarray(f, dtype=np.float64).reshape(W.size, W.n)[c.idx]
    Vi = np.linalg.inv(V.A)
    g = np.linalg.norm(np.einsum("ij,yjk,yk->yi", Vi, W.power(-1.0 / p.p)[c.idx], f), axis=-1)
    lhs = float(np.dot(c.frac, g))
    rhs = float(np.dot(c.frac, np.linalg.norm(f, axis=-1) ** p.p) ** (1.0 / p.p))
    return Pr1Result(lhs / rhs if rhs > 0 else 0.0, W.n * V.c_high / V.c_low)


@dataclass
class Pr2Result:
    lhs: float
    ap: float
    ratio: float
    s: float

    def to_dict(self):
        return {"lhs": self.lhs, "ap": self.ap, "ratio": self.ratio, "s": self.s}


def _wv_norms(c: Candidate, p, W: MatrixWeight, V: ReducingOperator) -> np.ndarray:
    return op_norm(W.power(1.0 / as_exponent(p).p)[c.idx] @ V.A)


def prop_pr2_check(Q, p, W: MatrixWeight, s: Optional[float] = None, ap: Optional[float] = None,
                   V: Optional[ReducingOperator] = None, c_d: float = 8.0) -> Pr2Result:
    """``(avg_Q ||W**(1/p) V||**(sp))**(1/s)`` against ``[W]_{A_p}``.

    The default ``s`` is ``1 + 1/(c_d [W]_{A_p})``.
    """
    p = as_exponent(p)
    c = Q if isinstance(Q, Candidate) else _candidate(W, "Q", as_interval(Q))
    ap = matrix_ap(W, p).value if ap is None else ap
    s = 1.0 + 1.0 / (c_d * ap) if s is None else s
    V = V or reducing_operator(c, p, W)
    X = _wv_norms(c, p, W, V)
    lhs = float(np.dot(c.frac, X ** (s * p.p)) ** (1.0 / s))
    return Pr2Result(lhs, ap, lhs / ap, s)


def prop_pr2_probe(Q, p, W: MatrixWeight, V: Optional[ReducingOperator] = None, max_j: int = 20) -> float:
    """Largest ``s = 1 + 2**-j`` with ``(avg X**(sp))**(1/s) <= 2 avg X**p``, ``X = ||W**(1/p) V||``."""
    p = as_exponent(p)
    c = Q if isinstance(Q, Candidate) else _candidate(W, "Q", as_interval(Q))
    V = V or reducing_operator(c, p, W)
    X = _wv_norms(c, p, W, V)
    base = float(np.dot(c.frac, X**p.p))
    for j in range(max_j + 1):
        s = 1.0 + 2.0**-j
        if float(np.dot(c.frac, X ** (s * p.p)) ** (1.0 / s)) <= 2.0 * base:
            return s
    return float("nan")


def scap_check(W: MatrixWeight, p, u, candidates: Optional[Sequence[Candidate]] = None) -> tuple[float, float]:
    """Scalar A_p of ``|W**(1/p) u|**p`` and the matrix A_p, over the same candidates."""
    p = as_exponent(p)
    u = np.asarray(u, dtype=np.float64)
    if not np.any(u):
        raise ValueError("direction u must be nonzero")
    cands = mesh_cubes(W) if candidates is None else list(candidates)
    v = np.linalg.norm(W.power(1.0 / p.p) @ u, axis=-1) ** p.p
    return scalar_ap_on(v, p, cands), matrix_ap(W, p, cands).value


def cg_strong_norm_estimate(W: MatrixWeight, p, probes: Iterable[np.ndarray], mode: str = "dyadic-local") -> float:
    """``max_f ||M_{W,p} f||_{L^p} / ||f||_{L^p}`` over the probe functions."""
    p = as_exponent(p).p
    best = 0.0
    for f in probes:
        f = np.asarray(f, dtype=np.float64).reshape(W.size, W.n)
        Mf = cg_maximal_pieces(W, p, f, mode)
        num = np.sum(Mf**p) ** (1.0 / p)
        den = np.sum(np.linalg.norm(f, axis=-1) ** p) ** (1.0 / p)
        if den > 0:
            best = max(best, float(num / den))
    return best


def norms_commute(A: np.ndarray, B: np.ndarray) -> float:
    """``| ||AB|| - ||BA|| |`` relative to ``||AB||``; zero for symmetric A, B."""
    ab, ba = op_norm(A @ B), op_norm(B @ A)
    return float(abs(ab - ba) / ab)
