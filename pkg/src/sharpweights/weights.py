"""Extremal weight families.

``SMALL_P`` and ``LARGE_P`` are periodic step weights built block by block on
``J_k = [2**k, 2**(k+1))``: a tall head ``I_k`` followed by two halving
families of pieces, scaled by ``2**((k+1)(p-1))``, reflected about
``2**(N+1)`` and repeated with period ``2**(N+2)``.  ``POWER`` is the even
weight equal to ``1/eps`` on ``[-1, 1]`` and ``|x|**-(1-eps)`` beyond, with
the tail replaced by exact averages over a geometric mesh.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .stepfn import Exponent, Interval, StepFunction, as_exponent, pointwise_power

SMALL_P_MAX_N = 40
LARGE_P_MAX_N = 48


class Family(str, enum.Enum):
    SMALL_P = "small-p"
    LARGE_P = "large-p"
    POWER = "power"


@dataclass(frozen=True)
class WeightFamilyParams:
    family: Family
    p: Exponent
    N: Optional[int] = None
    eps: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "p", as_exponent(self.p))
        p = self.p.p
        if self.family is Family.SMALL_P:
            if not 1 < p < 2:
                raise ValueError(f"small-p family needs 1 < p < 2, got {p}")
            if self.N is None or not 5 <= self.N <= SMALL_P_MAX_N:
                raise ValueError(f"small-p family needs 5 <= N <= {SMALL_P_MAX_N}, got {self.N}")
        elif self.family is Family.LARGE_P:
            if p < 2:
                raise ValueError(f"large-p family needs p >= 2, got {p}")
            k0 = k0_of(p)
            if self.N is None or not k0 + 2 < self.N <= LARGE_P_MAX_N:
                raise ValueError(f"large-p family needs {k0 + 2} < N <= {LARGE_P_MAX_N}, got {self.N}")
        else:
            if self.eps is None or not 0 < self.eps <= 0.5:
                raise ValueError(f"power family needs 0 < eps <= 1/2, got {self.eps}")

    def build(self, **kw) -> StepFunction:
        if self.family is Family.SMALL_P:
            return build_weight_small_p(self.N, self.p)
        if self.family is Family.LARGE_P:
            return build_weight_large_p(self.N, self.p)
        return build_power_weight(self.eps, **kw)


def _power_is_integral(e: float) -> bool:
    return float(e).is_integer()


def _int_power(k: int, e: float):
    """``k**e``, as an exact integer when ``e`` is a whole number."""
    return k ** int(e) if _power_is_integral(e) else k ** e


def k0_of(p) -> int:
    """Minimal integer k >= 1 with ``k**(p-1) < 2**(k-1)``."""
    e = as_exponent(p).p - 1.0
    k = 1
    while not _int_power(k, e) < 2 ** (k - 1):
        k += 1
        if k > 4096:
            raise ValueError(f"no threshold found for p = {p}")
    return k


def floor_log2_power(k: int, e: float, guard: float = 1e-9) -> int:
    """``floor(e * log2(k))``; exact through integer bit lengths when ``e`` is whole."""
    if _power_is_integral(e):
        return (k ** int(e)).bit_length() - 1
    t = e * math.log2(k)
    if abs(t - round(t)) <= guard:
        raise ValueError(f"floor of {e}*log2({k}) = {t} is too close to an integer to decide")
    return math.floor(t)


@dataclass(frozen=True)
class JkPartition:
    k: int
    head: Interval
    minus: tuple  # (L_k^-)^j for j = 1..k
    plus: tuple  # (L_k^+)^j for j = 1..k

    def level(self, j: int) -> tuple[Interval, Interval]:
        return self.minus[j - 1], self.plus[j - 1]

    def intervals(self) -> list[Interval]:
        """All pieces of ``J_k`` in increasing order."""
        return [self.head, *reversed(self.minus[1:]), self.minus[0], self.plus[0], *self.plus[1:]]


def partition_Jk(k: int, head_length: float) -> JkPartition:
    """Split ``J_k`` into ``I_k = [2**k, 2**k + head)`` and the two halving families."""
    left, right = float(2**k), float(2 ** (k + 1))
    if not 0 < head_length < left:
        raise ValueError(f"head length {head_length} must lie in (0, 2**{k})")
    if k < 2:
        raise ValueError("the halving construction needs k >= 2")
    start = left + head_length
    L = right - start
    mid = start + L / 2
    minus, plus = [], []
    b, c = mid, mid
    for j in range(1, k):
        size = L / 2 ** (j + 1)
        minus.append(Interval(b - size, b))
        plus.append(Interval(c, c + size))
        b -= size
        c += size
    # terminal pieces fill the rest exactly
    minus.append(Interval(start, b))
    plus.append(Interval(c, right))
    return JkPartition(k, Interval(left, start), tuple(minus), tuple(plus))


def _assemble_periodic(N: int, head_end: float, blocks: list[tuple[JkPartition, list[float], float]]) -> StepFunction:
    """Lay out ``[0, head_end)`` with value 1, then the blocks, then the mirror image."""
    bps = [0.0, head_end]
    vals = [1.0]
    for part, level_values, head_value in blocks:
        ivs = part.intervals()
        piece_vals = [head_value]
        for j in range(part.k, 1, -1):
            piece_vals.append(level_values[j - 1])
        piece_vals += [level_values[0], level_values[0]]
        piece_vals += [level_values[j - 1] for j in range(2, part.k + 1)]
        for I, v in zip(ivs, piece_vals):
            if I.a != bps[-1]:
                raise AssertionError(f"pieces do not tile at {I.a} vs {bps[-1]}")
            bps.append(I.b)
            vals.append(v)
    half = 2.0 ** (N + 1)
    if bps[-1] != half:
        raise AssertionError("blocks do not tile [0, 2**(N+1))")
    full = 2.0 ** (N + 2)
    mirror_bps = [full - x for x in reversed(bps[:-1])]
    all_bps = np.array(bps + mirror_bps)
    all_vals = np.array(vals + vals[::-1])
    return StepFunction(all_bps, all_vals, period=full)


def build_weight_small_p(N: int, p) -> StepFunction:
    """Periodic extremal weight for ``1 < p < 2`` with ``[w]_{A_p}`` of order ``N``."""
    params = WeightFamilyParams(Family.SMALL_P, p, N=N)
    p = params.p.p
    blocks = []
    for k in range(3, N + 1):
        part = partition_Jk(k, k)
        jstar = k.bit_length() - 1
        scale = 2.0 ** ((k + 1) * (p - 1))
        levels = [scale * (2.0**j if j >= jstar else k) for j in range(1, k + 1)]
        blocks.append((part, levels, scale * 2.0 ** (k + 1)))
    return _assemble_periodic(N, 8.0, blocks)


def build_weight_large_p(N: int, p) -> StepFunction:
    """Periodic weight for ``p >= 2`` with head lengths ``k**(p-1)``."""
    params = WeightFamilyParams(Family.LARGE_P, p, N=N)
    p = params.p.p
    k0 = k0_of(p)
    blocks = []
    for k in range(k0 + 1, N + 1):
        head = float(_int_power(k, p - 1))
        part = partition_Jk(k, head)
        jstar = floor_log2_power(k, p - 1)
        scale = 2.0 ** ((k + 1) * (p - 1))
        levels = [scale * (2.0**j if j >= jstar else head) for j in range(1, k + 1)]
        blocks.append((part, levels, scale * 2.0 ** (k + 1)))
    return _assemble_periodic(N, 2.0 ** (k0 + 1), blocks)


def head_set(N: int, p, family=Family.LARGE_P) -> list[Interval]:
    """The heads ``I_k`` of the construction, i.e. the test set ``E``."""
    family = Family(family)
    p = as_exponent(p).p
    if family is Family.SMALL_P:
        return [Interval(2.0**k, 2.0**k + k) for k in range(3, N + 1)]
    return [Interval(2.0**k, 2.0**k + float(_int_power(k, p - 1))) for k in range(k0_of(p) + 1, N + 1)]


def build_power_weight(eps: float, cutoff: float = 2.0**10, ratio_log2: float = 1.0 / 16) -> StepFunction:
    """Even weight ``1/eps`` on ``[-1, 1]`` and ``|x|**-(1-eps)`` beyond, up to ``cutoff``.

    The tail pieces ``[q**i, q**(i+1))`` with ``q = 2**ratio_log2`` carry the
    exact average of ``x**-(1-eps)``; beyond the cutoff the function takes the
    continuous value ``cutoff**-(1-eps)``.
    """
    if not 0 < eps <= 0.5:
        raise ValueError(f"power family needs 0 < eps <= 1/2, got {eps}")
    if cutoff < 2.0**10:
        raise ValueError("cutoff must be at least 2**10")
    if not ratio_log2 > 0:
        raise ValueError("mesh ratio must exceed 1")
    steps = math.log2(cutoff) / ratio_log2
    n = round(steps)
    if abs(steps - n) > 1e-9:
        raise ValueError("cutoff must be a point of the geometric mesh")
    pts = 2.0 ** (np.arange(n + 1) * ratio_log2)
    a, b = pts[:-1], pts[1:]
    tail = (b**eps - a**eps) / (eps * (b - a))
    bps = np.concatenate((-pts[::-1], pts))
    vals = np.concatenate((tail[::-1], [1.0 / eps], tail))
    return StepFunction(bps, vals, outside_value=cutoff ** (-(1.0 - eps)))


def dual_weight(w: StepFunction, p) -> StepFunction:
    """``sigma = w**(-1/(p-1))``."""
    return pointwise_power(w, as_exponent(p).dual_power)


def power_tail_integral(eps: float, p) -> float:
    """Closed form of ``int_2^inf w_eps(x)**(-1/(p-1)) x**(-p') dx``."""
    p = as_exponent(p).p
    return (p - 1) / eps * 2.0 ** (-eps / (p - 1))


def power_lhs_closed_form(eps: float, p) -> float:
    """``(int_0^1 w**(1/p)) * (int_2^inf sigma x**-p')**(1/p')`` for the exact power weight."""
    p = as_exponent(p)
    return eps ** (-1.0 / p.p) * power_tail_integral(eps, p) ** (1.0 / p.conjugate)
