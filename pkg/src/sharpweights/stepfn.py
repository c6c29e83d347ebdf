"""Exact calculus of piecewise-constant functions on the real line.

A :class:`StepFunction` is a finite list of half-open pieces ``[x_i, x_{i+1})``
carrying constant values, a constant value outside the mesh, and an optional
period.  Everything else in the package (weights, sparse operators, level
sets) is expressed in terms of the primitives here.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "Interval",
    "Exponent",
    "StepFunction",
    "AnalyticForm",
    "integrate",
    "pointwise_power",
    "level_measure",
    "compare_measure",
]


class DomainError(ValueError):
    """Raised when an operation is applied outside its mathematical domain."""


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"interval endpoints must be finite, got [{self.a}, {self.b}]")
        if not self.a < self.b:
            raise ValueError(f"interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a

    def __contains__(self, x) -> bool:
        return self.a <= x < self.b

    def to_list(self):
        return [self.a, self.b]


@dataclass(frozen=True)
class Exponent:
    p: float

    def __post_init__(self):
        if not (1.0 < self.p < math.inf):
            raise ValueError(f"exponent must satisfy 1 < p < inf, got {self.p}")

    @property
    def conjugate(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def dual_power(self) -> float:
        """The power -1/(p-1) taking w to its dual weight."""
        return -1.0 / (self.p - 1.0)


def as_exponent(p) -> Exponent:
    return p if isinstance(p, Exponent) else Exponent(float(p))


def as_interval(I) -> Interval:
    if isinstance(I, Interval):
        return I
    a, b = I
    return Interval(float(a), float(b))


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Piecewise-constant function with value ``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``.

    With ``period`` set, the function on the mesh is repeated with that period
    and ``outside_value`` is never used.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    outside_value: float = 0.0
    period: Optional[float] = None

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=np.float64)
        vals = np.array(self.values, dtype=np.float64)
        if bp.ndim != 1 or vals.ndim != 1:
            raise ValueError("breakpoints and values must be one-dimensional")
        if vals.size < 1:
            raise ValueError("a step function needs at least one piece")
        if bp.size != vals.size + 1:
            raise ValueError(f"{bp.size} breakpoints cannot carry {vals.size} pieces")
        if not np.all(np.isfinite(bp)):
            raise ValueError("breakpoints must be finite")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(vals)) or not math.isfinite(self.outside_value):
            raise ValueError("values must be finite")
        period = self.period
        if period is not None:
            period = float(period)
            span = bp[-1] - bp[0]
            if not period > 0 or abs(period - span) > 1e-12 * max(1.0, abs(span)):
                raise ValueError(f"period {period} must equal the mesh span {span}")
            period = span
        bp.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "outside_value", float(self.outside_value))
        object.__setattr__(self, "period", period)

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c: float, a: float = 0.0, b: float = 1.0, outside_value=None) -> "StepFunction":
        return cls([a, b], [c], c if outside_value is None else outside_value)

    @classmethod
    def indicator(cls, a: float, b: float, height: float = 1.0) -> "StepFunction":
        return cls([a, b], [height], 0.0)

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple], outside_value: float = 0.0) -> "StepFunction":
        """Build from ``(a, b, value)`` triples; gaps between them take ``outside_value``."""
        pieces = sorted(pieces)
        if not pieces:
            raise ValueError("no pieces given")
        bp = [pieces[0][0]]
        vals = []
        for a, b, v in pieces:
            if a < bp[-1]:
                raise ValueError("pieces overlap")
            if a > bp[-1]:
                vals.append(outside_value)
                bp.append(a)
            vals.append(v)
            bp.append(b)
        return cls(bp, vals, outside_value)

    # -- basic queries ----------------------------------------------------

    @property
    def n_pieces(self) -> int:
        return self.values.size

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def support(self) -> Interval:
        return Interval(self.breakpoints[0], self.breakpoints[-1])

    def _wrap(self, x):
        x0 = self.breakpoints[0]
        return x0 + np.mod(np.asarray(x, dtype=np.float64) - x0, self.period)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.period is not None:
            x = self._wrap(x)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.n_pieces)
        out = np.where(inside, self.values[np.clip(idx, 0, self.n_pieces - 1)], self.outside_value)
        return out if out.ndim else float(out)

    def pieces(self, window) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Pieces of ``self`` clipped to ``window`` as arrays ``(left, right, value)``.

        Regions outside the mesh appear as pieces with ``outside_value``;
        periodic functions are unrolled over every period the window meets.
        """
        w = as_interval(window)
        bp = self.breakpoints
        if self.period is None:
            edges = np.concatenate(([-np.inf], bp, [np.inf]))
            vals = np.concatenate(([self.outside_value], self.values, [self.outside_value]))
            lo, hi = edges[:-1], edges[1:]
        else:
            x0, T = bp[0], self.period
            k0 = math.floor((w.a - x0) / T)
            k1 = math.floor((w.b - x0) / T)
            shifts = np.arange(k0, k1 + 1, dtype=np.float64) * T
            lo = (bp[:-1][None, :] + shifts[:, None]).ravel()
            hi = (bp[1:][None, :] + shifts[:, None]).ravel()
            vals = np.tile(self.values, shifts.size)
        left = np.maximum(lo, w.a)
        right = np.minimum(hi, w.b)
        keep = right > left
        return left[keep], right[keep], vals[keep]

    def total(self) -> float:
        """Integral over one copy of the mesh."""
        return float(np.sum(self.values * self.lengths))

    # -- arithmetic on common refinements ---------------------------------

    def _binary(self, other: "StepFunction", op) -> "StepFunction":
        if self.period is not None or other.period is not None:
            raise ValueError("arithmetic between step functions needs non-periodic operands")
        bp = np.union1d(self.breakpoints, other.breakpoints)
        mid = 0.5 * (bp[:-1] + bp[1:])
        vals = op(self(mid), other(mid))
        return StepFunction(bp, vals, op(self.outside_value, other.outside_value))

    def __add__(self, other):
        if isinstance(other, StepFunction):
            return self._binary(other, np.add)
        return StepFunction(self.breakpoints, self.values + other, self.outside_value + other, self.period)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, StepFunction):
            return self._binary(other, np.subtract)
        return self + (-other)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, other):
        if isinstance(other, StepFunction):
            return self._binary(other, np.multiply)
        return StepFunction(self.breakpoints, self.values * other, self.outside_value * other, self.period)

    __rmul__ = __mul__

    def restrict(self, window) -> "StepFunction":
        """``f * chi_window`` as a non-periodic step function."""
        left, right, vals = self.pieces(window)
        return StepFunction(np.concatenate((left, right[-1:])), vals, 0.0)

    def refine(self, points: Sequence[float]) -> "StepFunction":
        """Same function on a finer mesh (points outside the mesh are ignored)."""
        if self.period is not None:
            pts = self._wrap(np.asarray(points, dtype=np.float64))
        else:
            pts = np.asarray(points, dtype=np.float64)
        bp = self.breakpoints
        pts = pts[(pts > bp[0]) & (pts < bp[-1])]
        new_bp = np.union1d(bp, pts)
        mid = 0.5 * (new_bp[:-1] + new_bp[1:])
        return StepFunction(new_bp, self(mid), self.outside_value, self.period)

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
            "outside": self.outside_value,
            "period": self.period,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StepFunction":
        return cls(d["breakpoints"], d["values"], d.get("outside", 0.0), d.get("period"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "StepFunction":
        return cls.from_dict(json.loads(s))

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (
            np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
            and self.outside_value == other.outside_value
            and self.period == other.period
        )

    __hash__ = None


def integrate(f: StepFunction, I) -> float:
    """Exact integral of ``f`` over ``I`` (sum of value times overlap length)."""
    I = as_interval(I)
    if f.period is not None:
        T = f.period
        # whole periods are summed once, only the two ragged ends are unrolled
        n_full = math.floor((I.b - I.a) / T)
        if n_full >= 2:
            rest = Interval(I.a + n_full * T, I.b) if I.b > I.a + n_full * T else None
            head = n_full * f.total()
            return head + (integrate(f, rest) if rest is not None else 0.0)
    left, right, vals = f.pieces(I)
    return float(np.sum(vals * (right - left)))


def pointwise_power(f: StepFunction, s: float) -> StepFunction:
    """``f**s`` piece by piece on the same mesh."""
    s = float(s)
    if s == 1.0:
        return f
    vals = np.append(f.values, f.outside_value)
    integral_power = float(s).is_integer()
    if s < 0 and np.any(f.values <= 0):
        raise DomainError(f"negative power {s} of a function with nonpositive values")
    if not integral_power and np.any(f.values < 0):
        raise DomainError(f"fractional power {s} of a function with negative values")
    with np.errstate(divide="ignore"):
        out = np.power(vals, s)
    if not math.isfinite(out[-1]):
        # the outside value is only used off the mesh; 0**negative there becomes +inf
        if f.period is None:
            raise DomainError(f"power {s} of outside value {f.outside_value}")
        out[-1] = 0.0
    return StepFunction(f.breakpoints, out[:-1], out[-1], f.period)


def level_measure(f: StepFunction, alpha: float, window) -> float:
    """Lebesgue measure of ``{x in window : f(x) > alpha}``."""
    left, right, vals = f.pieces(window)
    return float(np.sum((right - left)[vals > alpha]))


@dataclass(frozen=True)
class AnalyticForm:
    """Monotone comparison curves ``g`` for :func:`compare_measure`.

    ``identity``    g(x) = coef * x
    ``reciprocal``  g(x) = coef / x            (x > 0)
    ``constant``    g(x) = coef
    ``inv_hilbert_unit``  g(x) = coef / H(chi_[0,1])(x) = coef / ln(x / (x - 1))   (x > 1)
    """

    kind: str
    coef: float = 1.0

    KINDS = ("identity", "reciprocal", "constant", "inv_hilbert_unit")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unsupported analytic form {self.kind!r}")
        if self.kind != "constant" and not self.coef > 0:
            raise ValueError("identity/reciprocal forms need a positive coefficient")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "identity":
            return self.coef * x
        if self.kind == "reciprocal":
            return self.coef / x
        if self.kind == "constant":
            return np.full_like(x, self.coef)
        return self.coef / np.log(x / (x - 1.0))

    def superlevel(self, c: float, a: float, b: float) -> float:
        """Measure of ``{x in [a, b) : c > g(x)}``."""
        if self.kind == "identity":
            cut = c / self.coef
            return max(0.0, min(b, cut) - a)
        if self.kind == "constant":
            return b - a if c > self.coef else 0.0
        if self.kind == "reciprocal":
            if a < 0:
                raise DomainError("reciprocal form is only compared on x > 0")
            if c <= 0:
                return 0.0
            cut = self.coef / c
            return max(0.0, b - max(a, cut))
        # g increases from 0 at x=1 to infinity; c > g(x) iff x < 1/(1 - exp(-coef/c))
        if a < 1:
            raise DomainError("Hilbert form is only compared on x > 1")
        if c <= 0:
            return 0.0
        cut = -1.0 / math.expm1(-self.coef / c)
        return max(0.0, min(b, cut) - a)


def compare_measure(f: StepFunction, g: AnalyticForm, window) -> float:
    """Exact measure of ``{x in window : f(x) > g(x)}`` solved piece by piece."""
    if isinstance(g, str):
        g = AnalyticForm(g)
    if not isinstance(g, AnalyticForm):
        raise TypeError(f"unsupported comparison curve {g!r}")
    left, right, vals = f.pieces(window)
    return float(sum(g.superlevel(c, a, b) for a, b, c in zip(left.tolist(), right.tolist(), vals.tolist())))
