"""Dyadic cubes and the three shifted dyadic lattices.

Lattice ``t`` (a vector of thirds ``tau_i in {0, 1, 2}``) consists of the
cubes

    prod_i [ base * 2**-g * (m_i + (-1)**g * tau_i / 3),  ... + base * 2**-g )

over all generations ``g`` and integer indices ``m``.  The alternating sign
keeps the grids nested, and at every scale the three grids of one axis are
offset by a third of the side length, which gives the covering factor 3 per
axis.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .stepfn import Interval, as_interval

GENERATION_CAP = 60


class GenerationCapError(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class DyadicCube:
    lattice_id: int
    generation: int
    index: tuple

    @property
    def id(self) -> str:
        return f"L{self.lattice_id}/g{self.generation}/i{','.join(str(i) for i in self.index)}"

    @classmethod
    def parse(cls, s: str) -> "DyadicCube":
        m = re.fullmatch(r"L(\d+)/g(-?\d+)/i(-?\d+(?:,-?\d+)*)", s)
        if m is None:
            raise ValueError(f"not a cube identifier: {s!r}")
        return cls(int(m.group(1)), int(m.group(2)), tuple(int(v) for v in m.group(3).split(",")))

    def __str__(self):
        return self.id


@dataclass(frozen=True)
class DyadicLattice:
    lattice_id: int = 0
    shift: tuple = (0,)
    base: float = 1.0
    origin: float = 0.0
    cap: int = GENERATION_CAP

    @property
    def d(self) -> int:
        return len(self.shift)

    def _check_generation(self, g: int):
        if abs(g) > self.cap:
            raise GenerationCapError(f"generation {g} exceeds the cap {self.cap}")

    def side(self, g: int) -> float:
        return self.base * 2.0 ** (-g)

    def _offset(self, g: int) -> np.ndarray:
        sign = 1 if g % 2 == 0 else -1
        return sign * np.asarray(self.shift, dtype=np.float64) / 3.0

    def cube(self, g: int, index) -> DyadicCube:
        self._check_generation(g)
        if isinstance(index, (int, np.integer)):
            index = (int(index),)
        index = tuple(int(i) for i in index)
        if len(index) != self.d:
            raise ValueError(f"index {index} has the wrong dimension for d={self.d}")
        return DyadicCube(self.lattice_id, g, index)

    def _own(self, Q: DyadicCube):
        if Q.lattice_id != self.lattice_id:
            raise ValueError(f"cube {Q} does not belong to lattice L{self.lattice_id}")

    def bounds(self, Q: DyadicCube) -> tuple[np.ndarray, np.ndarray]:
        self._own(Q)
        h = self.side(Q.generation)
        lo = self.origin + h * (np.asarray(Q.index, dtype=np.float64) + self._offset(Q.generation))
        return lo, lo + h

    def interval(self, Q: DyadicCube) -> Interval:
        """The cube as an :class:`Interval` (d = 1 only)."""
        if self.d != 1:
            raise ValueError("interval() is only defined for d = 1")
        lo, hi = self.bounds(Q)
        return Interval(float(lo[0]), float(hi[0]))

    def volume(self, Q: DyadicCube) -> float:
        return self.side(Q.generation) ** self.d

    def children(self, Q: DyadicCube) -> list[DyadicCube]:
        self._own(Q)
        g = Q.generation
        self._check_generation(g + 1)
        sign = 1 if g % 2 == 0 else -1
        firsts = [2 * m + sign * t for m, t in zip(Q.index, self.shift)]
        return [
            DyadicCube(self.lattice_id, g + 1, tuple(f + e for f, e in zip(firsts, eps)))
            for eps in itertools.product((0, 1), repeat=self.d)
        ]

    def parent(self, Q: DyadicCube) -> DyadicCube:
        self._own(Q)
        g = Q.generation - 1
        self._check_generation(g)
        sign = 1 if g % 2 == 0 else -1
        return DyadicCube(self.lattice_id, g, tuple((m - sign * t) // 2 for m, t in zip(Q.index, self.shift)))

    def ancestor(self, Q: DyadicCube, g: int) -> DyadicCube:
        if g > Q.generation:
            raise ValueError("an ancestor cannot be finer than the cube")
        while Q.generation > g:
            Q = self.parent(Q)
        return Q

    def contains(self, Q: DyadicCube, R: DyadicCube) -> bool:
        """``R`` is a subset of ``Q``."""
        return R.generation >= Q.generation and self.ancestor(R, Q.generation) == Q

    def locate(self, x, g: int) -> DyadicCube:
        """The generation-``g`` cube containing the point ``x``."""
        self._check_generation(g)
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        h = self.side(g)
        idx = np.floor((x - self.origin) / h - self._offset(g)).astype(np.int64)
        Q = DyadicCube(self.lattice_id, g, tuple(int(i) for i in idx))
        # guard the floor against rounding at cube faces
        lo, hi = self.bounds(Q)
        fixed = list(Q.index)
        for i in range(self.d):
            if x[i] < lo[i]:
                fixed[i] -= 1
            elif x[i] >= hi[i]:
                fixed[i] += 1
        return DyadicCube(self.lattice_id, g, tuple(fixed))

    def cubes_in(self, window, g: int) -> list[DyadicCube]:
        """All generation-``g`` cubes contained in a box ``window`` (intervals per axis)."""
        boxes = _as_box(window, self.d)
        h = self.side(g)
        off = self._offset(g)
        ranges = []
        for i, I in enumerate(boxes):
            m0 = math.ceil((I.a - self.origin) / h - off[i] - 1e-12)
            m1 = math.floor((I.b - self.origin) / h - off[i] + 1e-12) - 1
            ranges.append(range(m0, m1 + 1))
        out = []
        for idx in itertools.product(*ranges):
            Q = self.cube(g, idx)
            lo, hi = self.bounds(Q)
            if all(lo[i] >= boxes[i].a - 1e-12 * h and hi[i] <= boxes[i].b + 1e-12 * h for i in range(self.d)):
                out.append(Q)
        return out

    def descendants(self, Q: DyadicCube, depth: int) -> Iterator[DyadicCube]:
        """``Q`` and its descendants down to ``depth`` generations below, breadth first."""
        level = [Q]
        for _ in range(depth + 1):
            yield from level
            if _ == depth:
                break
            level = [c for R in level for c in self.children(R)]

    def smallest_cover(self, box) -> DyadicCube:
        """Smallest cube of this lattice containing the box."""
        boxes = _as_box(box, self.d)
        ell = max(I.length for I in boxes)
        g = math.floor(math.log2(self.base / ell))
        g = min(g, self.cap)
        while True:
            self._check_generation(g)
            Q = self.locate([I.a for I in boxes], g)
            lo, hi = self.bounds(Q)
            if all(hi[i] >= boxes[i].b for i in range(self.d)):
                return Q
            g -= 1


def _as_box(window, d: int) -> list[Interval]:
    if isinstance(window, Interval):
        boxes = [window]
    elif len(window) == 2 and not isinstance(window[0], (Interval, tuple, list)):
        boxes = [as_interval(window)]
    else:
        boxes = [as_interval(I) for I in window]
    if len(boxes) != d:
        raise ValueError(f"box of dimension {len(boxes)} given to a d={d} lattice")
    return boxes


def standard_lattice(base: float = 1.0, origin: float = 0.0, d: int = 1) -> DyadicLattice:
    return DyadicLattice(0, (0,) * d, base, origin)


def three_lattices(d: int = 1, base: float = 1.0, origin: float = 0.0) -> list[DyadicLattice]:
    """The ``3**d`` lattices with per-axis shifts 0, 1/3, 2/3 (alternating sign by generation)."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    return [
        DyadicLattice(j, shift, base, origin)
        for j, shift in enumerate(itertools.product((0, 1, 2), repeat=d))
    ]


def children(Q: DyadicCube, lattice: DyadicLattice) -> list[DyadicCube]:
    return lattice.children(Q)


def dyadic_cover(Q, lattices: Sequence[DyadicLattice]) -> tuple[int, DyadicCube]:
    """A cube ``R`` from one of ``lattices`` with ``Q`` inside ``R``; the smallest one found.

    Ties go to the lowest lattice id, so a standard dyadic cube is covered by itself.
    """
    best = None
    for L in lattices:
        R = L.smallest_cover(Q)
        key = (L.volume(R), L.lattice_id)
        if best is None or key < best[0]:
            best = (key, L.lattice_id, R)
    return best[1], best[2]
