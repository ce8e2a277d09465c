"""
Translate lattice with steps equal to the box sides.

Boxes at distinct lattice points are disjoint except that the last offset on
an axis (a = floor(p/L)) may wrap onto the boxes at a = 0. The zero-box
counting argument runs over this lattice and its shifts.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from geometry.boxes import CyclicBox, membership_mask, translate
from geometry.ffgrid import CountField
from geometry.variety import PointSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TranslateLattice:
    p: int
    steps: Tuple[int, ...]
    # per axis: offsets a*L_i and whether that offset is the wrapping boundary
    axis_offsets: Tuple[Tuple[int, ...], ...]
    axis_boundary: Tuple[Tuple[bool, ...], ...]

    @property
    def dims(self) -> int:
        return len(self.steps)

    @property
    def points(self) -> List[Tuple[int, ...]]:
        return list(itertools.product(*self.axis_offsets))

    def boundary_flags(self) -> List[bool]:
        """Per lattice point (same order as points): lies on a wrapping boundary"""
        return [any(flags) for flags in itertools.product(*self.axis_boundary)]

    def __len__(self) -> int:
        size = 1
        for offsets in self.axis_offsets:
            size *= len(offsets)
        return size


def lattice_sample(box: CyclicBox, p=None) -> TranslateLattice:
    """Lattice {a_i L_i : 0 <= a_i <= p/L_i}; offsets that wrap to 0 are dropped"""
    p = box.p.p if p is None else int(p)
    offsets, boundary = [], []
    for L in box.lengths:
        top = p // L
        axis_offsets, axis_flags = [], []
        for a in range(top + 1):
            x = a * L
            if x >= p:
                # a*L = p duplicates the offset 0
                continue
            axis_offsets.append(x)
            axis_flags.append(a == top)
        offsets.append(tuple(axis_offsets))
        boundary.append(tuple(axis_flags))
    return TranslateLattice(p, box.lengths, tuple(offsets), tuple(boundary))


def lattice_multiplicity(points: PointSet, box: CyclicBox, lattice: TranslateLattice) -> np.ndarray:
    """For every point of V, the number of lattice boxes containing it (<= 2^dims)"""
    hits = np.zeros(len(points), dtype=np.int64)
    if len(points) == 0:
        return hits
    for x in lattice.points:
        hits += membership_mask(translate(box, x), points.coords)
    return hits


def lattice_zero_fraction(field: CountField, lattice: TranslateLattice, shift=None) -> float:
    """Fraction of (shifted) lattice translates whose count is zero"""
    shift = shift or (0,) * lattice.dims
    p = field.p
    zeros = 0
    for x in lattice.points:
        y = tuple((xi + si) % p for xi, si in zip(x, shift))
        zeros += int(field.counts[y] == 0)
    return zeros / len(lattice)
