"""
Cyclic boxes B = I_1 x ... x I_r mod p
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple

import numpy as np

from geometry.ffgrid import DimensionMismatchError, Prime, as_prime
from geometry.variety import PointSet

logger = logging.getLogger(__name__)


class BoxError(Exception):
    """Raised for malformed intervals, boxes or box syntax"""
    pass


@dataclass(frozen=True)
class CyclicInterval:
    """{start, start+1, ..., start+length-1} mod p"""
    start: int
    length: int
    p: Prime

    def __post_init__(self):
        object.__setattr__(self, "p", as_prime(self.p))
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "length", int(self.length))
        if not 0 <= self.start < self.p.p:
            raise BoxError(f"Interval start {self.start} outside [0, {self.p.p})")
        # length 0 would make every statistic trivially zero
        if not 1 <= self.length <= self.p.p:
            raise BoxError(f"Interval length {self.length} outside [1, {self.p.p}]")

    def __contains__(self, m: int) -> bool:
        return (int(m) - self.start) % self.p.p < self.length

    def shifted(self, x: int) -> "CyclicInterval":
        return CyclicInterval((self.start + int(x)) % self.p.p, self.length, self.p)

    def members(self) -> np.ndarray:
        return (self.start + np.arange(self.length, dtype=np.int64)) % self.p.p

    def __str__(self) -> str:
        return f"{self.start}:{self.length}"


@dataclass(frozen=True)
class CyclicBox:
    intervals: Tuple[CyclicInterval, ...]

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        if not self.intervals:
            raise BoxError("A box needs at least one interval")
        primes = {iv.p.p for iv in self.intervals}
        if len(primes) != 1:
            raise BoxError(f"Intervals use different primes: {sorted(primes)}")

    @property
    def p(self) -> Prime:
        return self.intervals[0].p

    @property
    def dims(self) -> int:
        return len(self.intervals)

    @property
    def starts(self) -> Tuple[int, ...]:
        return tuple(iv.start for iv in self.intervals)

    @property
    def lengths(self) -> Tuple[int, ...]:
        return tuple(iv.length for iv in self.intervals)

    @property
    def volume(self) -> int:
        return math.prod(self.lengths)

    @classmethod
    def from_lengths(cls, lengths: Sequence[int], p, starts: Sequence[int] = None) -> "CyclicBox":
        prime = as_prime(p)
        starts = starts if starts is not None else [0] * len(lengths)
        if len(starts) != len(lengths):
            raise BoxError(f"{len(starts)} starts for {len(lengths)} lengths")
        return cls(tuple(CyclicInterval(s % prime.p, L, prime) for s, L in zip(starts, lengths)))

    @classmethod
    def full(cls, p, dims: int) -> "CyclicBox":
        prime = as_prime(p)
        return cls.from_lengths([prime.p] * dims, prime)

    def __str__(self) -> str:
        return ",".join(str(iv) for iv in self.intervals)


def box_volume(box: CyclicBox) -> int:
    """vol(B) = L_1 ... L_r"""
    return box.volume


def translate(box: CyclicBox, x: Sequence[int]) -> CyclicBox:
    """B_x = x + B"""
    if len(x) != box.dims:
        raise DimensionMismatchError(f"Translation has {len(x)} coordinates, box has {box.dims}")
    return CyclicBox(tuple(iv.shifted(xi) for iv, xi in zip(box.intervals, x)))


def contains(box: CyclicBox, point: Sequence[int]) -> bool:
    """Cyclic membership on every axis"""
    if len(point) != box.dims:
        return False
    return all(z in iv for iv, z in zip(box.intervals, point))


def membership_mask(box: CyclicBox, coords: np.ndarray) -> np.ndarray:
    """Boolean mask over the rows of `coords` that lie in the box"""
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, box.dims)
    p = box.p.p
    mask = np.ones(coords.shape[0], dtype=bool)
    for axis, iv in enumerate(box.intervals):
        if iv.length == p:
            continue
        mask &= (coords[:, axis] - iv.start) % p < iv.length
    return mask


def count_in_box(points: PointSet, box: CyclicBox) -> int:
    """N_B(V)"""
    if points.r != box.dims:
        raise DimensionMismatchError(f"Points live in {points.r} dims, box has {box.dims}")
    if points.p.p != box.p.p:
        raise BoxError(f"Points are mod {points.p.p}, box is mod {box.p.p}")
    if len(points) == 0:
        return 0
    return int(membership_mask(box, points.coords).sum())


def expected_count_exact(N_V: int, box: CyclicBox, p, r: int = None) -> Fraction:
    p = as_prime(p).p
    r = box.dims if r is None else r
    return Fraction(N_V * box.volume, p ** r)


def expected_count(N_V: int, box: CyclicBox, p, r: int = None) -> float:
    """N(V) vol(B) / p^r"""
    return float(expected_count_exact(N_V, box, p, r))


def product_box(box: CyclicBox, box2: CyclicBox) -> CyclicBox:
    """B x B' over r+s axes"""
    if box.p.p != box2.p.p:
        raise BoxError(f"Boxes use different primes: {box.p.p} and {box2.p.p}")
    return CyclicBox(box.intervals + box2.intervals)


def _parse_length(token: str, p: int) -> int:
    token = token.strip().replace(" ", "")
    if token == "p":
        return p
    if token.startswith("p^"):
        try:
            exponent = float(token[2:])
        except ValueError:
            raise BoxError(f"Bad length exponent in '{token}'")
        # rounding guards against p^0.5 landing a hair above an integer
        return min(p, max(1, math.ceil(round(p ** exponent, 9))))
    try:
        return int(token)
    except ValueError:
        raise BoxError(f"Bad interval length '{token}' (use an integer, 'p' or 'p^a')")


def parse_box(text: str, p, dims: int = None) -> CyclicBox:
    """Parse "start1:len1,start2:len2,..." ("start:" optional, default 0)

    Lengths may be an integer, "p" for a full axis, or "p^a" for ceil(p^a).
    """
    prime = as_prime(p)
    if not text or not text.strip():
        raise BoxError("Empty box specification")
    starts, lengths = [], []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            start_text, length_text = part.split(":", 1)
            try:
                start = int(start_text) if start_text.strip() else 0
            except ValueError:
                raise BoxError(f"Bad interval start in '{part}'")
        else:
            start, length_text = 0, part
        starts.append(start % prime.p)
        lengths.append(_parse_length(length_text, prime.p))
    if dims is not None and len(lengths) != dims:
        raise BoxError(f"Box '{text}' has {len(lengths)} axes, expected {dims}")
    return CyclicBox.from_lengths(lengths, prime, starts)
