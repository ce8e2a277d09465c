"""
Prime-field scalars, e_p phases and row-major indexing of [0,p)^dims
"""
import cmath
import logging
import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

INDEX_LIMIT = 2 ** 63 - 1


class FieldError(Exception):
    """Base exception for prime-field and grid errors"""
    pass


class NotPrimeError(FieldError):
    """Raised when a modulus fails the primality check"""
    pass


class DimensionMismatchError(FieldError):
    """Raised when coordinate lengths disagree with the ambient dimension"""
    pass


class GridOverflowError(FieldError):
    """Raised when p^dims does not fit the int64 index range"""
    pass


def is_prime(n: int) -> bool:
    """Trial division; fine for desk-scale primes"""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


@dataclass(frozen=True)
class Prime:
    p: int

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or isinstance(self.p, bool):
            raise NotPrimeError(f"Prime modulus must be an integer, got {self.p!r}")
        object.__setattr__(self, "p", int(self.p))
        if not is_prime(self.p):
            raise NotPrimeError(f"{self.p} is not prime")

    def __int__(self) -> int:
        return self.p

    def __index__(self) -> int:
        return self.p

    def element(self, value: int) -> "FieldElement":
        return FieldElement(int(value) % self.p, self)

    def roots(self) -> np.ndarray:
        """Table of e_p(t) for t in [0, p)"""
        return roots_of_unity(self.p)


@dataclass(frozen=True)
class FieldElement:
    value: int
    p: Prime

    def __post_init__(self):
        if not 0 <= self.value < self.p.p:
            raise FieldError(f"{self.value} is not a residue in [0, {self.p.p})")

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value


def as_prime(p) -> Prime:
    return p if isinstance(p, Prime) else Prime(p)


def residue(value, p) -> int:
    """value mod p; a FieldElement must already belong to F_p"""
    p = as_prime(p).p
    if isinstance(value, FieldElement):
        if value.p.p != p:
            raise FieldError(f"Element of F_{value.p.p} used with p={p}")
        return value.value
    return int(value) % p


# Root tables are shared across the run; cleared with clear_cache()
_roots_cache: Dict[int, np.ndarray] = {}


def roots_of_unity(p: int) -> np.ndarray:
    """Precomputed e^{2 pi i t / p} for t = 0..p-1 (cached per prime)"""
    p = int(p)
    table = _roots_cache.get(p)
    if table is None:
        t = np.arange(p, dtype=np.float64)
        table = np.exp(2j * np.pi * t / p)
        # exact at t = 0
        table[0] = 1.0 + 0.0j
        table.setflags(write=False)
        _roots_cache[p] = table
        logger.debug(f"Built root-of-unity table for p={p}")
    return table


def clear_cache() -> None:
    """Drop cached root tables"""
    global _roots_cache
    _roots_cache = {}


def ep_phase(t: int, p) -> complex:
    """e_p(t) = exp(2 pi i (t mod p) / p), read from the per-prime table"""
    p = as_prime(p).p
    return complex(roots_of_unity(p)[residue(t, p)])


def ep_phase_exact(t: int, p) -> complex:
    """Trig evaluation of e_p(t); oracle for the table"""
    p = as_prime(p).p
    return cmath.exp(2j * math.pi * (int(t) % p) / p)


@dataclass(frozen=True)
class GridShape:
    p: Prime
    dims: int

    def __post_init__(self):
        object.__setattr__(self, "p", as_prime(self.p))
        if self.dims < 1:
            raise FieldError(f"Grid needs at least one axis, got dims={self.dims}")
        if self.p.p ** self.dims > INDEX_LIMIT:
            raise GridOverflowError(
                f"p^dims = {self.p.p}^{self.dims} overflows the int64 index range"
            )

    @property
    def cells(self) -> int:
        return self.p.p ** self.dims

    @property
    def axes(self) -> Tuple[int, ...]:
        return (self.p.p,) * self.dims


def grid_index(coords: Sequence[Union[int, FieldElement]], shape: GridShape) -> int:
    """Row-major linear index, last axis fastest"""
    if len(coords) != shape.dims:
        raise DimensionMismatchError(
            f"Expected {shape.dims} coordinates, got {len(coords)}"
        )
    p = shape.p.p
    index = 0
    for c in coords:
        c = residue(c, p) if isinstance(c, FieldElement) else int(c)
        if not 0 <= c < p:
            raise FieldError(f"Coordinate {c} outside [0, {p})")
        index = index * p + c
    return index


def grid_coords(index: int, shape: GridShape) -> Tuple[int, ...]:
    """Inverse of grid_index"""
    if not 0 <= index < shape.cells:
        raise FieldError(f"Index {index} outside [0, {shape.cells})")
    p = shape.p.p
    out = []
    for _ in range(shape.dims):
        index, c = divmod(index, p)
        out.append(c)
    return tuple(reversed(out))


@dataclass(frozen=True, eq=False)
class CountField:
    """Integer array over [0,p)^dims; entry at x is a per-translate count"""
    shape: GridShape
    counts: np.ndarray

    def __post_init__(self):
        if self.counts.shape != self.shape.axes:
            raise DimensionMismatchError(
                f"Count array shape {self.counts.shape} does not match grid {self.shape.axes}"
            )
        if self.counts.dtype != np.int64:
            object.__setattr__(self, "counts", self.counts.astype(np.int64))

    @property
    def p(self) -> int:
        return self.shape.p.p

    @property
    def dims(self) -> int:
        return self.shape.dims

    @property
    def cells(self) -> int:
        return self.shape.cells

    def total(self) -> int:
        """Exact sum of all entries"""
        return int(self.counts.sum(dtype=np.int64))

    def at(self, coords: Sequence[int]) -> int:
        return int(self.counts[tuple(int(c) for c in coords)])

    def is_indicator(self) -> bool:
        return bool(np.all((self.counts == 0) | (self.counts == 1)))

    def equals(self, other: "CountField") -> bool:
        return self.shape == other.shape and bool(np.array_equal(self.counts, other.counts))
