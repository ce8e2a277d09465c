"""
Affine varieties over F_p: polynomial systems, exhaustive point enumeration
and the declared invariants (n, d, delta) consumed by the bounds.

The enumerator is the single code path for N(V): it scans all p^r cells
with early rejection and serves as the oracle for every other counter.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import LANG_WEIL_WARN_FACTOR, MAX_CELLS, WORKERS, check_cell_budget
from geometry.ffgrid import (
    CountField, DimensionMismatchError, GridShape, Prime, as_prime,
)

logger = logging.getLogger(__name__)

# Cells evaluated per enumeration chunk
_CHUNK_CELLS = 1 << 21

FLAG_REDUCIBLE = "reducible"
FLAG_DEGENERATE = "degenerate"
FLAG_NONSINGULAR_CURVE = "nonsingular_curve"
KNOWN_FLAGS = {FLAG_REDUCIBLE, FLAG_DEGENERATE, FLAG_NONSINGULAR_CURVE}


class VarietySpecError(Exception):
    """Raised for malformed polynomial systems or inconsistent metadata"""
    pass


@dataclass(frozen=True)
class MonomialTerm:
    coeff: int
    exps: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "exps", tuple(int(e) for e in self.exps))
        if any(e < 0 for e in self.exps):
            raise VarietySpecError(f"Negative exponent in {self.exps}")

    @property
    def degree(self) -> int:
        return sum(self.exps)


@dataclass(frozen=True)
class PolynomialSpec:
    terms: Tuple[MonomialTerm, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise VarietySpecError("Polynomial has no terms")
        widths = {len(t.exps) for t in self.terms}
        if len(widths) != 1:
            raise VarietySpecError(f"Terms disagree on the number of variables: {sorted(widths)}")

    @property
    def nvars(self) -> int:
        return len(self.terms[0].exps)

    @property
    def degree(self) -> int:
        nonzero = [t.degree for t in self.terms if t.coeff != 0]
        return max(nonzero) if nonzero else 0

    @classmethod
    def from_terms(cls, *terms: Tuple[int, Sequence[int]]) -> "PolynomialSpec":
        """PolynomialSpec.from_terms((1, (1, 1)), (-1, (0, 0))) is x1*x2 - 1"""
        return cls(tuple(MonomialTerm(int(c), tuple(e)) for c, e in terms))

    def to_json(self) -> List[Dict[str, Any]]:
        return [{"coeff": t.coeff, "exps": list(t.exps)} for t in self.terms]


@dataclass(frozen=True)
class VarietySpec:
    name: str
    r: int
    polys: Tuple[PolynomialSpec, ...]
    n: int
    d: int
    delta: int = -1
    flags: FrozenSet[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        object.__setattr__(self, "flags", frozenset(self.flags))
        errors = []
        if self.r < 2:
            errors.append(f"ambient dimension r must be >= 2, got {self.r}")
        if not 0 < self.n < self.r:
            errors.append(f"dimension n must satisfy 0 < n < r, got n={self.n}, r={self.r}")
        if self.d < 1:
            errors.append(f"degree d must be >= 1, got {self.d}")
        if self.delta < -1 or (self.delta != -1 and self.delta > self.n - 2):
            errors.append(f"delta must be -1 or at most n-2={self.n - 2}, got {self.delta}")
        if not self.polys:
            errors.append("defining system is empty")
        for i, poly in enumerate(self.polys):
            if poly.nvars != self.r:
                errors.append(f"polynomial {i} uses {poly.nvars} variables, expected {self.r}")
            elif poly.degree < 1:
                errors.append(f"polynomial {i} is constant")
        unknown = self.flags - KNOWN_FLAGS
        if unknown:
            errors.append(f"unknown flags {sorted(unknown)}")
        if FLAG_NONSINGULAR_CURVE in self.flags and (self.n != 1 or self.delta != -1):
            errors.append("a nonsingular curve has n=1 and delta=-1")
        if errors:
            raise VarietySpecError(f"Invalid variety '{self.name}': " + "; ".join(errors))

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "r": self.r,
            "n": self.n,
            "d": self.d,
            "delta": self.delta,
            "polys": [poly.to_json() for poly in self.polys],
        }


@dataclass(frozen=True, eq=False)
class PointSet:
    """F_p-points of V, one row per point, lexicographic order"""
    p: Prime
    r: int
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", as_prime(self.p))
        coords = np.array(self.coords, dtype=np.int64).reshape(-1, self.r)
        if coords.size and (coords.min() < 0 or coords.max() >= self.p.p):
            raise VarietySpecError(f"Point coordinates outside [0, {self.p.p})")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    def __len__(self) -> int:
        return int(self.coords.shape[0])

    @property
    def points(self) -> List[Tuple[int, ...]]:
        return [tuple(int(c) for c in row) for row in self.coords]

    @property
    def shape(self) -> GridShape:
        return GridShape(self.p, self.r)

    def indicator(self, force: bool = False) -> CountField:
        """0/1 CountField of V over [0,p)^r"""
        shape = self.shape
        check_cell_budget(shape.cells, MAX_CELLS, what=f"indicator grid p={self.p.p}^{self.r}",
                          force=force)
        grid = np.zeros(shape.axes, dtype=np.int64)
        if len(self):
            grid[tuple(self.coords.T)] = 1
        return CountField(shape, grid)


# =============================================================================
# Evaluation
# =============================================================================
def evaluate_poly(poly: PolynomialSpec, point: Sequence[int], p) -> int:
    """Value of the polynomial at `point`, reduced mod p"""
    p = as_prime(p).p
    if len(point) != poly.nvars:
        raise DimensionMismatchError(
            f"Point has {len(point)} coordinates, polynomial has {poly.nvars} variables"
        )
    total = 0
    for term in poly.terms:
        value = term.coeff % p
        for x, e in zip(point, term.exps):
            if e:
                value = value * pow(int(x) % p, e, p) % p
        total = (total + value) % p
    return total


def _power_tables(poly: PolynomialSpec, p: int) -> Dict[int, np.ndarray]:
    residues = np.arange(p, dtype=np.int64)
    exps = {e for t in poly.terms for e in t.exps if e > 1}
    return {e: np.array([pow(int(x), e, p) for x in residues], dtype=np.int64) for e in exps}


def evaluate_poly_columns(poly: PolynomialSpec, columns: Sequence[np.ndarray], p) -> np.ndarray:
    """Vectorized evaluation; `columns[i]` holds the i-th coordinate of every point"""
    p = as_prime(p).p
    if len(columns) != poly.nvars:
        raise DimensionMismatchError(
            f"Got {len(columns)} coordinate columns, polynomial has {poly.nvars} variables"
        )
    size = len(columns[0]) if columns else 0
    tables = _power_tables(poly, p)
    total = np.zeros(size, dtype=np.int64)
    for term in poly.terms:
        coeff = term.coeff % p
        if coeff == 0:
            continue
        value = np.full(size, coeff, dtype=np.int64)
        for col, e in zip(columns, term.exps):
            if e == 0:
                continue
            factor = col if e == 1 else tables[e][col]
            value = value * factor % p
        total = (total + value) % p
    return total


# =============================================================================
# Enumeration
# =============================================================================
def _enumerate_chunk(spec: VarietySpec, p: int, lo: int, hi: int) -> np.ndarray:
    """Points with first coordinate in [lo, hi)"""
    block = np.indices((hi - lo,) + (p,) * (spec.r - 1), dtype=np.int64).reshape(spec.r, -1)
    block[0] += lo
    columns = list(block)
    for poly in spec.polys:
        keep = evaluate_poly_columns(poly, columns, p) == 0
        columns = [col[keep] for col in columns]
        if columns[0].size == 0:
            break
    return np.stack(columns, axis=1) if columns[0].size else np.empty((0, spec.r), dtype=np.int64)


def enumerate_points(spec: VarietySpec, p, workers: Optional[int] = None,
                     force: bool = False) -> PointSet:
    """Exhaustive scan of [0,p)^r; common zeros of every defining polynomial

    The outer axis is split into chunks; chunks may run on worker threads and
    are merged back in chunk order, which is lexicographic order.
    """
    prime = as_prime(p)
    p = prime.p
    cells = p ** spec.r
    check_cell_budget(cells, MAX_CELLS, what=f"enumeration of {spec.name} at p={p}", force=force)

    if FLAG_REDUCIBLE in spec.flags or FLAG_DEGENERATE in spec.flags:
        flags = ", ".join(sorted(spec.flags & {FLAG_REDUCIBLE, FLAG_DEGENERATE}))
        logger.warning(f"{spec.name} is flagged ({flags}); the bounds assume irreducible, non-planar V")

    rows_per_chunk = max(1, _CHUNK_CELLS // (p ** (spec.r - 1)))
    bounds = [(lo, min(p, lo + rows_per_chunk)) for lo in range(0, p, rows_per_chunk)]
    workers = workers or WORKERS
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _enumerate_chunk(spec, p, *b), bounds))
    else:
        parts = [_enumerate_chunk(spec, p, lo, hi) for lo, hi in bounds]

    coords = np.concatenate(parts, axis=0) if parts else np.empty((0, spec.r), dtype=np.int64)
    points = PointSet(prime, spec.r, coords)
    logger.debug(f"Enumerated {len(points)} points of {spec.name} at p={p}")

    if lang_weil_deviation_exceeded(spec, p, len(points)):
        logger.warning(
            f"{spec.name} at p={p}: N(V)={len(points)} is far from p^n={p ** spec.n}; "
            f"check the declared n={spec.n}, d={spec.d}"
        )
    return points


def point_count(spec: VarietySpec, p, workers: Optional[int] = None) -> int:
    """N(V)"""
    return len(enumerate_points(spec, p, workers=workers))


# =============================================================================
# Lang-Weil sanity signal
# =============================================================================
def _lang_weil_scale(spec: VarietySpec, p: int) -> float:
    # d <= 2 makes (d-1)(d-2) vanish; fall back to a unit constant
    factor = (spec.d - 1) * (spec.d - 2) if spec.d > 2 else 1
    return factor * p ** (spec.n - 0.5)


def lang_weil_residual(spec: VarietySpec, p, N_V: Optional[int] = None) -> float:
    """(N(V) - p^n) / ((d-1)(d-2) p^{n-1/2}), or / p^{n-1/2} when d <= 2"""
    p = as_prime(p).p
    if N_V is None:
        N_V = point_count(spec, p)
    return (N_V - p ** spec.n) / _lang_weil_scale(spec, p)


def lang_weil_deviation_exceeded(spec: VarietySpec, p, N_V: int) -> bool:
    p = as_prime(p).p
    return abs(N_V - p ** spec.n) > LANG_WEIL_WARN_FACTOR * _lang_weil_scale(spec, p)


# =============================================================================
# Spec files
# =============================================================================
def _parse_poly(raw: Any, r: int, where: str) -> PolynomialSpec:
    if not isinstance(raw, list):
        raise VarietySpecError(f"{where}: expected a list of terms")
    terms = []
    for j, term in enumerate(raw):
        if not isinstance(term, dict) or "coeff" not in term or "exps" not in term:
            raise VarietySpecError(f"{where} term {j}: expected {{'coeff': int, 'exps': [...]}}")
        exps = term["exps"]
        if not isinstance(exps, list) or len(exps) != r:
            raise VarietySpecError(f"{where} term {j}: exps must list {r} exponents")
        try:
            terms.append(MonomialTerm(int(term["coeff"]), tuple(int(e) for e in exps)))
        except (TypeError, ValueError) as e:
            raise VarietySpecError(f"{where} term {j}: {e}")
    return PolynomialSpec(tuple(terms))


def parse_polys(raw: Any, r: int, what: str = "polys") -> Tuple[PolynomialSpec, ...]:
    if not isinstance(raw, list) or not raw:
        raise VarietySpecError(f"'{what}' must be a nonempty list of polynomials")
    return tuple(_parse_poly(poly, r, f"{what}[{i}]") for i, poly in enumerate(raw))


def variety_from_dict(data: Dict[str, Any]) -> VarietySpec:
    """Build a VarietySpec from the JSON spec-file structure"""
    if not isinstance(data, dict):
        raise VarietySpecError("Variety spec must be a JSON object")
    missing = [k for k in ("r", "n", "d", "polys") if k not in data]
    if missing:
        raise VarietySpecError(f"Variety spec is missing {missing}")
    try:
        r, n, d = int(data["r"]), int(data["n"]), int(data["d"])
    except (TypeError, ValueError) as e:
        raise VarietySpecError(f"r, n, d must be integers: {e}")
    flags = frozenset(data.get("flags", []))
    delta = data.get("delta")
    if delta is None:
        # Curves default to the nonsingular value; otherwise the worst case n-2
        delta = -1 if n == 1 else n - 2
        logger.info(f"No delta declared for {data.get('name', 'variety')}; assuming {delta}")
    return VarietySpec(
        name=str(data.get("name", "variety")),
        r=r,
        polys=parse_polys(data["polys"], r),
        n=n,
        d=d,
        delta=int(delta),
        flags=flags,
    )


def load_variety(path: Union[str, Path]) -> VarietySpec:
    """Read a variety spec file"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise VarietySpecError(f"Variety spec not found: {path}")
    except json.JSONDecodeError as e:
        raise VarietySpecError(f"Variety spec {path} is not valid JSON: {e}")
    return variety_from_dict(data)
