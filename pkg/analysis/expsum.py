"""
Complete character sums over V, interval geometric sums, the Katz bound and
the Fourier (orthogonality) reconstruction of box counts as M + E.
"""
import itertools
import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Union

import numpy as np

from config import FOURIER_MAX_PHASES, check_cell_budget
from geometry.boxes import CyclicBox, CyclicInterval, count_in_box, product_box
from geometry.ffgrid import DimensionMismatchError, FieldElement, as_prime, residue, roots_of_unity
from geometry.polymap import PolyMap, graph_points
from geometry.variety import PointSet

logger = logging.getLogger(__name__)

# Frequencies per block in fourier_count
_FREQ_BLOCK = 4096


class ExpSumError(Exception):
    """Raised for inconsistent functionals or maps"""
    pass


def _csum(values: np.ndarray) -> complex:
    """Compensated complex sum in a fixed order"""
    values = np.asarray(values, dtype=np.complex128).ravel()
    return complex(math.fsum(values.real.tolist()), math.fsum(values.imag.tolist()))


@dataclass(frozen=True)
class LinearFunctional:
    """z -> u.z + v.g(z) mod p"""
    u: tuple
    v: tuple
    p: int

    def __post_init__(self):
        p = as_prime(self.p).p
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", tuple(int(x) % p for x in self.u))
        object.__setattr__(self, "v", tuple(int(x) % p for x in self.v))

    @property
    def is_zero(self) -> bool:
        return not any(self.u) and not any(self.v)

    def negated(self) -> "LinearFunctional":
        return LinearFunctional(tuple(-x for x in self.u), tuple(-x for x in self.v), self.p)


@dataclass(frozen=True)
class ExpSumReport:
    value: complex
    modulus: float
    katz_bound: float
    satisfied: bool
    bombieri_regime: bool

    def to_dict(self, decimals: int = 9) -> Dict[str, Any]:
        return {
            "value_real": round(self.value.real, decimals),
            "value_imag": round(self.value.imag, decimals),
            "modulus": round(self.modulus, decimals),
            "katz_bound": self.katz_bound,
            "satisfied": self.satisfied,
            "bombieri_regime": self.bombieri_regime,
        }


def _phase_indices(points: PointSet, func: LinearFunctional,
                   poly_map: Optional[PolyMap]) -> np.ndarray:
    if len(func.u) != points.r:
        raise DimensionMismatchError(f"u has {len(func.u)} entries, V lives in {points.r} dims")
    s = 0 if poly_map is None else poly_map.s
    if len(func.v) != s:
        raise DimensionMismatchError(f"v has {len(func.v)} entries, map has {s} components")
    p = points.p.p
    idx = points.coords @ np.array(func.u, dtype=np.int64) % p
    if s:
        images = poly_map.apply_columns(points)
        idx = (idx + images @ np.array(func.v, dtype=np.int64)) % p
    return idx


def variety_char_sum(points: PointSet, func: LinearFunctional,
                     poly_map: Optional[PolyMap] = None) -> complex:
    """sum_{z in V} e_p(u.z + v.g(z)) from the root table"""
    if func.p != points.p.p:
        raise ExpSumError(f"Functional is mod {func.p}, points are mod {points.p.p}")
    if len(points) == 0:
        return 0j
    idx = _phase_indices(points, func, poly_map)
    return _csum(roots_of_unity(func.p)[idx])


def katz_bound(d: int, n: int, r_plus_s: int, delta: int, p: int) -> float:
    """(4d+9)^{n+r} p^{(n+1+delta)/2}; r is r+s when a map is present"""
    if delta < -1:
        raise ExpSumError(f"delta must be >= -1, got {delta}")
    return float((4 * d + 9) ** (n + r_plus_s)) * float(p) ** ((n + 1 + delta) / 2)


def char_sum_report(points: PointSet, func: LinearFunctional, d: int, n: int, delta: int,
                    poly_map: Optional[PolyMap] = None) -> ExpSumReport:
    """Character sum checked against the Katz bound (Bombieri regime for curves)"""
    value = variety_char_sum(points, func, poly_map)
    s = 0 if poly_map is None else poly_map.s
    bound = katz_bound(d, n, points.r + s, delta, func.p)
    modulus = abs(value)
    return ExpSumReport(value, modulus, bound, modulus <= bound, n == 1)


# =============================================================================
# Interval sums (geometric series)
# =============================================================================
def interval_sum(interval: CyclicInterval, t: Union[int, FieldElement], p=None) -> complex:
    """sum_{m in I} e_p(t m) in closed form

    h for t = 0, else e^{-2 pi i t l/p} (1 - e^{-2 pi i t h/p}) / (1 - e^{-2 pi i t/p}),
    the form used in the bound for sum_{t != 0} |.|; it is the conjugate of
    sum_m e_p(-t m).
    """
    p = interval.p.p if p is None else as_prime(p).p
    t = residue(t, p)
    h = interval.length
    if t == 0:
        return complex(h)
    l = interval.start
    num = 1 - np.exp(-2j * np.pi * t * h / p)
    den = 1 - np.exp(-2j * np.pi * t / p)
    return complex(np.exp(-2j * np.pi * t * l / p) * num / den).conjugate()


def interval_sum_direct(interval: CyclicInterval, t: Union[int, FieldElement], p=None) -> complex:
    """Direct summation oracle for interval_sum"""
    p = interval.p.p if p is None else as_prime(p).p
    roots = roots_of_unity(p)
    return _csum(roots[(interval.members() * residue(t, p)) % p])


def least_absolute_residue(t: int, p: int) -> int:
    """s = t mod p with |s| <= (p-1)/2"""
    s = int(t) % p
    return s - p if s > p // 2 else s


@dataclass(frozen=True)
class Lemma2Report:
    p: int
    start: int
    length: int
    total: float
    bound: float
    satisfied: bool
    per_term_satisfied: bool
    tested: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def lemma2_total(interval: CyclicInterval, p=None) -> Lemma2Report:
    """sum_{t != 0} |sum_{m in I} e_p(t m)| against 2 p log p

    Each term is also checked against p/|s| (s the least absolute residue).
    The sine inequality behind the bound holds for p >= 5, so p in {2, 3} is
    reported as untested.
    """
    p = interval.p.p if p is None else as_prime(p).p
    moduli = [abs(interval_sum(interval, t, p)) for t in range(1, p)]
    total = math.fsum(moduli)
    bound = 2 * p * math.log(p)
    tol = 1e-9
    per_term = all(
        m <= p / abs(least_absolute_residue(t, p)) + tol
        for t, m in zip(range(1, p), moduli)
    )
    return Lemma2Report(
        p=p,
        start=interval.start,
        length=interval.length,
        total=total,
        bound=bound,
        satisfied=total <= bound + tol,
        per_term_satisfied=per_term,
        tested=p >= 5,
    )


# =============================================================================
# Fourier reconstruction of box counts
# =============================================================================
@dataclass(frozen=True)
class FourierReport:
    M: float
    E: float
    reconstructed: float
    direct: int
    error_scale: float

    @property
    def error(self) -> float:
        return self.reconstructed - self.direct

    @property
    def exact(self) -> bool:
        return round(self.reconstructed) == self.direct

    def to_dict(self, decimals: int = 9) -> Dict[str, Any]:
        return {
            "M": round(self.M, decimals),
            "E": round(self.E, decimals),
            "reconstructed": round(self.reconstructed, decimals),
            "direct": self.direct,
            "error": round(self.error, decimals),
            "E_over_error_scale": round(self.E / self.error_scale, decimals),
        }


def box_error_scale(p: int, n: int, delta: int, dims: int) -> float:
    """p^{(n+1+delta)/2} log^dims p, the single-box error scale"""
    return float(p) ** ((n + 1 + delta) / 2) * math.log(p) ** dims


def _axis_weights(box: CyclicBox) -> List[np.ndarray]:
    """A_i(u) = sum_{m in I_i} e_p(-m u) for u in [0, p)"""
    p = box.p.p
    return [
        np.array([interval_sum(iv, u, p).conjugate() for u in range(p)], dtype=np.complex128)
        for iv in box.intervals
    ]


def fourier_count(points: PointSet, box: CyclicBox, poly_map: Optional[PolyMap] = None,
                  box2: Optional[CyclicBox] = None, n: int = None, delta: int = -1,
                  force: bool = False) -> FourierReport:
    """N_{B,B'}(V,g) = p^{-(r+s)} sum_{u,v} prod A_i(u_i) prod A'_j(v_j) S(u,v)

    M is the (u,v) = (0,0) term, E the rest. Frequencies are processed in a
    fixed block order and block partials are combined with compensated sums.
    """
    if (poly_map is None) != (box2 is None):
        raise ExpSumError("A map and a second box must be given together")
    if box.dims != points.r:
        raise DimensionMismatchError(f"Box has {box.dims} axes, V lives in {points.r} dims")
    p = points.p.p

    if poly_map is not None:
        if box2.dims != poly_map.s:
            raise DimensionMismatchError(f"Second box has {box2.dims} axes, map has {poly_map.s}")
        cloud = graph_points(points, poly_map, force=force)
        full_box = product_box(box, box2)
    else:
        cloud = points
        full_box = box
    dims = full_box.dims
    check_cell_budget(p ** dims, FOURIER_MAX_PHASES, what="Fourier frequency grid", force=force)

    direct = count_in_box(cloud, full_box)
    N_V = len(points)
    M = N_V * full_box.volume / p ** dims
    scale = box_error_scale(p, n if n is not None else max(1, points.r - 1), delta, dims)
    if N_V == 0:
        return FourierReport(0.0, 0.0, 0.0, 0, scale)

    weights = _axis_weights(full_box)
    roots = roots_of_unity(p)
    coords = cloud.coords
    partials = []
    freqs = itertools.product(range(p), repeat=dims)
    # skip (0,...,0); it is M
    next(freqs)
    while True:
        block = list(itertools.islice(freqs, _FREQ_BLOCK))
        if not block:
            break
        W = np.array(block, dtype=np.int64)
        S = roots[(W @ coords.T) % p].sum(axis=1)
        weight = np.ones(len(block), dtype=np.complex128)
        for axis in range(dims):
            weight *= weights[axis][W[:, axis]]
        partials.append(_csum(weight * S))
    E_complex = _csum(np.array(partials, dtype=np.complex128)) / p ** dims
    if abs(E_complex.imag) > 1e-6:
        logger.warning(f"Fourier error term has imaginary part {E_complex.imag:.3e}")
    E = E_complex.real
    return FourierReport(M, E, M + E, direct, scale)
