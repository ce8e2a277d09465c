"""
Statistics of a count field: second moment, bound ratio, exceptional and
zero-box fractions, histograms and the volume regime of a box.
"""
import logging
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from config import DEFAULT_EPSILON
from geometry.ffgrid import CountField

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction]

REGIME_LANG_WEIL = "lang-weil"
REGIME_NONEMPTY_ALL = "nonempty-all"
REGIME_ALMOST_ALL = "almost-all"
REGIME_MARGINAL = "marginal"
REGIME_ZERO_BOX = "zero-box"

CSV_COLUMNS = [
    "p", "r", "n", "delta", "vol_B", "N_V", "expected", "second_moment",
    "bound_ratio", "epsilon", "exceptional_fraction", "zero_fraction",
    "nonempty_translates",
]


class StatisticsError(ValueError):
    """Raised for out-of-range statistic parameters"""
    pass


@dataclass(frozen=True)
class MomentReport:
    p: int
    r: int
    n: int
    delta: int
    N_V: int
    vol_B: int
    expected: float
    second_moment: float
    bound_ratio: float
    epsilon: float
    exceptional_count: int
    exceptional_fraction: float
    zero_fraction: float
    nonempty_translates: int
    regime: str
    chebyshev_bound: Optional[float] = None
    vol_B2: Optional[int] = None
    s: int = 0

    def __post_init__(self):
        for name in ("exceptional_fraction", "zero_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise StatisticsError(f"{name}={value} outside [0, 1]")
        if self.second_moment < 0:
            raise StatisticsError(f"second_moment={self.second_moment} is negative")

    @property
    def volume(self) -> int:
        """vol(B), or vol(B) vol(B') for joint fields"""
        return self.vol_B * (self.vol_B2 or 1)

    def to_row(self) -> Dict[str, Any]:
        """CSV row; joint fields report r+s axes and the product volume"""
        return {
            "p": self.p,
            "r": self.r + self.s,
            "n": self.n,
            "delta": self.delta,
            "vol_B": self.volume,
            "N_V": self.N_V,
            "expected": self.expected,
            "second_moment": self.second_moment,
            "bound_ratio": self.bound_ratio,
            "epsilon": self.epsilon,
            "exceptional_fraction": self.exceptional_fraction,
            "zero_fraction": self.zero_fraction,
            "nonempty_translates": self.nonempty_translates,
        }

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def count_histogram(field: CountField) -> Dict[int, int]:
    """{count value: number of translates}, integer bins"""
    flat = field.counts.ravel()
    if flat.size == 0:
        return {}
    hist = np.bincount(flat)
    return {int(v): int(hist[v]) for v in np.nonzero(hist)[0]}


def sum_of_squares(field: CountField) -> int:
    """Exact sum of N_x^2 (Python ints, no int64 overflow)"""
    return sum(v * v * freq for v, freq in count_histogram(field).items())


def second_moment_exact(field: CountField, expected: Number) -> Fraction:
    """sum_x (N_x - mu)^2 as an exact rational"""
    mu = Fraction(expected)
    total = field.total()
    return sum_of_squares(field) - 2 * mu * total + field.cells * mu * mu


def second_moment(field: CountField, expected: Number) -> float:
    """sum_x |N_{B_x} - expected|^2

    With expected = N(V) vol(B) / p^dims this is sum N_x^2 - p^dims expected^2.
    """
    return float(second_moment_exact(field, expected))


def second_moment_direct(field: CountField, expected: float) -> float:
    """Definition-based evaluation with compensated summation"""
    deviations = field.counts.astype(np.float64).ravel() - float(expected)
    return math.fsum((deviations * deviations).tolist())


def moment_ratio(S: float, p: int, n: int, delta: int, vol: int) -> float:
    """S / (p^{n+1+delta} vol); vol is vol(B) vol(B') for joint fields"""
    if S < 0:
        raise StatisticsError(f"Second moment must be non-negative, got {S}")
    return S / (float(p) ** (n + 1 + delta) * vol)


def exceptional_set(field: CountField, expected: float, epsilon: float) -> Tuple[int, float]:
    """Translates with |N_x - expected| > epsilon * expected

    When expected is 0 a translate is exceptional iff N_x > 0.
    """
    if not epsilon > 0:
        raise StatisticsError(f"epsilon must be positive, got {epsilon}")
    counts = field.counts
    if expected == 0:
        count = int(np.count_nonzero(counts > 0))
    else:
        mu = float(expected)
        count = int(np.count_nonzero(np.abs(counts - mu) > epsilon * mu))
    return count, count / field.cells


def zero_fraction(field: CountField) -> float:
    """Fraction of translates with N_x = 0"""
    return int(np.count_nonzero(field.counts == 0)) / field.cells


def nonempty_translate_count(field: CountField) -> int:
    """Number of translates with N_x > 0"""
    return int(np.count_nonzero(field.counts > 0))


def zero_exception_bound(N_V: int, vol: int) -> int:
    """Translates with a nonzero count never exceed N(V) vol(B)"""
    return N_V * vol


def chebyshev_bound(S: float, expected: float, epsilon: float, cells: int) -> Optional[float]:
    """Upper bound S / (epsilon expected)^2 / cells on the exceptional fraction"""
    if expected <= 0:
        return None
    return S / (epsilon * expected) ** 2 / cells


def volume_regime(vol: int, p: int, dims: int, n: int, delta: int) -> str:
    """Which volume range a box (or box pair, vol = vol(B) vol(B')) falls in

    dims is r, or r+s for joint boxes.
    """
    log_vol = math.log(vol)
    log_p = math.log(p)
    gap = n - 1 - delta
    upper = (dims - gap / 2) * log_p
    if log_vol >= upper + dims * math.log(log_p) and log_p > 1:
        return REGIME_LANG_WEIL
    if log_vol >= upper:
        return REGIME_NONEMPTY_ALL
    if log_vol > (dims - gap) * log_p:
        return REGIME_ALMOST_ALL
    if log_vol < (dims - n) * log_p:
        return REGIME_ZERO_BOX
    return REGIME_MARGINAL


def build_moment_report(field: CountField, N_V: int, n: int, delta: int, vol_B: int,
                        epsilon: float = None, vol_B2: Optional[int] = None,
                        s: int = 0) -> MomentReport:
    """Every statistic of one count field"""
    epsilon = DEFAULT_EPSILON if epsilon is None else epsilon
    volume = vol_B * (vol_B2 or 1)
    mu = Fraction(N_V * volume, field.cells)
    S = second_moment(field, mu)
    ratio = moment_ratio(S, field.p, n, delta, volume)
    exc_count, exc_fraction = exceptional_set(field, float(mu), epsilon)
    nonempty = nonempty_translate_count(field)
    if nonempty > zero_exception_bound(N_V, volume):
        logger.warning(f"{nonempty} nonempty translates exceed N(V) vol = {N_V * volume}")
    return MomentReport(
        p=field.p,
        r=field.dims - s,
        n=n,
        delta=delta,
        N_V=N_V,
        vol_B=vol_B,
        expected=float(mu),
        second_moment=S,
        bound_ratio=ratio,
        epsilon=epsilon,
        exceptional_count=exc_count,
        exceptional_fraction=exc_fraction,
        zero_fraction=zero_fraction(field),
        nonempty_translates=nonempty,
        regime=volume_regime(volume, field.p, field.dims, n, delta),
        chebyshev_bound=chebyshev_bound(S, float(mu), epsilon, field.cells),
        vol_B2=vol_B2,
        s=s,
    )
