"""
Built-in varieties, instantiated per prime with their declared (n, d, delta).

Entries marked oracle-only are degenerate or reducible on purpose; they feed
the counting oracles and are flagged so the enumerator warns about them.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

from geometry.ffgrid import as_prime
from geometry.variety import (
    FLAG_DEGENERATE, FLAG_NONSINGULAR_CURVE, FLAG_REDUCIBLE, MonomialTerm, PolynomialSpec,
    VarietySpec,
)

logger = logging.getLogger(__name__)


class CatalogError(Exception):
    """Raised for unknown entries, invalid parameters or a prime below the entry minimum"""
    pass


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    build: Callable[[int, Dict[str, Any]], VarietySpec]
    defaults: Mapping[str, Any] = field(default_factory=dict)
    min_p: int = 3
    note: str = ""
    oracle_only: bool = False

    def describe(self) -> Dict[str, Any]:
        """Metadata of the default instance at the entry minimum"""
        spec = self.build(self.min_p, dict(self.defaults))
        return {
            "name": self.name,
            "r": spec.r,
            "n": spec.n,
            "d": spec.d,
            "delta": spec.delta,
            "params": {k: _render_param(v) for k, v in self.defaults.items()},
            "min_p": self.min_p,
            "oracle_only": self.oracle_only,
            "note": self.note,
        }


def _render_param(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return value


def _int_param(params: Dict[str, Any], key: str) -> int:
    try:
        return int(params[key])
    except (TypeError, ValueError):
        raise CatalogError(f"Parameter {key}={params[key]!r} is not an integer")


def _coeff_param(params: Dict[str, Any], key: str) -> List[int]:
    """Ascending coefficient list from a sequence or a "a0,a1,..." string"""
    raw = params[key]
    if isinstance(raw, str):
        raw = [part for part in raw.split(",") if part.strip()]
    try:
        coeffs = [int(c) for c in raw]
    except (TypeError, ValueError):
        raise CatalogError(f"Parameter {key}={params[key]!r} is not a coefficient list")
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) < 2:
        raise CatalogError(f"Parameter {key} must describe a non-constant polynomial")
    return coeffs


def _monomial(coeff: int, *exps: int) -> MonomialTerm:
    return MonomialTerm(coeff, tuple(exps))


def _nonzero_mod(value: int, p: int, what: str) -> int:
    if value % p == 0:
        raise CatalogError(f"{what}={value} vanishes mod {p}")
    return value


# =============================================================================
# Entry builders
# =============================================================================
def _hyperbola(p: int, params: Dict[str, Any]) -> VarietySpec:
    r = _int_param(params, "r")
    c = _nonzero_mod(_int_param(params, "c"), p, "c")
    if r < 2:
        raise CatalogError(f"hyperbola needs r >= 2, got {r}")
    poly = PolynomialSpec((_monomial(1, *([1] * r)), _monomial(-c, *([0] * r))))
    n = r - 1
    # the curve case is nonsingular; higher r declares the worst case n-2
    delta = -1 if r == 2 else n - 2
    flags = {FLAG_NONSINGULAR_CURVE} if r == 2 else set()
    return VarietySpec(f"hyperbola_r{r}_c{c}", r, (poly,), n=n, d=r, delta=delta, flags=flags)


def _elliptic_x3px(p: int, params: Dict[str, Any]) -> VarietySpec:
    # y^2 - x^3 - x, variables (x, y)
    poly = PolynomialSpec((_monomial(1, 0, 2), _monomial(-1, 3, 0), _monomial(-1, 1, 0)))
    return VarietySpec("elliptic_x3px", 2, (poly,), n=1, d=3, delta=-1,
                       flags={FLAG_NONSINGULAR_CURVE})


def _hyperelliptic_l(p: int, params: Dict[str, Any]) -> VarietySpec:
    ell = _int_param(params, "ell")
    coeffs = _coeff_param(params, "f")
    if ell < 2:
        raise CatalogError(f"hyperelliptic_l needs ell >= 2, got {ell}")
    if ell % p == 0:
        raise CatalogError(f"ell={ell} is divisible by p={p}")
    if coeffs[-1] % p == 0:
        raise CatalogError(f"Leading coefficient of f vanishes mod {p}")
    terms = [_monomial(1, 0, ell)]
    terms += [_monomial(-a, k, 0) for k, a in enumerate(coeffs) if a]
    deg_f = len(coeffs) - 1
    return VarietySpec(f"hyperelliptic_l{ell}_deg{deg_f}", 2, (PolynomialSpec(tuple(terms)),),
                       n=1, d=max(ell, deg_f), delta=-1)


def _graph_square(p: int, params: Dict[str, Any]) -> VarietySpec:
    poly = PolynomialSpec((_monomial(1, 0, 1), _monomial(-1, 2, 0)))
    return VarietySpec("graph_square", 2, (poly,), n=1, d=2, delta=-1,
                       flags={FLAG_NONSINGULAR_CURVE})


def _quadric_sum_squares(p: int, params: Dict[str, Any]) -> VarietySpec:
    c = _nonzero_mod(_int_param(params, "c"), p, "c")
    poly = PolynomialSpec((
        _monomial(1, 2, 0, 0), _monomial(1, 0, 2, 0), _monomial(1, 0, 0, 2),
        _monomial(-c, 0, 0, 0),
    ))
    return VarietySpec(f"quadric_sum_squares_c{c}", 3, (poly,), n=2, d=2, delta=0)


def _line_antidiag(p: int, params: Dict[str, Any]) -> VarietySpec:
    poly = PolynomialSpec((_monomial(1, 1, 0), _monomial(1, 0, 1)))
    return VarietySpec("line_antidiag", 2, (poly,), n=1, d=1, delta=-1,
                       flags={FLAG_DEGENERATE})


def _axes_union(p: int, params: Dict[str, Any]) -> VarietySpec:
    poly = PolynomialSpec((_monomial(1, 1, 1),))
    return VarietySpec("axes_union", 2, (poly,), n=1, d=2, delta=-1,
                       flags={FLAG_REDUCIBLE})


CATALOG: Dict[str, CatalogEntry] = {
    entry.name: entry for entry in (
        CatalogEntry("hyperbola", _hyperbola, {"r": 2, "c": 1},
                     note="modular hyperbola x1...xr = c"),
        CatalogEntry("elliptic_x3px", _elliptic_x3px,
                     note="y^2 = x^3 + x; (x^3+x, y^2) maps it into the diagonal"),
        CatalogEntry("hyperelliptic_l", _hyperelliptic_l, {"ell": 2, "f": (1, 0, 0, 0, 0, 1)},
                     min_p=5, note="y^ell = f(x), f given by ascending coefficients"),
        CatalogEntry("graph_square", _graph_square, note="parabola x2 = x1^2"),
        CatalogEntry("quadric_sum_squares", _quadric_sum_squares, {"c": 1},
                     note="x1^2 + x2^2 + x3^2 = c"),
        CatalogEntry("line_antidiag", _line_antidiag, min_p=2, oracle_only=True,
                     note="x1 + x2 = 0, contained in a hyperplane"),
        CatalogEntry("axes_union", _axes_union, min_p=2, oracle_only=True,
                     note="x1 x2 = 0, union of the two axes"),
    )
}


def catalog_instantiate(name: str, p, params: Optional[Mapping[str, Any]] = None) -> VarietySpec:
    """Concrete VarietySpec for a catalog entry at prime p

    Unknown keys in `params` are rejected; missing ones take the entry defaults.
    """
    entry = CATALOG.get(name)
    if entry is None:
        raise CatalogError(f"Unknown catalog entry '{name}' (known: {', '.join(sorted(CATALOG))})")
    p = as_prime(p).p
    if p < entry.min_p:
        raise CatalogError(f"{name} needs p >= {entry.min_p}, got {p}")
    params = dict(params or {})
    unknown = set(params) - set(entry.defaults)
    if unknown:
        raise CatalogError(f"{name} does not take parameters {sorted(unknown)}")
    merged = {**entry.defaults, **params}
    spec = entry.build(p, merged)
    logger.debug(f"Instantiated {spec.name} at p={p} (n={spec.n}, d={spec.d}, delta={spec.delta})")
    return spec


def list_catalog(include_oracle_only: bool = True) -> List[Dict[str, Any]]:
    """Entry metadata in name order"""
    return [
        CATALOG[name].describe() for name in sorted(CATALOG)
        if include_oracle_only or not CATALOG[name].oracle_only
    ]


def parse_params(pairs: Sequence[str]) -> Dict[str, str]:
    """["c=2", "r=3"] -> {"c": "2", "r": "3"}"""
    params = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise CatalogError(f"Bad parameter '{pair}' (use key=value)")
        params[key.strip()] = value.strip()
    return params
