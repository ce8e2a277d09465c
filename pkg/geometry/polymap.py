"""
Polynomial maps g: V -> A^s, their graphs in F_p^{r+s}, joint (B, B')
counts and the linear-independence test on {1, x_1..x_r, g_1..g_s}.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import MAX_CELLS, check_cell_budget
from geometry.boxes import CyclicBox, count_in_box, product_box
from geometry.ffgrid import DimensionMismatchError
from geometry.linalg import kernel_mod_p, rank_mod_p
from geometry.variety import (
    PointSet, PolynomialSpec, VarietySpecError, evaluate_poly, evaluate_poly_columns,
    parse_polys,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PolyMap:
    components: Tuple[PolynomialSpec, ...]
    r: int

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise VarietySpecError("A polynomial map needs at least one component (s >= 1)")
        for i, comp in enumerate(self.components):
            if comp.nvars != self.r:
                raise VarietySpecError(
                    f"Map component {i} uses {comp.nvars} variables, expected {self.r}"
                )

    @property
    def s(self) -> int:
        return len(self.components)

    def apply_columns(self, points: PointSet) -> np.ndarray:
        """(N, s) array of g(z) for every point z"""
        if points.r != self.r:
            raise DimensionMismatchError(f"Map expects {self.r} coordinates, points have {points.r}")
        if len(points) == 0:
            return np.empty((0, self.s), dtype=np.int64)
        columns = list(points.coords.T)
        return np.stack(
            [evaluate_poly_columns(comp, columns, points.p) for comp in self.components], axis=1
        )

    def to_json(self) -> List[List[Dict[str, Any]]]:
        return [comp.to_json() for comp in self.components]


def apply_map(poly_map: PolyMap, point: Sequence[int], p) -> Tuple[int, ...]:
    """(g_1(z), ..., g_s(z)) mod p"""
    if len(point) != poly_map.r:
        raise DimensionMismatchError(f"Map expects {poly_map.r} coordinates, got {len(point)}")
    return tuple(evaluate_poly(comp, point, p) for comp in poly_map.components)


def graph_points(points: PointSet, poly_map: PolyMap, force: bool = False) -> PointSet:
    """{(z, g(z)) : z in V} in F_p^{r+s}, same order as `points`"""
    dims = points.r + poly_map.s
    check_cell_budget(points.p.p ** dims, MAX_CELLS, what=f"graph grid p={points.p.p}^{dims}",
                      force=force)
    images = poly_map.apply_columns(points)
    coords = np.concatenate([points.coords, images], axis=1) if len(points) else np.empty((0, dims))
    return PointSet(points.p, dims, coords)


def joint_count(points: PointSet, poly_map: PolyMap, box: CyclicBox, box2: CyclicBox) -> int:
    """N_{B,B'}(V, g) = #{z in V : z in B and g(z) in B'}"""
    if box.dims != points.r:
        raise DimensionMismatchError(f"First box has {box.dims} axes, V lives in {points.r} dims")
    if box2.dims != poly_map.s:
        raise DimensionMismatchError(f"Second box has {box2.dims} axes, map has {poly_map.s}")
    if len(points) == 0:
        return 0
    images = poly_map.apply_columns(points)
    p = points.p.p
    hits = 0
    for z, y in zip(points.coords, images):
        if all((int(c) - iv.start) % p < iv.length for c, iv in zip(z, box.intervals)) and \
                all((int(c) - iv.start) % p < iv.length for c, iv in zip(y, box2.intervals)):
            hits += 1
    return hits


def joint_count_via_graph(points: PointSet, poly_map: PolyMap, box: CyclicBox,
                          box2: CyclicBox) -> int:
    """Same count through the graph: count_in_box(graph, B x B')"""
    return count_in_box(graph_points(points, poly_map), product_box(box, box2))


# =============================================================================
# Linear independence on V
# =============================================================================
@dataclass(frozen=True)
class IndependenceReport:
    rank: int
    columns: int
    independent: bool
    witness: Optional[Tuple[int, ...]] = None
    kernel: Tuple[Tuple[int, ...], ...] = field(default_factory=tuple)

    def signed_witness(self, p: int) -> Optional[Tuple[int, ...]]:
        """Witness with entries as least absolute residues"""
        if self.witness is None:
            return None
        return tuple(c - p if c > p // 2 else c for c in self.witness)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rank": self.rank,
            "columns": self.columns,
            "independent": self.independent,
            "witness": list(self.witness) if self.witness is not None else None,
            "kernel_dimension": len(self.kernel),
        }


def evaluation_matrix(points: PointSet, poly_map: Optional[PolyMap] = None) -> np.ndarray:
    """Rows (1, z_1..z_r, g_1(z)..g_s(z)) for every point z"""
    ones = np.ones((len(points), 1), dtype=np.int64)
    blocks = [ones, points.coords]
    if poly_map is not None:
        blocks.append(poly_map.apply_columns(points))
    return np.concatenate(blocks, axis=1)


def independence_rank(points: PointSet, poly_map: Optional[PolyMap] = None) -> IndependenceReport:
    """Rank over F_p of the evaluation matrix; a vanishing combination when deficient

    The witness (c_0, c_1..c_r, c'_1..c'_s) is the first kernel basis vector,
    scaled so its first nonzero entry is 1.
    """
    if len(points) == 0:
        raise VarietySpecError("Independence is undefined on an empty variety")
    p = points.p.p
    M = evaluation_matrix(points, poly_map)
    rank = rank_mod_p(M, p)
    columns = M.shape[1]
    if rank == columns:
        return IndependenceReport(rank, columns, True)
    kernel = tuple(tuple(int(c) for c in vec) for vec in kernel_mod_p(M, p))
    return IndependenceReport(rank, columns, False, kernel[0], kernel)


def witness_vanishes(points: PointSet, witness: Sequence[int],
                     poly_map: Optional[PolyMap] = None) -> bool:
    """The combination sum c_k f_k is zero at every point of V"""
    M = evaluation_matrix(points, poly_map)
    if len(witness) != M.shape[1]:
        raise DimensionMismatchError(f"Witness has {len(witness)} entries, expected {M.shape[1]}")
    return bool(np.all(M @ np.array(witness, dtype=np.int64) % points.p.p == 0))


def hyperplane_report(points: PointSet) -> IndependenceReport:
    """{1, x_1..x_r} dependent on V means V lies in a hyperplane at this p"""
    report = independence_rank(points)
    if not report.independent:
        logger.warning(f"V lies in a hyperplane mod {points.p.p} (witness {report.witness})")
    return report


# =============================================================================
# Map files
# =============================================================================
def map_from_json(data: Any, r: int) -> PolyMap:
    raw = data.get("map") if isinstance(data, dict) else data
    if raw is None:
        raise VarietySpecError("Map spec needs a 'map' list")
    return PolyMap(parse_polys(raw, r, what="map"), r)


def load_map(path: Union[str, Path], r: int) -> PolyMap:
    """Read {"map": [[{"coeff": .., "exps": [..]}, ..], ..]} (or the bare list)"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise VarietySpecError(f"Map spec not found: {path}")
    except json.JSONDecodeError as e:
        raise VarietySpecError(f"Map spec {path} is not valid JSON: {e}")
    return map_from_json(data, r)
