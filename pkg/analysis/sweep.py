"""
All-translate count fields {N_{B_x}(V)}_{x in F_p^dims}.

sweep_counts runs one cyclic sliding-window pass per axis over the 0/1
indicator of V (O(dims * p^dims) integer additions). The entry at x
accumulates the indicator over x + B. sweep_counts_bruteforce is the
reference implementation used as oracle.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from config import BRUTEFORCE_MAX_CELLS, MAX_CELLS, WORKERS, check_cell_budget
from geometry.boxes import (
    CyclicBox, CyclicInterval, count_in_box, membership_mask, product_box, translate,
)
from geometry.ffgrid import CountField, DimensionMismatchError, GridShape
from geometry.polymap import PolyMap, joint_count
from geometry.variety import PointSet

logger = logging.getLogger(__name__)


class SweepError(Exception):
    """Raised when a sweep input is not a 0/1 indicator or shapes disagree"""
    pass


def _window_pass(a: np.ndarray, axis: int, interval: CyclicInterval) -> np.ndarray:
    """out[..., x, ...] = sum_{k < L} a[..., x + start + k mod p, ...] along `axis`"""
    p = a.shape[axis]
    L = interval.length
    if L == p:
        total = a.sum(axis=axis, keepdims=True, dtype=np.int64)
        return np.broadcast_to(total, a.shape).copy()
    head = np.take(a, np.arange(L - 1), axis=axis)
    ext = np.concatenate([a, head], axis=axis)
    zero_shape = list(a.shape)
    zero_shape[axis] = 1
    csum = np.concatenate(
        [np.zeros(zero_shape, dtype=np.int64), np.cumsum(ext, axis=axis, dtype=np.int64)],
        axis=axis,
    )
    upper = np.take(csum, np.arange(L, L + p), axis=axis)
    lower = np.take(csum, np.arange(p), axis=axis)
    window = upper - lower
    if interval.start:
        window = np.roll(window, -interval.start, axis=axis)
    return window


def _parallel_pass(a: np.ndarray, axis: int, interval: CyclicInterval, workers: int) -> np.ndarray:
    """One pass; lines of `axis` are split across workers along another axis"""
    if workers <= 1 or a.ndim == 1:
        return _window_pass(a, axis, interval)
    split_axis = 0 if axis != 0 else 1
    chunks = np.array_split(a, min(workers, a.shape[split_axis]), axis=split_axis)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: _window_pass(c, axis, interval), chunks))
    return np.concatenate(parts, axis=split_axis)


def sweep_counts(indicator: CountField, box: CyclicBox, workers: Optional[int] = None,
                 force: bool = False) -> CountField:
    """Entry at x is N_{B_x}(V); exact int64 arithmetic

    Results are identical for any worker count (passes are barriers and all
    arithmetic is integer).
    """
    if indicator.dims != box.dims:
        raise DimensionMismatchError(f"Indicator has {indicator.dims} axes, box has {box.dims}")
    if indicator.p != box.p.p:
        raise SweepError(f"Indicator is mod {indicator.p}, box is mod {box.p.p}")
    if not indicator.is_indicator():
        raise SweepError("sweep_counts expects a 0/1 indicator field")
    check_cell_budget(indicator.cells, MAX_CELLS, what="sweep", force=force)

    workers = workers or WORKERS
    counts = indicator.counts.astype(np.int64, copy=True)
    for axis, interval in enumerate(box.intervals):
        counts = _parallel_pass(counts, axis, interval, workers)
        logger.debug(f"Sweep pass axis={axis} length={interval.length} done")
    return CountField(indicator.shape, counts)


def sweep_counts_bruteforce(points: PointSet, box: CyclicBox) -> CountField:
    """Reference: entry at x = count_in_box(points, translate(box, x))"""
    shape = GridShape(points.p, points.r)
    if box.dims != points.r:
        raise DimensionMismatchError(f"Points live in {points.r} dims, box has {box.dims}")
    check_cell_budget(shape.cells, BRUTEFORCE_MAX_CELLS, what="brute-force sweep")
    counts = np.zeros(shape.axes, dtype=np.int64)
    if len(points) == 0:
        return CountField(shape, counts)
    for x in itertools.product(range(points.p.p), repeat=points.r):
        counts[x] = count_in_box(points, translate(box, x))
    return CountField(shape, counts)


def count_at(points: PointSet, box: CyclicBox, x) -> int:
    """Single-translate count without building a field"""
    return int(membership_mask(translate(box, x), points.coords).sum()) if len(points) else 0


def mass_conserved(field: CountField, N_V: int, volume: int) -> bool:
    """Sum over all translates equals N(V) vol(B) (each point is in vol translates)"""
    return field.total() == N_V * volume


# =============================================================================
# Joint (B, B') sweeps over the graph of g
# =============================================================================
def joint_sweep(graph: PointSet, box: CyclicBox, box2: CyclicBox,
                workers: Optional[int] = None, force: bool = False) -> CountField:
    """Entry at (x, y) is N_{B_x, B'_y}(V, g); the r+s dimensional sweep of the graph"""
    full = product_box(box, box2)
    if graph.r != full.dims:
        raise DimensionMismatchError(f"Graph lives in {graph.r} dims, B x B' has {full.dims}")
    check_cell_budget(graph.p.p ** graph.r, MAX_CELLS, what="joint sweep", force=force)
    return sweep_counts(graph.indicator(force=force), full, workers=workers, force=force)


def joint_sweep_bruteforce(points: PointSet, poly_map: PolyMap, box: CyclicBox,
                           box2: CyclicBox) -> CountField:
    """Reference: entry at (x, y) = joint_count(V, g, B_x, B'_y)"""
    dims = points.r + poly_map.s
    shape = GridShape(points.p, dims)
    check_cell_budget(shape.cells, BRUTEFORCE_MAX_CELLS, what="brute-force joint sweep")
    counts = np.zeros(shape.axes, dtype=np.int64)
    for xy in itertools.product(range(points.p.p), repeat=dims):
        x, y = xy[:points.r], xy[points.r:]
        counts[xy] = joint_count(points, poly_map, translate(box, x), translate(box2, y))
    return CountField(shape, counts)
