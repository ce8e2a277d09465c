"""Orchestrator: resolve variety -> enumerate -> sweep -> statistics -> atomic write.

One experiment covers every (prime, box) pair of an ExperimentConfig. Hard
invariants (mass conservation, the nonempty-translate bound, oracle equality when
enabled) abort the run before anything is written.
"""
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

from config import (
    BRUTEFORCE_MAX_CELLS, CSV_VERSION_TAG, DEFAULT_EPSILON, MOMENT_RATIO_CEILING,
    ConfigValidationError,
    get_report_path,
)
from analysis import report as report_mod
from analysis.lattice import lattice_sample, lattice_zero_fraction
from analysis.moments import build_moment_report, count_histogram, zero_exception_bound
from analysis.sweep import (
    joint_sweep, joint_sweep_bruteforce, mass_conserved, sweep_counts, sweep_counts_bruteforce,
)
from geometry.boxes import CyclicBox, parse_box, product_box
from geometry.catalog import catalog_instantiate
from geometry.ffgrid import CountField, as_prime
from geometry.polymap import PolyMap, graph_points, hyperplane_report, load_map, map_from_json
from geometry.variety import (
    PointSet, VarietySpec, enumerate_points, lang_weil_residual, load_variety, variety_from_dict,
)

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")


class InvariantViolation(Exception):
    """Raised when a hard invariant (mass conservation, oracle equality) fails"""
    pass


def _atomic_write(path: str, data: str) -> None:
    dirp = os.path.dirname(path) or '.'
    os.makedirs(dirp, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix='.tmp_boxlattice_', dir=dirp)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            try:
                os.remove(tmp)
            except Exception:
                pass


# =============================================================================
# Configuration
# =============================================================================
@dataclass(frozen=True)
class BoxTemplate:
    """Box text such as "0:p^0.5,0:p^0.5", instantiated per prime"""
    text: str

    def instantiate(self, p, dims: int) -> CyclicBox:
        return parse_box(self.text, p, dims)


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    catalog: Optional[str] = None
    params: Dict[str, Any] = field(default_factory=dict)
    variety: Optional[Union[str, Dict[str, Any]]] = None
    primes: List[int] = field(default_factory=list)
    boxes: List[BoxTemplate] = field(default_factory=list)
    map: Optional[Union[str, List[Any]]] = None
    box2: Optional[BoxTemplate] = None
    epsilon: float = DEFAULT_EPSILON
    oracle: bool = False
    force: bool = False
    workers: Optional[int] = None
    output: Optional[str] = None
    format: str = "csv"
    summary: Optional[str] = None

    def validate(self) -> None:
        """Aggregate every problem into one ConfigValidationError"""
        errors = []
        if (self.catalog is None) == (self.variety is None):
            errors.append("exactly one of 'catalog' and 'variety' must be given")
        if not self.primes:
            errors.append("at least one prime is required")
        for p in self.primes:
            try:
                as_prime(p)
            except Exception as e:
                errors.append(str(e))
        if not self.boxes:
            errors.append("at least one box is required")
        if (self.map is None) != (self.box2 is None):
            errors.append("'map' and 'box2' must be given together")
        if not self.epsilon > 0:
            errors.append(f"epsilon must be positive, got {self.epsilon}")
        if self.format not in FORMATS:
            errors.append(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.workers is not None and self.workers < 1:
            errors.append(f"workers must be positive, got {self.workers}")
        if errors:
            raise ConfigValidationError(
                f"Invalid experiment '{self.name}':\n  - " + "\n  - ".join(errors)
            )

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigValidationError("Experiment config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigValidationError(f"Unknown experiment keys {sorted(unknown)}")
        values = dict(data)
        boxes = values.get("boxes", [])
        if isinstance(boxes, str):
            boxes = [boxes]
        values["boxes"] = [BoxTemplate(str(b)) for b in boxes]
        if values.get("box2") is not None:
            values["box2"] = BoxTemplate(str(values["box2"]))
        try:
            values["primes"] = [int(p) for p in values.get("primes", [])]
            if "epsilon" in values:
                values["epsilon"] = float(values["epsilon"])
        except (TypeError, ValueError) as e:
            raise ConfigValidationError(f"Bad numeric value in experiment config: {e}")
        config = cls(**values)
        config.validate()
        return config

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "catalog": self.catalog,
            "params": dict(self.params),
            "variety": self.variety if not isinstance(self.variety, dict) else self.variety.get("name"),
            "primes": list(self.primes),
            "boxes": [b.text for b in self.boxes],
            "map": self.map if isinstance(self.map, str) or self.map is None else "inline",
            "box2": self.box2.text if self.box2 else None,
            "epsilon": self.epsilon,
            "oracle": self.oracle,
        }


def load_experiment_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigValidationError(f"Experiment config not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigValidationError(f"Experiment config {path} is not valid JSON: {e}")
    return ExperimentConfig.from_dict(data)


# =============================================================================
# Resolution helpers
# =============================================================================
def resolve_variety(config: ExperimentConfig, p: int) -> VarietySpec:
    """Catalog instance at p, or the (prime-independent) spec file"""
    if config.catalog is not None:
        return catalog_instantiate(config.catalog, p, config.params)
    if isinstance(config.variety, dict):
        return variety_from_dict(config.variety)
    return load_variety(config.variety)


def resolve_map(config: ExperimentConfig, r: int) -> Optional[PolyMap]:
    if config.map is None:
        return None
    if isinstance(config.map, str):
        return load_map(config.map, r)
    return map_from_json(config.map, r)


def _require(condition: bool, message: str) -> None:
    if not condition:
        logger.error(f"Invariant violated: {message}")
        raise InvariantViolation(message)


# =============================================================================
# Runs
# =============================================================================
def run_instance(spec: VarietySpec, p: int, box: CyclicBox, config: ExperimentConfig,
                 poly_map: Optional[PolyMap] = None, box2: Optional[CyclicBox] = None,
                 points: Optional[PointSet] = None) -> Dict[str, Any]:
    """Sweep and statistics for one (prime, box); returns the JSON row entry

    Raises:
        InvariantViolation: mass conservation, nonempty bound or oracle mismatch
    """
    if points is None:
        points = enumerate_points(spec, p, workers=config.workers, force=config.force)
    N_V = len(points)
    s = 0 if poly_map is None else poly_map.s
    vol2 = box2.volume if box2 is not None else None

    if poly_map is None:
        field_: CountField = sweep_counts(points.indicator(force=config.force), box,
                                          workers=config.workers, force=config.force)
    else:
        graph = graph_points(points, poly_map, force=config.force)
        field_ = joint_sweep(graph, box, box2, workers=config.workers, force=config.force)
    volume = box.volume * (vol2 or 1)
    _require(mass_conserved(field_, N_V, volume),
             f"{spec.name} p={p} box={box}: sum of counts {field_.total()} != N(V) vol = {N_V * volume}")

    checks = ["mass_conservation"]
    if config.oracle:
        if field_.cells <= BRUTEFORCE_MAX_CELLS:
            if poly_map is None:
                reference = sweep_counts_bruteforce(points, box)
            else:
                reference = joint_sweep_bruteforce(points, poly_map, box, box2)
            _require(field_.equals(reference),
                     f"{spec.name} p={p} box={box}: sweep differs from brute force")
            checks.append("oracle")
        else:
            logger.warning(f"Oracle skipped at p={p}: {field_.cells:,} cells exceeds "
                           f"{BRUTEFORCE_MAX_CELLS:,}")

    stats = build_moment_report(field_, N_V, spec.n, spec.delta, box.volume,
                                epsilon=config.epsilon, vol_B2=vol2, s=s)
    _require(stats.nonempty_translates <= zero_exception_bound(N_V, volume),
             f"{spec.name} p={p}: {stats.nonempty_translates} nonempty translates "
             f"exceed N(V) vol = {N_V * volume}")
    checks.append("nonempty_bound")

    hyperplane = hyperplane_report(points).independent if N_V else None
    lattice_box = box if box2 is None else product_box(box, box2)
    entry = {
        "variety": spec.name,
        "box": str(box),
        "box2": str(box2) if box2 is not None else None,
        "row": stats.to_row(),
        "regime": stats.regime,
        "exceptional_count": stats.exceptional_count,
        "chebyshev_bound": stats.chebyshev_bound,
        "lang_weil_residual": lang_weil_residual(spec, p, N_V),
        "not_in_hyperplane": hyperplane,
        "histogram": count_histogram(field_),
        "lattice_zero_fraction": lattice_zero_fraction(field_, lattice_sample(lattice_box)),
        "checks": checks,
    }
    logger.info(
        f"[{spec.name}] p={p} box={box}: N(V)={N_V}, ratio={stats.bound_ratio:.4f}, "
        f"exceptional={stats.exceptional_fraction:.4f}, zero={stats.zero_fraction:.4f}"
    )
    return entry


def run_experiment(config: ExperimentConfig, write: bool = True) -> Dict[str, Any]:
    """Run every (prime, box) pair and emit the configured report

    Returns the JSON document; files are written only when every hard
    invariant held.
    """
    config.validate()
    logger.info(f"Starting experiment '{config.name}' over primes {config.primes}")
    entries: List[Dict[str, Any]] = []
    for p in sorted(config.primes):
        spec = resolve_variety(config, p)
        poly_map = resolve_map(config, spec.r)
        points = enumerate_points(spec, p, workers=config.workers, force=config.force)
        box2 = config.box2.instantiate(p, poly_map.s) if poly_map is not None else None
        for template in config.boxes:
            box = template.instantiate(p, spec.r)
            entry = run_instance(spec, p, box, config, poly_map, box2, points=points)
            entry["template"] = template.text
            entries.append(entry)

    # entries are in increasing p within each template
    trends = {
        template.text: report_mod.ratio_trend(
            [e["row"]["bound_ratio"] for e in entries if e["template"] == template.text]
        )
        for template in config.boxes
    }
    max_ratio = max((e["row"]["bound_ratio"] for e in entries), default=0.0)

    document = {
        "tool": "boxlattice",
        "csv_version": CSV_VERSION_TAG.lstrip("#"),
        "config": config.to_dict(),
        "rows": entries,
        "trends": trends,
        "ratio_ceiling": MOMENT_RATIO_CEILING,
        "ratio_within_ceiling": max_ratio <= MOMENT_RATIO_CEILING,
        "invariants": {
            "passed": True,
            "instances": len(entries),
            "oracle_checked": sum("oracle" in e["checks"] for e in entries),
        },
    }
    if write:
        write_reports(config, document)
    return document


def write_reports(config: ExperimentConfig, document: Dict[str, Any]) -> List[str]:
    """CSV or JSON report plus the optional Markdown summary"""
    path = config.output or get_report_path(config.name, config.format)
    if config.format == "csv":
        data = report_mod.rows_to_csv(e["row"] for e in document["rows"])
    else:
        data = report_mod.to_json(document)
    _atomic_write(path, data)
    logger.info(f"Wrote {config.format} report to {path}")
    written = [path]
    if config.summary:
        _atomic_write(config.summary, report_mod.render_summary(document))
        logger.info(f"Wrote summary to {config.summary}")
        written.append(config.summary)
    return written
