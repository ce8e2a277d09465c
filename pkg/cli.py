#!/usr/bin/env python3
"""
boxlattice command line.

Exit codes: 0 success, 1 invalid configuration or input, 2 memory guard
exceeded, 3 hard invariant failure.
"""
import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from config import (
    DEFAULT_EPSILON, ConfigValidationError, GuardExceededError, setup_logging, validate_config,
)
from analysis import report as report_mod
from analysis.expsum import (
    ExpSumError, LinearFunctional, char_sum_report, fourier_count, lemma2_total,
)
from analysis.moments import StatisticsError, build_moment_report, count_histogram
from analysis.report import ReportError
from analysis.sweep import (
    SweepError, joint_sweep, joint_sweep_bruteforce, mass_conserved, sweep_counts,
    sweep_counts_bruteforce,
)
from geometry.boxes import BoxError, CyclicInterval, count_in_box, parse_box
from geometry.catalog import CatalogError, catalog_instantiate, list_catalog, parse_params
from geometry.ffgrid import FieldError, as_prime
from geometry.polymap import (
    PolyMap, graph_points, independence_rank, joint_count, load_map, witness_vanishes,
)
from geometry.variety import (
    VarietySpec, VarietySpecError, enumerate_points, lang_weil_residual, load_variety,
)
from orchestrator import (
    BoxTemplate, ExperimentConfig, InvariantViolation, _atomic_write, load_experiment_config,
    run_experiment,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_GUARD = 2
EXIT_INVARIANT = 3

# Input problems that map to EXIT_INVALID
INPUT_ERRORS = (
    ConfigValidationError, VarietySpecError, BoxError, CatalogError, FieldError, ExpSumError,
    StatisticsError, SweepError, ReportError,
)


# =============================================================================
# Shared helpers
# =============================================================================
def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _resolve_variety(args: argparse.Namespace, p: int) -> VarietySpec:
    if bool(args.catalog) == bool(args.variety):
        raise ConfigValidationError("Give exactly one of --catalog NAME and --variety FILE")
    if args.catalog:
        return catalog_instantiate(args.catalog, p, parse_params(args.param))
    return load_variety(args.variety)


def _load(args: argparse.Namespace):
    """(prime, spec, points) for the shared variety flags"""
    p = as_prime(args.prime).p
    spec = _resolve_variety(args, p)
    points = enumerate_points(spec, p, workers=args.workers, force=args.force)
    return p, spec, points


def _map_and_box2(args: argparse.Namespace, spec: VarietySpec, p: int, required: bool = False):
    if (args.map is None) != (args.box2 is None):
        raise ConfigValidationError("--map and --box2 must be given together")
    if args.map is None:
        if required:
            raise ConfigValidationError("This command needs --map and --box2")
        return None, None
    poly_map = load_map(args.map, spec.r)
    return poly_map, parse_box(args.box2, p, poly_map.s)


def _emit(args: argparse.Namespace, document: Dict[str, Any],
          rows: Optional[Sequence[Dict[str, Any]]] = None,
          columns: Optional[Sequence[str]] = None) -> None:
    """Write to --output in --format, or print to stdout"""
    if args.format == "csv" and rows is not None:
        text = report_mod.rows_to_csv(rows, columns)
    else:
        text = report_mod.to_json(document)
    if args.output:
        _atomic_write(args.output, text)
        logger.info(f"Wrote {args.output}")
    else:
        sys.stdout.write(text)


# =============================================================================
# Commands
# =============================================================================
def _cmd_catalog(args: argparse.Namespace) -> int:
    entries = list_catalog(include_oracle_only=not args.hide_oracle)
    columns = ["name", "r", "n", "d", "delta", "params", "min_p", "oracle_only", "note"]
    rows = [dict(e, params=";".join(f"{k}={v}" for k, v in e["params"].items())) for e in entries]
    _emit(args, {"catalog": entries}, rows, columns)
    return EXIT_OK


def _cmd_enumerate(args: argparse.Namespace) -> int:
    p, spec, points = _load(args)
    document = {
        "variety": spec.to_json(),
        "p": p,
        "N_V": len(points),
        "lang_weil_residual": lang_weil_residual(spec, p, len(points)),
        "points": points.points,
    }
    rows = [{f"x{i + 1}": c for i, c in enumerate(pt)} for pt in points.points]
    _emit(args, document, rows, [f"x{i + 1}" for i in range(spec.r)])
    return EXIT_OK


def _cmd_count(args: argparse.Namespace) -> int:
    p, spec, points = _load(args)
    box = parse_box(args.box, p, spec.r)
    poly_map, box2 = _map_and_box2(args, spec, p)
    if poly_map is None:
        count = count_in_box(points, box)
        volume = box.volume
    else:
        count = joint_count(points, poly_map, box, box2)
        volume = box.volume * box2.volume
    dims = spec.r + (poly_map.s if poly_map else 0)
    document = {
        "variety": spec.name,
        "p": p,
        "box": str(box),
        "box2": str(box2) if box2 else None,
        "N_V": len(points),
        "count": count,
        "expected": len(points) * volume / p ** dims,
    }
    if args.fourier:
        fourier = fourier_count(points, box, poly_map, box2, n=spec.n, delta=spec.delta,
                                force=args.force)
        document["fourier"] = fourier.to_dict()
        if not fourier.exact:
            logger.error(f"Fourier reconstruction {fourier.reconstructed} != direct {count}")
            _emit(args, document)
            return EXIT_INVARIANT
    _emit(args, document)
    return EXIT_OK


def _sweep_field(args, spec, p, points, poly_map=None, box2=None):
    box = parse_box(args.box, p, spec.r)
    if poly_map is None:
        field_ = sweep_counts(points.indicator(force=args.force), box, workers=args.workers,
                              force=args.force)
    else:
        graph = graph_points(points, poly_map, force=args.force)
        field_ = joint_sweep(graph, box, box2, workers=args.workers, force=args.force)
    volume = box.volume * (box2.volume if box2 else 1)
    if not mass_conserved(field_, len(points), volume):
        raise InvariantViolation(f"sum of counts {field_.total()} != N(V) vol = {len(points) * volume}")
    if args.oracle:
        if poly_map is None:
            reference = sweep_counts_bruteforce(points, box)
        else:
            reference = joint_sweep_bruteforce(points, poly_map, box, box2)
        if not field_.equals(reference):
            raise InvariantViolation("sweep differs from the brute-force oracle")
        logger.info("Oracle agrees with the sweep")
    return box, field_


def _cmd_sweep(args: argparse.Namespace) -> int:
    p, spec, points = _load(args)
    poly_map, box2 = _map_and_box2(args, spec, p)
    box, field_ = _sweep_field(args, spec, p, points, poly_map, box2)
    histogram = count_histogram(field_)
    document = {
        "variety": spec.name,
        "p": p,
        "box": str(box),
        "box2": str(box2) if box2 else None,
        "N_V": len(points),
        "total": field_.total(),
        "mass_conserved": True,
        "oracle": bool(args.oracle),
        "histogram": histogram,
    }
    rows = [{"count": k, "translates": v} for k, v in sorted(histogram.items())]
    _emit(args, document, rows, ["count", "translates"])
    return EXIT_OK


def _moment_command(args: argparse.Namespace, require_map: bool) -> int:
    p, spec, points = _load(args)
    poly_map, box2 = _map_and_box2(args, spec, p, required=require_map)
    box, field_ = _sweep_field(args, spec, p, points, poly_map, box2)
    stats = build_moment_report(
        field_, len(points), spec.n, spec.delta, box.volume, epsilon=args.epsilon,
        vol_B2=box2.volume if box2 else None, s=poly_map.s if poly_map else 0,
    )
    document = {"variety": spec.name, "box": str(box), "box2": str(box2) if box2 else None,
                **stats.to_dict()}
    _emit(args, document, [stats.to_row()])
    return EXIT_OK


def _cmd_moment(args: argparse.Namespace) -> int:
    return _moment_command(args, require_map=False)


def _cmd_map_sweep(args: argparse.Namespace) -> int:
    return _moment_command(args, require_map=True)


def _cmd_expsum(args: argparse.Namespace) -> int:
    p, spec, points = _load(args)
    poly_map = load_map(args.map, spec.r) if args.map else None
    v = args.v or []
    func = LinearFunctional(tuple(args.u), tuple(v), p)
    if func.is_zero:
        raise ExpSumError("(u, v) must be nonzero")
    result = char_sum_report(points, func, spec.d, spec.n, spec.delta, poly_map)
    document = {"variety": spec.name, "p": p, "u": list(func.u), "v": list(func.v),
                **result.to_dict()}
    _emit(args, document)
    if not result.satisfied:
        logger.error(f"|S| = {result.modulus} exceeds the bound {result.katz_bound}")
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_lemma2(args: argparse.Namespace) -> int:
    primes = args.primes or ([args.prime] if args.prime else [])
    if not primes:
        raise ConfigValidationError("lemma2 needs --prime or --primes")
    rows = []
    for p in primes:
        p = as_prime(p).p
        lengths = [args.length] if args.length is not None else range(1, p + 1)
        for h in lengths:
            rows.append(lemma2_total(CyclicInterval(args.start % p, h, p)).to_dict())
    columns = ["p", "start", "length", "total", "bound", "satisfied", "per_term_satisfied", "tested"]
    _emit(args, {"rows": rows}, rows, columns)
    failed = [r for r in rows if r["tested"] and not (r["satisfied"] and r["per_term_satisfied"])]
    if failed:
        logger.error(f"{len(failed)} interval(s) exceed the bound")
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_indep(args: argparse.Namespace) -> int:
    p, spec, points = _load(args)
    poly_map: Optional[PolyMap] = load_map(args.map, spec.r) if args.map else None
    result = independence_rank(points, poly_map)
    document = {"variety": spec.name, "p": p, **result.to_dict(),
                "signed_witness": result.signed_witness(p)}
    if result.witness is not None and not witness_vanishes(points, result.witness, poly_map):
        _emit(args, document)
        raise InvariantViolation(f"witness {result.witness} does not vanish on V")
    _emit(args, document)
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    if args.config:
        config = load_experiment_config(args.config)
        for key in ("output", "summary"):
            if getattr(args, key):
                setattr(config, key, getattr(args, key))
        if args.oracle:
            config.oracle = True
        if args.force:
            config.force = True
    else:
        config = ExperimentConfig(
            name=args.name,
            catalog=args.catalog,
            params=parse_params(args.param),
            variety=args.variety,
            primes=args.primes or ([args.prime] if args.prime else []),
            boxes=[BoxTemplate(b) for b in (args.box or [])],
            map=args.map,
            box2=BoxTemplate(args.box2) if args.box2 else None,
            epsilon=args.epsilon,
            oracle=args.oracle,
            force=args.force,
            workers=args.workers,
            output=args.output,
            format=args.format,
            summary=args.summary,
        )
    document = run_experiment(config)
    trend_ok = all(t["non_increasing"] for t in document["trends"].values())
    logger.info(f"Run complete: {document['invariants']['instances']} instance(s), "
                f"ratio trend non-increasing={trend_ok}")
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================
def _variety_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--catalog", help="Catalog entry name")
    parent.add_argument("--variety", help="Variety spec JSON file")
    parent.add_argument("--param", action="append", default=[],
                        help="Catalog parameter key=value (repeatable)")
    parent.add_argument("--prime", type=int, help="The prime p")
    parent.add_argument("--workers", type=int, default=None)
    parent.add_argument("--force", action="store_true", help="Continue past memory guards")
    return parent


def _output_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--output", help="Report path (stdout when omitted)")
    parent.add_argument("--format", choices=("csv", "json"), default="json")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxlattice",
                                     description="Box point counts on varieties over F_p")
    sub = parser.add_subparsers(dest="command", required=True)
    variety = _variety_parent()
    output = _output_parent()

    p_cat = sub.add_parser("catalog", parents=[output], help="List built-in varieties")
    p_cat.add_argument("--hide-oracle", action="store_true",
                       help="Hide degenerate and reducible oracle entries")
    p_cat.set_defaults(func=_cmd_catalog)

    p_enum = sub.add_parser("enumerate", parents=[variety, output], help="List the points of V")
    p_enum.set_defaults(func=_cmd_enumerate)

    p_count = sub.add_parser("count", parents=[variety, output], help="Points of V in one box")
    p_count.add_argument("--box", required=True, help="start:len,... (len may be p or p^a)")
    p_count.add_argument("--map", help="Polynomial map JSON file")
    p_count.add_argument("--box2", help="Second box for g(z)")
    p_count.add_argument("--fourier", action="store_true",
                         help="Also reconstruct the count from character sums")
    p_count.set_defaults(func=_cmd_count)

    for name, func, helptext in (
        ("sweep", _cmd_sweep, "Counts over all translates"),
        ("moment", _cmd_moment, "Second moment and exceptional fractions"),
        ("map-sweep", _cmd_map_sweep, "Joint (B, B') statistics over the graph of g"),
    ):
        p_sw = sub.add_parser(name, parents=[variety, output], help=helptext)
        p_sw.add_argument("--box", required=True)
        p_sw.add_argument("--map")
        p_sw.add_argument("--box2")
        p_sw.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
        p_sw.add_argument("--oracle", action="store_true", help="Compare against brute force")
        p_sw.set_defaults(func=func)

    p_exp = sub.add_parser("expsum", parents=[variety, output], help="Character sum over V")
    p_exp.add_argument("--u", type=_int_list, required=True, help="a,b,...")
    p_exp.add_argument("--v", type=_int_list, help="Map coefficients")
    p_exp.add_argument("--map")
    p_exp.set_defaults(func=_cmd_expsum)

    p_l2 = sub.add_parser("lemma2", parents=[output], help="Interval sums against 2 p log p")
    p_l2.add_argument("--prime", type=int)
    p_l2.add_argument("--primes", type=_int_list)
    p_l2.add_argument("--start", type=int, default=0)
    p_l2.add_argument("--length", type=int, help="All lengths 1..p when omitted")
    p_l2.set_defaults(func=_cmd_lemma2)

    p_ind = sub.add_parser("indep", parents=[variety, output],
                           help="Rank of {1, x, g} on V with a vanishing witness")
    p_ind.add_argument("--map")
    p_ind.set_defaults(func=_cmd_indep)

    p_run = sub.add_parser("run", parents=[variety], help="Experiment over primes and boxes")
    p_run.add_argument("--config", help="Experiment JSON file")
    p_run.add_argument("--name", default="experiment")
    p_run.add_argument("--primes", type=_int_list)
    p_run.add_argument("--box", action="append", help="Box template (repeatable)")
    p_run.add_argument("--map")
    p_run.add_argument("--box2")
    p_run.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p_run.add_argument("--oracle", action="store_true")
    p_run.add_argument("--output")
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")
    p_run.add_argument("--summary", help="Markdown summary path")
    p_run.set_defaults(func=_cmd_run)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    try:
        validate_config()
    except ConfigValidationError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_INVALID

    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except GuardExceededError as e:
        logger.error(str(e))
        return EXIT_GUARD
    except InvariantViolation as e:
        logger.error(f"Invariant failure: {e}")
        return EXIT_INVARIANT
    except INPUT_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
