"""
Report emission: versioned CSV tables, JSON documents and the Markdown run
summary. Output is deterministic: floats are rounded to REPORT_DECIMALS and
JSON keys are sorted.
"""
import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from config import CSV_VERSION_TAG, REPORT_DECIMALS
from analysis.moments import CSV_COLUMNS

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).resolve().parent.parent / "templates"
SUMMARY_TEMPLATE = "summary.md.j2"


class ReportError(Exception):
    """Raised when rows do not match the declared columns"""
    pass


def round_value(value: Any, decimals: int = None) -> Any:
    """Round floats (and complex parts) recursively; ints and strings pass through"""
    decimals = REPORT_DECIMALS if decimals is None else decimals
    if isinstance(value, bool) or isinstance(value, int):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        rounded = round(value, decimals)
        # -0.0 and 0.0 must print identically
        return rounded + 0.0
    if isinstance(value, complex):
        return {"real": round_value(value.real, decimals), "imag": round_value(value.imag, decimals)}
    if isinstance(value, dict):
        return {str(k): round_value(v, decimals) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_value(v, decimals) for v in value]
    if hasattr(value, "item"):
        return round_value(value.item(), decimals)
    return value


def rows_to_csv(rows: Iterable[Dict[str, Any]], columns: Sequence[str] = None) -> str:
    """CSV text: version tag line, header, then one line per row in the given order"""
    columns = list(columns or CSV_COLUMNS)
    buf = io.StringIO()
    buf.write(CSV_VERSION_TAG + "\n")
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for i, row in enumerate(rows):
        missing = [c for c in columns if c not in row]
        if missing:
            raise ReportError(f"Row {i} is missing columns {missing}")
        writer.writerow({c: round_value(row[c]) for c in columns})
    return buf.getvalue()


def read_csv_rows(text: str) -> List[Dict[str, str]]:
    """Parse rows_to_csv output back into string-valued dicts"""
    lines = text.splitlines()
    if not lines or lines[0] != CSV_VERSION_TAG:
        raise ReportError(f"Missing '{CSV_VERSION_TAG}' header line")
    return list(csv.DictReader(lines[1:]))


def to_json(document: Any) -> str:
    return json.dumps(round_value(document), indent=2, sort_keys=True) + "\n"


def ratio_trend(ratios: Sequence[float], tolerance: float = 1e-12) -> Dict[str, Any]:
    """Whether a bound-ratio series (ordered by p) is non-increasing

    Reported only; a rising step is logged at WARNING.
    """
    rises = [
        i for i in range(1, len(ratios))
        if ratios[i] > ratios[i - 1] * (1 + tolerance) + tolerance
    ]
    if rises:
        logger.warning(f"bound_ratio rises at positions {rises}: {list(ratios)}")
    return {
        "non_increasing": not rises,
        "rises_at": rises,
        "max_ratio": max(ratios) if ratios else None,
    }


def _environment() -> Environment:
    return Environment(
        loader=FileSystemLoader(str(TEMPLATE_DIR)),
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )


def render_summary(document: Dict[str, Any], template: Optional[str] = None) -> str:
    """Markdown summary of a run document via the jinja2 template"""
    env = _environment()
    return env.get_template(template or SUMMARY_TEMPLATE).render(
        report=round_value(document), columns=CSV_COLUMNS,
    )
