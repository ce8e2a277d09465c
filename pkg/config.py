import os
import logging
import sys
from typing import Optional


# =============================================================================
# Logging Configuration
# =============================================================================
LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()
LOG_FORMAT: str = os.getenv(
    "LOG_FORMAT",
    "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)


def setup_logging():
    """Configure application-wide logging

    Log lines go to stderr; stdout carries JSON/CSV reports when no
    --output path is given.
    """
    level = getattr(logging, LOG_LEVEL, logging.INFO)
    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)]
    )


def _env_bool(name: str, default: bool) -> bool:
    v = os.getenv(name)
    if v is None:
        return default
    return v.lower() in ("1", "true", "yes", "on")


def _env_int(name: str, default: int) -> int:
    v = os.getenv(name)
    if v is None or v.strip() == "":
        return default
    try:
        return int(v)
    except ValueError:
        logging.warning(f"Invalid {name}={v!r}, using default {default}")
        return default


def _env_float(name: str, default: float) -> float:
    v = os.getenv(name)
    if v is None or v.strip() == "":
        return default
    try:
        return float(v)
    except ValueError:
        logging.warning(f"Invalid {name}={v!r}, using default {default}")
        return default


# =============================================================================
# Memory Guards
# =============================================================================
# ~1 GiB at 8 bytes/cell; p=1009 at r=2 and p=101 at r=3 fit comfortably
MAX_CELLS: int = _env_int("BOXLATTICE_MAX_CELLS", 2 ** 27)
# Brute-force translate oracle (O(p^r * N(V)))
BRUTEFORCE_MAX_CELLS: int = _env_int("BOXLATTICE_BRUTEFORCE_MAX_CELLS", 2 ** 20)
# Fourier reconstruction visits every frequency in F_p^{r+s}
FOURIER_MAX_PHASES: int = _env_int("BOXLATTICE_FOURIER_MAX_PHASES", 2 ** 24)

# =============================================================================
# Statistics
# =============================================================================
DEFAULT_EPSILON: float = _env_float("BOXLATTICE_DEFAULT_EPSILON", 0.5)
# Lang-Weil implied constant is unspecified; warn beyond this multiple
LANG_WEIL_WARN_FACTOR: float = _env_float("BOXLATTICE_LANG_WEIL_WARN_FACTOR", 10.0)
MOMENT_RATIO_CEILING: float = _env_float("BOXLATTICE_MOMENT_RATIO_CEILING", 16.0)
# Complex values in reports are rounded to this many decimals
REPORT_DECIMALS: int = _env_int("BOXLATTICE_REPORT_DECIMALS", 9)

# =============================================================================
# Execution
# =============================================================================
WORKERS: int = _env_int("BOXLATTICE_WORKERS", 1)
OUTPUT_DIR: str = os.getenv("BOXLATTICE_OUTPUT_DIR", "output")
FORCE: bool = _env_bool("BOXLATTICE_FORCE", False)

CSV_VERSION_TAG: str = "#boxlattice-v1"


def get_report_path(name: str, fmt: str) -> str:
    """Default report path: {OUTPUT_DIR}/{name}.{fmt}"""
    return os.path.join(OUTPUT_DIR, f"{name}.{fmt}")


__all__ = [
    "LOG_LEVEL",
    "LOG_FORMAT",
    "setup_logging",
    "MAX_CELLS",
    "BRUTEFORCE_MAX_CELLS",
    "FOURIER_MAX_PHASES",
    "DEFAULT_EPSILON",
    "LANG_WEIL_WARN_FACTOR",
    "MOMENT_RATIO_CEILING",
    "REPORT_DECIMALS",
    "WORKERS",
    "OUTPUT_DIR",
    "FORCE",
    "CSV_VERSION_TAG",
    "get_report_path",
    "ConfigValidationError",
    "GuardExceededError",
    "check_cell_budget",
    "validate_config",
]


# =============================================================================
# Guards
# =============================================================================
class GuardExceededError(Exception):
    """Raised when a computation would exceed a configured cell budget"""

    def __init__(self, what: str, cells: int, limit: int):
        self.what = what
        self.cells = cells
        self.limit = limit
        super().__init__(
            f"{what} needs {cells:,} cells, limit is {limit:,} "
            f"(raise the limit or pass --force)"
        )


def check_cell_budget(cells: int, limit: Optional[int] = None, what: str = "grid",
                      force: bool = False) -> None:
    """Fail fast when `cells` exceeds `limit` (MAX_CELLS by default)

    Raises:
        GuardExceededError: unless `force` (or BOXLATTICE_FORCE) is set
    """
    if limit is None:
        limit = MAX_CELLS
    if cells <= limit:
        return
    if force or FORCE:
        logging.getLogger(__name__).warning(
            f"{what}: {cells:,} cells exceeds limit {limit:,}, continuing (forced)"
        )
        return
    raise GuardExceededError(what, cells, limit)


# =============================================================================
# Configuration Validation
# =============================================================================
class ConfigValidationError(Exception):
    """Raised when configuration validation fails"""
    pass


def _validate_positive_int(name: str, value: int) -> None:
    if value <= 0:
        raise ConfigValidationError(f"{name} must be positive, got {value}")


def _validate_positive_float(name: str, value: float) -> None:
    if not value > 0:
        raise ConfigValidationError(f"{name} must be positive, got {value}")


def validate_config() -> None:
    """Validate all configuration values on startup

    Raises:
        ConfigValidationError: If any configuration value is invalid
    """
    errors = []

    for name, value in (
        ("BOXLATTICE_MAX_CELLS", MAX_CELLS),
        ("BOXLATTICE_BRUTEFORCE_MAX_CELLS", BRUTEFORCE_MAX_CELLS),
        ("BOXLATTICE_FOURIER_MAX_PHASES", FOURIER_MAX_PHASES),
        ("BOXLATTICE_WORKERS", WORKERS),
        ("BOXLATTICE_REPORT_DECIMALS", REPORT_DECIMALS),
    ):
        try:
            _validate_positive_int(name, value)
        except ConfigValidationError as e:
            errors.append(str(e))

    for name, value in (
        ("BOXLATTICE_DEFAULT_EPSILON", DEFAULT_EPSILON),
        ("BOXLATTICE_LANG_WEIL_WARN_FACTOR", LANG_WEIL_WARN_FACTOR),
        ("BOXLATTICE_MOMENT_RATIO_CEILING", MOMENT_RATIO_CEILING),
    ):
        try:
            _validate_positive_float(name, value)
        except ConfigValidationError as e:
            errors.append(str(e))

    # Index arithmetic is int64
    if MAX_CELLS >= 2 ** 63:
        errors.append(f"BOXLATTICE_MAX_CELLS must be below 2^63, got {MAX_CELLS}")

    if errors:
        raise ConfigValidationError(
            "Configuration validation failed:\n  - " + "\n  - ".join(errors)
        )
