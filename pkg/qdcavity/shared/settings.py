"""
Runtime configuration.

Every setting is read once from the environment (prefix ``QDCAVITY_``) and
falls back to a built-in default. A value that does not parse is logged and
replaced by the default. Command-line flags override these values.
"""

import logging
import os
from typing import Callable, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")


def env(name: str, default: T, cast: Callable[[str], T]) -> T:
    """Read ``QDCAVITY_<name>`` through ``cast``, keeping ``default`` when unset or malformed."""
    raw = os.environ.get(f"QDCAVITY_{name}")
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        logger.warning(
            "Ignoring QDCAVITY_%s=%r: not a valid %s, using %r", name, raw, cast.__name__, default
        )
        return default


# Numerical defaults
EPSILON = env("EPS", 0.1, float)
TOLERANCE = env("TOL", 1e-10, float)
PRECISION_FLAG = env("PRECISION", 64, int)
MAX_ORDER = env("MAX_ORDER", 10_000_000, int)
MAX_BITS = env("MAX_BITS", 8192, int)
RESCALE_EVERY = env("RESCALE_EVERY", 16, int)
LADDER_ORDER = env("LADDER_ORDER", 40, int)

# Input / output
UNITS = env("UNITS", "si", str)
OUTPUT_FORMAT = env("FORMAT", "csv", str)
WORKERS = env("WORKERS", 4, int)
LOG_LEVEL = env("LOG_LEVEL", "WARNING", str)

# Oracle / benchmark caps
MAX_FOCK_CUTOFF = env("MAX_FOCK_CUTOFF", 35, int)
MAX_BENCH_ORDER = env("MAX_BENCH_ORDER", 10_000_000, int)
# Working precision of the balanced-block oracle solve
ORACLE_BITS = env("ORACLE_BITS", 128, int)

SCHEMA_VERSION = 1

# Process exit codes
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_FAILED = 4
