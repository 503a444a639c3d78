"""
Step: Benchmark

Times the recurrence solve against the dense Liouvillian solve and fits
log-log slopes. Sizes beyond the configured caps are skipped with a
warning.
"""

import json
import logging
from typing import Any

from qdcavity.shared.errors import ConfigError, QdcavityError
from qdcavity.shared.oracle import benchmark
from qdcavity.shared.runspec import from_event, int_list
from qdcavity.shared.table_utils import output_path, write_table

logger = logging.getLogger(__name__)

DEFAULT_RECURRENCE_SIZES = [10_000, 100_000, 1_000_000, 10_000_000]
DEFAULT_FOCK_SIZES = [10, 15, 20, 25, 30, 35]


def handler(event: dict[str, Any], context: Any = None) -> dict[str, Any]:
    """
    Benchmark both solvers.

    Input:
        {
            "preset": "setB",
            "recurrence_sizes": [10000, 100000],
            "fock_sizes": [10, 15, 20],
            "repeats": 3,
            "out": "bench.csv"
        }

    Output:
        {
            "status": "success",
            "output": "bench.csv",
            "rows": 5,
            "recurrence_slope": 1.02,
            "liouvillian_slope": 4.6
        }
    """
    logger.info("Received event: %s", json.dumps(event, default=str))

    try:
        spec = from_event(event, "bench", default_preset="setB")
        recurrence_sizes = event.get("recurrence_sizes")
        fock_sizes = event.get("fock_sizes")
        defaulted = recurrence_sizes is None and fock_sizes is None
        if defaulted:
            recurrence_sizes, fock_sizes = DEFAULT_RECURRENCE_SIZES, DEFAULT_FOCK_SIZES
        recurrence_sizes = int_list(recurrence_sizes, "recurrence_sizes")
        fock_sizes = int_list(fock_sizes, "fock_sizes")
        if not recurrence_sizes and not fock_sizes:
            raise ConfigError("sizes", "at least one benchmark size is required")
        if min(recurrence_sizes + fock_sizes) < 1:
            raise ConfigError("sizes", "sizes must be positive")
        repeats = int(event["repeats"]) if event.get("repeats") is not None else 1
        if repeats < 1:
            raise ConfigError("repeats", f"must be at least 1, got {repeats}")
    except (QdcavityError, ValueError) as e:
        return {"status": "error", "kind": "config", "error": f"Invalid run: {str(e)}"}

    try:
        frame = benchmark(spec.params, recurrence_sizes, fock_sizes, repeats=repeats)
    except (QdcavityError, ArithmeticError) as e:
        logger.error("Error running benchmark: %s", e)
        return {"status": "error", "error": f"Failed to run benchmark: {str(e)}"}

    slopes = {
        solver: float(group["fitted_slope"].iloc[0])
        for solver, group in frame.groupby("solver", sort=True)
    }
    meta = spec.metadata(repeats=repeats, threads=1)
    if defaulted:
        meta["default_sizes"] = {
            "recurrence": DEFAULT_RECURRENCE_SIZES,
            "liouvillian": DEFAULT_FOCK_SIZES,
        }
    try:
        path = write_table(output_path(spec.out, "bench", spec.fmt), frame, spec.fmt, meta)
    except (OSError, QdcavityError) as e:
        logger.error("Error writing benchmark: %s", e)
        return {"status": "error", "error": f"Failed to write benchmark: {str(e)}"}

    return {
        "status": "success",
        "output": str(path),
        "rows": len(frame),
        "recurrence_slope": slopes.get("recurrence"),
        "liouvillian_slope": slopes.get("liouvillian"),
    }
