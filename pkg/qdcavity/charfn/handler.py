"""
Step: Characteristic function

Samples Phi(|alpha|) of one parameter set together with its tail bound,
the split-sum form and the asymptotic envelope, and reports whether
|Phi| > 1 is seen on the grid.
"""

import json
import logging
import math
from typing import Any

import numpy as np

from qdcavity.shared.charfunc import (
    max_safe_alpha,
    nonclassicality_by_phi,
    profile,
    solve_for_profile,
)
from qdcavity.shared.errors import ConfigError, QdcavityError
from qdcavity.shared.recurrence import coeffs
from qdcavity.shared.runspec import from_event
from qdcavity.shared.table_utils import output_path, write_table

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 512
# Grid end for the vacuum, where every |alpha| is safe
VACUUM_ALPHA_MAX = 8.0
# Phi sums need at least this many bits
MIN_BITS = 256


def handler(event: dict[str, Any], context: Any = None) -> dict[str, Any]:
    """
    Characteristic-function profile.

    Input:
        {
            "preset": "setA",
            "alpha_max": 8.0,        # omitted: largest controllable |alpha|
            "alpha_samples": 512,
            "out": "charfn.csv"
        }

    Output:
        {
            "status": "success",
            "output": "charfn.csv",
            "nonclassical": true,
            "asymptotic": "nonclassical",
            "max_abs_phi": 3.2,
            "alpha_max": 8.0
        }
    """
    logger.info("Received event: %s", json.dumps(event, default=str))

    try:
        spec = from_event(event, "charfn", default_preset="setA")
        samples = int(spec.options.get("alpha_samples") or DEFAULT_SAMPLES)
        if samples < 2:
            raise ConfigError("alpha_samples", f"must be at least 2, got {samples}")
        alpha_max = spec.options.get("alpha_max")
        if alpha_max is not None:
            alpha_max = float(alpha_max)
            if not alpha_max > 0:
                raise ConfigError("alpha_max", f"must be positive, got {alpha_max}")
    except (QdcavityError, ValueError) as e:
        return {"status": "error", "kind": "config", "error": f"Invalid run: {str(e)}"}

    precision = spec.precision.at_least(MIN_BITS)
    co = coeffs(spec.params)
    try:
        ladder = solve_for_profile(
            spec.params,
            alpha_max,
            precision=precision,
            epsilon=spec.epsilon,
            tol=spec.tol,
        )
        safe = max_safe_alpha(ladder, co)
        if alpha_max is None:
            alpha_max = safe if math.isfinite(safe) else VACUUM_ALPHA_MAX
            logger.info("Using the largest controllable |alpha| = %g", safe)
        grid = np.linspace(0.0, alpha_max, samples)
        prof = profile(ladder, co, grid)
        verdict = nonclassicality_by_phi(prof)
    except (QdcavityError, ArithmeticError) as e:
        logger.error("Error computing characteristic function: %s", e)
        return {"status": "error", "error": f"Failed to compute characteristic function: {str(e)}"}

    meta = spec.metadata(
        alpha_max=float(alpha_max),
        alpha_samples=samples,
        max_safe_alpha=float(safe),
        ladder_order=ladder.length,
        precision_bits=ladder.precision_bits,
        split_order=prof.tail_params[0],
        xi=prof.xi,
    )
    try:
        path = write_table(
            output_path(spec.out, "charfn", spec.fmt), prof.to_frame(), spec.fmt, meta
        )
    except (OSError, QdcavityError) as e:
        logger.error("Error writing profile: %s", e)
        return {"status": "error", "error": f"Failed to write profile: {str(e)}"}

    return {
        "status": "success",
        "output": str(path),
        "rows": len(grid),
        "nonclassical": verdict.nonclassical,
        "asymptotic": verdict.asymptotic,
        "max_abs_phi": verdict.max_abs_phi,
        "alpha_at_max": verdict.alpha_at_max,
        "alpha_max": float(alpha_max),
    }
