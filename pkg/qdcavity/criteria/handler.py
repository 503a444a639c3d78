"""
Step: Criteria

Evaluates the nonclassicality and entanglement conditions over a grid of
pump strengths. Points run on a bounded worker pool; a failing point is
reported in its rows and the sweep goes on, so the step can end partially
successful.
"""

import json
import logging
from typing import Any

import numpy as np

from qdcavity.shared.criteria import sweep
from qdcavity.shared.errors import ConfigError, QdcavityError
from qdcavity.shared.runspec import float_list, from_event, int_list
from qdcavity.shared.table_utils import output_path, write_table

logger = logging.getLogger(__name__)

DEFAULT_ORDERS = [1, 3, 5]
# log10 of the default pump range in s^-1
DEFAULT_P_RANGE = (9.5, 13.0)
DEFAULT_P_POINTS = 36


def default_p_grid() -> list[float]:
    return [float(p) for p in np.logspace(*DEFAULT_P_RANGE, DEFAULT_P_POINTS)]


def handler(event: dict[str, Any], context: Any = None) -> dict[str, Any]:
    """
    Criteria sweep over pump strength.

    Input:
        {
            "preset": "setA",
            "p_grid": [1e10, 1e11, 1e12],   # in the run's units
            "orders": [1, 3, 5],
            "workers": 4,
            "out": "criteria.csv"
        }

    Output:
        {
            "status": "success" | "partial",
            "output": "criteria.csv",
            "points": 3,
            "failed_points": 0,
            "rows": 33
        }
    """
    logger.info("Received event: %s", json.dumps(event, default=str))

    try:
        spec = from_event(event, "criteria", default_preset="setA")
        p_grid = float_list(spec.options.get("p_grid"), "p_grid")
        grid_defaulted = spec.options.get("p_grid") is None
        if grid_defaulted:
            p_grid = default_p_grid()
        if not p_grid:
            raise ConfigError("p_grid", "must not be empty")
        if spec.units == "kappa" and not grid_defaulted:
            p_grid = [p * spec.params.kappa for p in p_grid]
        orders = int_list(spec.options.get("orders"), "orders")
        orders_defaulted = spec.options.get("orders") is None
        if orders_defaulted:
            orders = list(DEFAULT_ORDERS)
        if not orders:
            raise ConfigError("orders", "must not be empty")
    except (QdcavityError, ValueError) as e:
        return {"status": "error", "kind": "config", "error": f"Invalid run: {str(e)}"}

    try:
        frame = sweep(
            spec.params,
            p_grid,
            orders,
            epsilon=spec.epsilon,
            tol=spec.tol,
            precision=spec.precision,
            workers=spec.workers,
        )
    except ConfigError as e:
        return {"status": "error", "kind": "config", "error": f"Invalid run: {str(e)}"}
    except QdcavityError as e:
        logger.error("Error running criteria sweep: %s", e)
        return {"status": "error", "error": f"Failed to run criteria sweep: {str(e)}"}

    failed = int(frame.attrs.get("failed_points", 0))
    meta = spec.metadata(orders=orders, points=len(p_grid))
    if grid_defaulted:
        low, high = DEFAULT_P_RANGE
        meta["default_p_grid"] = f"logspace({low}, {high}, {DEFAULT_P_POINTS}) s^-1"
    if orders_defaulted:
        meta["default_orders"] = DEFAULT_ORDERS

    try:
        path = write_table(output_path(spec.out, "criteria", spec.fmt), frame, spec.fmt, meta)
    except (OSError, QdcavityError) as e:
        logger.error("Error writing criteria: %s", e)
        return {"status": "error", "error": f"Failed to write criteria: {str(e)}"}

    status = "partial" if failed else "success"
    if failed == len(p_grid):
        status = "error"
    result = {
        "status": status,
        "output": str(path),
        "points": len(p_grid),
        "failed_points": failed,
        "rows": len(frame),
    }
    if status == "error":
        result["error"] = "Every sweep point failed"
    return result
