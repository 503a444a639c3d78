"""
Step: Oracle check

Solves one parameter set three ways (recurrence, dense Liouvillian steady
state, long-time limit of the moment equations) and tabulates the
relative differences of I_1..I_5, B_0..B_3 and |R_0|..|R_2|.
"""

import json
import logging
from typing import Any

import pandas as pd

from qdcavity.shared.errors import ConfigError, QdcavityError
from qdcavity.shared.moments import back_substitute
from qdcavity.shared.oracle import (
    cross_check,
    integrate_eom,
    oracle_moments,
    trajectory_moments,
)
from qdcavity.shared.recurrence import coeffs, solve_steady_state
from qdcavity.shared.runspec import from_event
from qdcavity.shared.settings import LADDER_ORDER
from qdcavity.shared.table_utils import output_path, write_table

logger = logging.getLogger(__name__)

DEFAULT_N_PH = 40
MAX_N = 5
AGREEMENT = 1e-6
# Closure order of the moment equations
ODE_ORDER = 24
# Integration time in units of the slowest relaxation time
ODE_RELAXATION_TIMES = 50.0
ODE_RTOL = 1e-10
ODE_ATOL = 1e-15


def handler(event: dict[str, Any], context: Any = None) -> dict[str, Any]:
    """
    Three-way agreement check.

    Input:
        {
            "preset": "setA",
            "n_ph": 40,
            "include_ode": true,
            "out": "oracle_check.csv"
        }

    Output:
        {
            "status": "success",
            "output": "oracle_check.csv",
            "max_rel_error": 3e-9,
            "bias": 1e-12
        }
    """
    logger.info("Received event: %s", json.dumps(event, default=str))

    try:
        spec = from_event(event, "oracle-check", default_preset="setA")
        n_ph = int(spec.options.get("n_ph") or DEFAULT_N_PH)
        if n_ph < MAX_N + 3:
            raise ConfigError("n_ph", f"must be at least {MAX_N + 3}, got {n_ph}")
        include_ode = bool(spec.options.get("include_ode", True))
        ode_order = int(spec.options.get("ode_order") or ODE_ORDER)
    except (QdcavityError, ValueError) as e:
        return {"status": "error", "kind": "config", "error": f"Invalid run: {str(e)}"}

    params = spec.params
    try:
        ladder = solve_steady_state(
            params,
            max(LADDER_ORDER, MAX_N + 2),
            epsilon=spec.epsilon,
            tol=spec.tol,
            precision=spec.precision,
        )
        recurrence = back_substitute(ladder, coeffs(params))
    except (QdcavityError, ArithmeticError) as e:
        logger.error("Error solving recurrence: %s", e)
        return {"status": "error", "error": f"Failed to solve recurrence: {str(e)}"}

    try:
        reference = oracle_moments(params, n_ph=n_ph, max_n=MAX_N)
        logger.info("Liouvillian solved at n_ph=%d (bias %.3g)", reference.n_ph, reference.bias)
    except QdcavityError as e:
        logger.error("Error solving Liouvillian: %s", e)
        return {"status": "error", "error": f"Failed to solve Liouvillian: {str(e)}"}

    frame = cross_check(recurrence, reference.moments, MAX_N)
    frame.insert(0, "oracle_kind", "liouvillian")
    frames = [frame]

    ode_converged = None
    if include_ode:
        t_end = ODE_RELAXATION_TIMES / min(params.kappa, params.gamma)
        try:
            trajectory = integrate_eom(
                params, t_end, max_n=ode_order, rtol=ODE_RTOL, atol=ODE_ATOL
            )
        except QdcavityError as e:
            logger.error("Error integrating moment equations: %s", e)
            return {"status": "error", "error": f"Failed to integrate moment equations: {str(e)}"}
        ode_converged = trajectory.converged
        ode = cross_check(recurrence, trajectory_moments(trajectory), MAX_N)
        ode.insert(0, "oracle_kind", "ode")
        frames.append(ode)

    table = pd.concat(frames, ignore_index=True)
    max_rel_error = float(table["rel_error"].max())
    meta = spec.metadata(
        n_ph=reference.n_ph,
        truncation_bias=reference.bias,
        agreement=AGREEMENT,
        ode_order=ode_order if include_ode else None,
        ode_relaxation_times=ODE_RELAXATION_TIMES if include_ode else None,
    )
    try:
        path = write_table(output_path(spec.out, "oracle_check", spec.fmt), table, spec.fmt, meta)
    except (OSError, QdcavityError) as e:
        logger.error("Error writing cross-check: %s", e)
        return {"status": "error", "error": f"Failed to write cross-check: {str(e)}"}

    result = {
        "status": "success",
        "output": str(path),
        "rows": len(table),
        "max_rel_error": max_rel_error,
        "bias": reference.bias,
        "ode_converged": ode_converged,
    }
    if max_rel_error > AGREEMENT:
        logger.warning("Cross-check disagreement %.3g exceeds %g", max_rel_error, AGREEMENT)
        result["status"] = "error"
        result["error"] = f"Moments disagree by {max_rel_error:.3g} (limit {AGREEMENT:g})"
    return result
