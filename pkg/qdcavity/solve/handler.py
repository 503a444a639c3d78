"""
Step: Solve

Computes the steady-state moment ladder of one parameter set, recovers the
emitter and coherence moments, and writes the table. With ``oracle_check``
the Liouvillian reference is solved too and relative errors are appended.
"""

import json
import logging
import math
from typing import Any

import numpy as np
import pandas as pd

from qdcavity.shared.errors import ConfigError, QdcavityError
from qdcavity.shared.moments import FullMoments, back_substitute, summary
from qdcavity.shared.oracle import oracle_moments
from qdcavity.shared.recurrence import MomentLadder, coeffs, solve_steady_state
from qdcavity.shared.runspec import from_event
from qdcavity.shared.settings import LADDER_ORDER
from qdcavity.shared.table_utils import output_path, write_table

logger = logging.getLogger(__name__)

ORACLE_N_PH = 40
ORACLE_MAX_N = 5
# Highest order compared for each moment family
CHECKED_ORDERS = {"I": 5, "B": 3, "R": 2}


def moments_frame(full: FullMoments) -> pd.DataFrame:
    """One row per order: I_n, B_n, Re R_n, Im R_n (B and R empty on the last row)."""
    i_values = full.i_moments
    n_rows = len(i_values)
    pad = n_rows - len(full.b_values)
    b = np.concatenate([full.b_moments, np.full(pad, math.nan)])
    r = np.concatenate([full.r_moments, np.full(pad, complex(math.nan, math.nan))])
    return pd.DataFrame(
        {
            "n": np.arange(n_rows),
            "I": i_values,
            "B": b,
            "R_re": r.real,
            "R_im": r.imag,
        }
    )


def ladder_metadata(ladder: MomentLadder) -> dict[str, Any]:
    diag = ladder.diagnostics
    return {
        "i1_bracket": [float(v) for v in ladder.i1_bracket],
        "cutoff_N": ladder.cutoff_N,
        "i1_order": diag.i1_order,
        "precision_bits": ladder.precision_bits,
        "positivity_failed_at": diag.positivity_failed_at,
        "ladder_relative_error": diag.relative_error,
        "ladder_converged": diag.converged,
        "precision_history": [e["bits"] for e in diag.escalations],
    }


def append_oracle_columns(frame: pd.DataFrame, reference: FullMoments) -> pd.DataFrame:
    """Relative-error columns against the Liouvillian moments (NaN beyond its range)."""
    n_rows = len(frame)

    def column(values: np.ndarray) -> np.ndarray:
        out = np.full(n_rows, math.nan)
        m = min(len(values), n_rows)
        out[:m] = values[:m]
        return out

    def rel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        scale = np.maximum(np.abs(a), np.abs(b))
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(scale > 0, np.abs(a - b) / scale, 0.0)

    oracle_i = column(reference.i_moments[: CHECKED_ORDERS["I"] + 1])
    oracle_b = column(reference.b_moments[: CHECKED_ORDERS["B"] + 1])
    oracle_r = column(np.abs(reference.r_moments[: CHECKED_ORDERS["R"] + 1]))
    out = frame.copy()
    out["oracle_I"] = oracle_i
    out["oracle_B"] = oracle_b
    out["oracle_abs_R"] = oracle_r
    out["rel_err_I"] = np.where(np.isnan(oracle_i), math.nan, rel(out["I"].to_numpy(), oracle_i))
    out["rel_err_B"] = np.where(np.isnan(oracle_b), math.nan, rel(out["B"].to_numpy(), oracle_b))
    abs_r = np.hypot(out["R_re"].to_numpy(), out["R_im"].to_numpy())
    out["rel_err_R"] = np.where(np.isnan(oracle_r), math.nan, rel(abs_r, oracle_r))
    return out


def handler(event: dict[str, Any], context: Any = None) -> dict[str, Any]:
    """
    Solve one parameter set.

    Input:
        {
            "preset": "setA",            # or "config": "params.toml"
            "overrides": {"p": 1e11},
            "units": "si",
            "order": 40,
            "oracle_check": false,
            "n_ph": 40,
            "out": "solve.csv",
            "format": "csv"
        }

    Output:
        {
            "status": "success",
            "output": "solve.csv",
            "rows": 41,
            "I1": 0.111,
            "g2": 0.547,
            ...
        }
    """
    logger.info("Received event: %s", json.dumps(event, default=str))

    try:
        spec = from_event(event, "solve")
        if spec.params is None:
            raise ConfigError("preset", "no parameters given (use a preset, a config or overrides)")
        order = int(spec.options.get("order") or LADDER_ORDER)
    except (QdcavityError, ValueError) as e:
        return {"status": "error", "kind": "config", "error": f"Invalid run: {str(e)}"}

    try:
        ladder = solve_steady_state(
            spec.params,
            order,
            epsilon=spec.epsilon,
            tol=spec.tol,
            precision=spec.precision,
        )
        full = back_substitute(ladder, coeffs(spec.params))
        logger.info("Solved ladder to order %d at %d bits", ladder.length, ladder.precision_bits)
    except (QdcavityError, ArithmeticError) as e:
        logger.error("Error solving steady state: %s", e)
        return {"status": "error", "error": f"Failed to solve steady state: {str(e)}"}

    frame = moments_frame(full)
    stats = summary(full)
    meta = spec.metadata(ladder_order=order, **ladder_metadata(ladder))

    max_rel_error = None
    if spec.options.get("oracle_check"):
        n_ph = int(spec.options.get("n_ph") or ORACLE_N_PH)
        max_n = min(ORACLE_MAX_N, full.length)
        try:
            reference = oracle_moments(spec.params, n_ph=n_ph, max_n=max_n)
        except QdcavityError as e:
            logger.error("Error in oracle check: %s", e)
            return {"status": "error", "error": f"Failed oracle check: {str(e)}"}
        frame = append_oracle_columns(frame, reference.moments)
        errors = frame[["rel_err_I", "rel_err_B", "rel_err_R"]].to_numpy()
        max_rel_error = float(np.nanmax(errors))
        meta.update(oracle_n_ph=reference.n_ph, oracle_bias=reference.bias)
        logger.info("Oracle check: max relative error %.3g", max_rel_error)

    try:
        path = write_table(output_path(spec.out, "solve", spec.fmt), frame, spec.fmt, meta)
    except (OSError, QdcavityError) as e:
        logger.error("Error writing moments: %s", e)
        return {"status": "error", "error": f"Failed to write moments: {str(e)}"}

    result = {
        "status": "success",
        "output": str(path),
        "rows": len(frame),
        "precision_bits": ladder.precision_bits,
        "truncated": ladder.truncated,
        **stats,
    }
    if max_rel_error is not None:
        result["max_rel_error"] = max_rel_error
    return result
