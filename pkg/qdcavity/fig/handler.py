"""
Step: Figure data

Emits the curves of one figure (2 to 8) as a table. The grids are not
given anywhere as numbers, so every default used is written into the
output header.
"""

import json
import logging
import math
from functools import partial
from typing import Any, Callable

import numpy as np
import pandas as pd

from qdcavity.shared.charfunc import (
    max_safe_alpha,
    profile,
    solve_for_profile,
)
from qdcavity.shared.criteria import map_points, sweep
from qdcavity.shared.errors import ConfigError, QdcavityError
from qdcavity.shared.moments import g_n_zero
from qdcavity.shared.params import SystemParams, load_preset
from qdcavity.shared.precision import Precision
from qdcavity.shared.recurrence import (
    bounds_profile,
    coeffs,
    estimate_i1,
    solve_steady_state,
)
from qdcavity.shared.runspec import RunSpec, from_event
from qdcavity.shared.table_utils import output_path, write_table

logger = logging.getLogger(__name__)

FIGURES = (2, 3, 4, 5, 6, 7, 8)

FIG2_PUMPS = (0.5, 1.0, 1.5, 2.0)
FIG2_G_RANGE = (-1.0, 1.0)
FIG3_COUPLINGS = (1.0, 5.0)
FIG3_ORDERS = (2, 3, 4)
FIG3_P_RANGE = (-1.0, 4.0)
SWEEP_P_RANGE = (9.5, 13.0)
FIG4_ORDERS = (1, 3, 5, 10)
FIG5_ORDERS = (1, 3, 5)
FIG7_PUMP = 1e11
FIG7_ALPHA_MAX = 8.0
FIG7_SAMPLES = 512
FIG8_N_RANGE = (0.0, 4.0)
PRESETS = ("setA", "setB")


def _kappa_units(g: float, p: float, gamma: float = 1.0) -> SystemParams:
    return SystemParams(g=g, kappa=1.0, gamma=gamma, p=p)


def _grid(spec: RunSpec, key: str, default: np.ndarray) -> np.ndarray:
    value = spec.options.get(key)
    if value is None:
        return default
    grid = np.asarray(value, dtype=np.float64)
    if grid.size == 0:
        raise ConfigError(key, "must not be empty")
    return grid


def _intensity(point: tuple[float, float], tol: float, epsilon: float) -> float:
    p, g = point
    return estimate_i1(coeffs(_kappa_units(g, p)), tol=tol, epsilon=epsilon).value


def _renormalized(
    point: tuple[float, float], order: int, epsilon: float, tol: float, precision: Precision
) -> list[float]:
    g, p = point
    ladder = solve_steady_state(
        _kappa_units(g, p), order, epsilon=epsilon, tol=tol, precision=precision
    )
    return [g_n_zero(ladder, n) / math.factorial(n) for n in FIG3_ORDERS]


def figure_2(spec: RunSpec) -> tuple[pd.DataFrame, dict[str, Any]]:
    """I_1 against g/kappa for several pump strengths (gamma = kappa, delta = 0)."""
    g_grid = _grid(spec, "g_grid", np.logspace(*FIG2_G_RANGE, 41))
    points = [(p, g) for p in FIG2_PUMPS for g in g_grid]

    run = partial(_intensity, tol=spec.tol, epsilon=spec.epsilon)
    values = map_points(run, points, spec.workers)

    frame = pd.DataFrame(
        {
            "p_over_kappa": [p for p, _ in points],
            "g_over_kappa": [g for _, g in points],
            "I1": values,
        }
    )
    defaults = {
        "gamma_over_kappa": 1.0,
        "pumps_over_kappa": list(FIG2_PUMPS),
        "g_grid": f"logspace({FIG2_G_RANGE[0]}, {FIG2_G_RANGE[1]}, 41)",
    }
    return frame, defaults


def figure_3(spec: RunSpec) -> tuple[pd.DataFrame, dict[str, Any]]:
    """Renormalized moments I_n / (n! I_1^n) against p/kappa."""
    p_grid = _grid(spec, "p_grid", np.logspace(*FIG3_P_RANGE, 51))
    order = max(FIG3_ORDERS) + 2
    points = [(g, p) for g in FIG3_COUPLINGS for p in p_grid]

    run = partial(
        _renormalized, order=order, epsilon=spec.epsilon, tol=spec.tol, precision=spec.precision
    )
    values = map_points(run, points, spec.workers)

    rows = [
        {"g_over_kappa": g, "p_over_kappa": p, "n": n, "renormalized": v}
        for (g, p), vs in zip(points, values)
        for n, v in zip(FIG3_ORDERS, vs)
    ]
    defaults = {
        "gamma_over_kappa": 1.0,
        "couplings_over_kappa": list(FIG3_COUPLINGS),
        "p_grid": f"logspace({FIG3_P_RANGE[0]}, {FIG3_P_RANGE[1]}, 51)",
    }
    return pd.DataFrame(rows), defaults


def _criteria_figure(
    spec: RunSpec, criterion: str, orders: tuple[int, ...]
) -> tuple[pd.DataFrame, dict[str, Any]]:
    p_grid = _grid(spec, "p_grid", np.logspace(*SWEEP_P_RANGE, 36))
    frames = []
    for name in PRESETS:
        frame = sweep(
            load_preset(name),
            list(p_grid),
            list(orders) if orders else [1],
            epsilon=spec.epsilon,
            tol=spec.tol,
            precision=spec.precision,
            workers=spec.workers,
        )
        frame = frame[frame["criterion"] == criterion].copy()
        if not orders:
            frame = frame[frame["order"] == 0]
        frame.insert(0, "preset", name)
        frames.append(frame)
    out = pd.concat(frames, ignore_index=True)
    out.attrs["failed_points"] = sum(int(f.attrs.get("failed_points", 0)) for f in frames)
    defaults = {"p_grid": f"logspace({SWEEP_P_RANGE[0]}, {SWEEP_P_RANGE[1]}, 36) s^-1"}
    return out, defaults


def figure_4(spec: RunSpec) -> tuple[pd.DataFrame, dict[str, Any]]:
    """Field criterion I_{2n}/I_n^2 over p for both presets."""
    return _criteria_figure(spec, "field", FIG4_ORDERS)


def figure_5(spec: RunSpec) -> tuple[pd.DataFrame, dict[str, Any]]:
    """Joint criterion B_{2n}/B_n^2 over p for both presets."""
    return _criteria_figure(spec, "joint", FIG5_ORDERS)


def figure_6(spec: RunSpec) -> tuple[pd.DataFrame, dict[str, Any]]:
    """B_1 - |R_0|^2 over p for both presets."""
    return _criteria_figure(spec, "entanglement", ())


def figure_7(spec: RunSpec) -> tuple[pd.DataFrame, dict[str, Any]]:
    """Phi(|alpha|) of both presets at p = 1e11 s^-1."""
    alpha_max = float(spec.options.get("alpha_max") or FIG7_ALPHA_MAX)
    samples = int(spec.options.get("alpha_samples") or FIG7_SAMPLES)
    precision = spec.precision.at_least(256)
    frames = []
    used: dict[str, float] = {}
    for name in PRESETS:
        params = load_preset(name).with_pump(FIG7_PUMP)
        co = coeffs(params)
        ladder = solve_for_profile(
            params, alpha_max, precision=precision, epsilon=spec.epsilon, tol=spec.tol
        )
        reach = min(alpha_max, max_safe_alpha(ladder, co))
        if reach < alpha_max:
            logger.warning("%s: |alpha| grid clipped to %g", name, reach)
        used[name] = reach
        frame = profile(ladder, co, np.linspace(0.0, reach, samples)).to_frame()
        frame.insert(0, "preset", name)
        frames.append(frame)
    defaults = {
        "pump": FIG7_PUMP,
        "alpha_max": alpha_max,
        "alpha_samples": samples,
        "alpha_reach": used,
    }
    return pd.concat(frames, ignore_index=True), defaults


def figure_8(spec: RunSpec) -> tuple[pd.DataFrame, dict[str, Any]]:
    """Ratio bounds, next-to-leading ratio and xi/n over n (set B unless overridden)."""
    orders = np.unique(np.logspace(*FIG8_N_RANGE, 81).astype(int))
    frame = pd.DataFrame(bounds_profile(coeffs(spec.params), orders, spec.epsilon))
    defaults = {"orders": f"unique(int(logspace({FIG8_N_RANGE[0]}, {FIG8_N_RANGE[1]}, 81)))"}
    return frame, defaults


BUILDERS: dict[int, Callable[[RunSpec], tuple[pd.DataFrame, dict[str, Any]]]] = {
    2: figure_2,
    3: figure_3,
    4: figure_4,
    5: figure_5,
    6: figure_6,
    7: figure_7,
    8: figure_8,
}


def handler(event: dict[str, Any], context: Any = None) -> dict[str, Any]:
    """
    Data for one figure.

    Input:
        {
            "figure": 4,
            "p_grid": [...],        # optional grid override
            "out": "fig4.csv"
        }

    Output:
        {
            "status": "success" | "partial",
            "figure": 4,
            "output": "fig4.csv",
            "rows": 720
        }
    """
    logger.info("Received event: %s", json.dumps(event, default=str))

    try:
        figure = int(event.get("figure", 0))
        if figure not in FIGURES:
            raise ConfigError("figure", f"must be one of {list(FIGURES)}, got {event.get('figure')!r}")
        spec = from_event(event, "fig", default_preset="setB")
    except (QdcavityError, ValueError) as e:
        return {"status": "error", "kind": "config", "error": f"Invalid run: {str(e)}"}

    try:
        frame, defaults = BUILDERS[figure](spec)
    except ConfigError as e:
        return {"status": "error", "kind": "config", "error": f"Invalid run: {str(e)}"}
    except (QdcavityError, ArithmeticError) as e:
        logger.error("Error building figure %d: %s", figure, e)
        return {"status": "error", "error": f"Failed to build figure {figure}: {str(e)}"}
    logger.info("Figure %d: %d rows", figure, len(frame))

    failed = int(frame.attrs.get("failed_points", 0))
    meta = spec.metadata(figure=figure, defaults=defaults)
    try:
        path = write_table(
            output_path(spec.out, f"fig{figure}", spec.fmt), frame, spec.fmt, meta
        )
    except (OSError, QdcavityError) as e:
        logger.error("Error writing figure data: %s", e)
        return {"status": "error", "error": f"Failed to write figure data: {str(e)}"}

    return {
        "status": "partial" if failed else "success",
        "figure": figure,
        "output": str(path),
        "rows": len(frame),
        "failed_points": failed,
    }
