"""Shared numerics for the qdcavity handlers."""

from .errors import (
    ConfigError,
    ConvergenceError,
    LadderError,
    OracleError,
    ParameterError,
    PrecisionRangeError,
    QdcavityError,
    RecurrenceOverflowError,
)
from .params import SystemParams, load_config, load_preset, normalize, validate
from .precision import Precision
from .recurrence import (
    MomentLadder,
    RecurrenceCoeffs,
    coeffs,
    estimate_i1,
    select_cutoff,
    solve_ladder,
    solve_steady_state,
)
from .moments import FullMoments, back_substitute, g_n_zero, mandel_q
from .criteria import CriteriaReport, evaluate_all, sweep
from .charfunc import CharFnProfile, nonclassicality_by_phi, phi_series, profile
from .oracle import benchmark, build_liouvillian, oracle_moments, steady_state
from .table_utils import read_table, write_table

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "LadderError",
    "OracleError",
    "ParameterError",
    "PrecisionRangeError",
    "QdcavityError",
    "RecurrenceOverflowError",
    "SystemParams",
    "load_config",
    "load_preset",
    "normalize",
    "validate",
    "Precision",
    "MomentLadder",
    "RecurrenceCoeffs",
    "coeffs",
    "estimate_i1",
    "select_cutoff",
    "solve_ladder",
    "solve_steady_state",
    "FullMoments",
    "back_substitute",
    "g_n_zero",
    "mandel_q",
    "CriteriaReport",
    "evaluate_all",
    "sweep",
    "CharFnProfile",
    "nonclassicality_by_phi",
    "phi_series",
    "profile",
    "benchmark",
    "build_liouvillian",
    "oracle_moments",
    "steady_state",
    "read_table",
    "write_table",
]
