"""
Moment-based nonclassicality and entanglement conditions.

Every condition is sufficient only: a failed check never proves the state
classical, so results are tri-state (nonclassical / not detected /
undefined).
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Any, Callable, Iterable, Sequence, TypeVar

import pandas as pd

from .errors import ConfigError, LadderError, QdcavityError
from .moments import FullMoments, back_substitute, mandel_q
from .params import SystemParams, validate
from .precision import Precision
from .recurrence import coeffs, solve_steady_state
from .settings import EPSILON, TOLERANCE, WORKERS

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

CRITERIA = ("field", "joint", "entanglement", "mandel_q")
REPORT_COLUMNS = ["p", "order", "criterion", "value", "verdict", "flag", "entangled", "error"]


class Verdict(str, Enum):
    NONCLASSICAL = "nonclassical"
    NOT_DETECTED = "not_detected"
    UNDEFINED = "undefined"


@dataclass(frozen=True)
class CriterionResult:
    criterion: str
    order: int
    value: float
    verdict: Verdict
    entangled: bool = False

    @property
    def nonclassical(self) -> bool:
        return self.verdict is Verdict.NONCLASSICAL


def _require(available: int, needed: int, what: str) -> None:
    if available < needed:
        raise LadderError(
            f"{what} needs moments up to order {needed}; available up to {available}"
        )


def field_criterion(full: FullMoments, n: int) -> CriterionResult:
    """
    I_{2n} / I_n^2 < 1.

    At n = 1 this is g2(0) < 1, i.e. sub-Poissonian light.
    """
    if n < 1:
        raise ValueError(f"order must be at least 1, got {n}")
    _require(full.ladder.length, 2 * n, f"field criterion at n={n}")
    i = full.ladder.values
    if i[n] == 0:
        return CriterionResult("field", n, math.nan, Verdict.UNDEFINED)
    value = float(i[2 * n] / (i[n] * i[n]))
    verdict = Verdict.NONCLASSICAL if value < 1.0 else Verdict.NOT_DETECTED
    return CriterionResult("field", n, value, verdict)


def joint_criterion(full: FullMoments, n: int) -> CriterionResult:
    """B_{2n} / B_n^2 < 1, involving emitter and field together."""
    if n < 1:
        raise ValueError(f"order must be at least 1, got {n}")
    _require(full.length, 2 * n, f"joint criterion at n={n}")
    b = full.b_values
    if b[n] == 0:
        return CriterionResult("joint", n, math.nan, Verdict.UNDEFINED)
    value = float(b[2 * n] / (b[n] * b[n]))
    verdict = Verdict.NONCLASSICAL if value < 1.0 else Verdict.NOT_DETECTED
    return CriterionResult("joint", n, value, verdict)


def entanglement_criterion(full: FullMoments, n: int) -> CriterionResult:
    """
    B_{2n+1} - |R_n|^2 < 0.

    At n = 0 a negative value certifies emitter-field entanglement; higher
    orders certify nonclassicality only.
    """
    if n < 0:
        raise ValueError(f"order must be nonnegative, got {n}")
    _require(full.length, 2 * n + 1, f"entanglement criterion at n={n}")
    r = full.r_values[n]
    diff = full.b_values[2 * n + 1] - abs(r) ** 2
    value = float(diff)
    negative = diff < 0
    verdict = Verdict.NONCLASSICAL if negative else Verdict.NOT_DETECTED
    return CriterionResult("entanglement", n, value, verdict, entangled=bool(negative and n == 0))


def moment(full: FullMoments, kind: str, n: int) -> Any:
    """Look up I_n, B_n, R_n or the constant 1 ("1")."""
    if kind == "1":
        return 1
    if kind == "I":
        _require(full.ladder.length, n, f"I_{n}")
        return full.ladder.values[n]
    if kind == "B":
        _require(full.length, n, f"B_{n}")
        return full.b_values[n]
    if kind == "R":
        _require(full.length, n, f"R_{n}")
        return full.r_values[n]
    raise ValueError(f"moment kind must be one of I, B, R, 1; got {kind!r}")


def minor_2x2(
    full: FullMoments,
    first: tuple[str, int],
    second: tuple[str, int],
    off_diagonal: tuple[str, int],
) -> float:
    """
    Determinant of [[x, z], [z*, y]] built from moments.

    For example ``minor_2x2(full, ("B", 1), ("1", 0), ("R", 0))`` is
    B_1 - |R_0|^2. A negative minor signals nonclassicality.
    """
    for kind, _ in (first, second):
        if kind == "R":
            raise ValueError("diagonal entries of a principal minor must be real moments")
    x = moment(full, *first)
    y = moment(full, *second)
    z = moment(full, *off_diagonal)
    return float(x * y - abs(z) ** 2)


def _mandel_result(full: FullMoments) -> CriterionResult:
    if full.ladder.values[1] == 0:
        return CriterionResult("mandel_q", 1, math.nan, Verdict.UNDEFINED)
    q = mandel_q(full.ladder)
    return CriterionResult(
        "mandel_q", 1, q, Verdict.NONCLASSICAL if q < 0 else Verdict.NOT_DETECTED
    )


def evaluate_all(full: FullMoments, orders: Sequence[int]) -> list[CriterionResult]:
    """Mandel Q, the n = 0 entanglement test and every family at each order."""
    results = [_mandel_result(full), entanglement_criterion(full, 0)]
    for n in orders:
        results.append(field_criterion(full, n))
        results.append(joint_criterion(full, n))
        results.append(entanglement_criterion(full, n))
    return results


def required_order(orders: Sequence[int]) -> int:
    """Ladder order needed for all criteria at ``orders``."""
    return max(2, 2 * max(orders) + 2)


@dataclass
class CriteriaReport:
    """Criteria of one sweep point."""

    p: float
    results: list[CriterionResult] = field(default_factory=list)
    error: str | None = None

    def rows(self, orders: Sequence[int]) -> list[dict[str, Any]]:
        if self.error is None:
            return [
                {
                    "p": self.p,
                    "order": r.order,
                    "criterion": r.criterion,
                    "value": r.value,
                    "verdict": r.verdict.value,
                    "flag": r.nonclassical,
                    "entangled": r.entangled,
                    "error": "",
                }
                for r in self.results
            ]
        failed = [("mandel_q", 1), ("entanglement", 0)]
        failed += [(c, n) for n in orders for c in CRITERIA[:3]]
        return [
            {
                "p": self.p,
                "order": n,
                "criterion": c,
                "value": math.nan,
                "verdict": Verdict.UNDEFINED.value,
                "flag": False,
                "entangled": False,
                "error": self.error,
            }
            for c, n in failed
        ]


def evaluate_point(
    params: SystemParams,
    orders: Sequence[int],
    epsilon: float = EPSILON,
    tol: float = TOLERANCE,
    precision: Precision | None = None,
) -> CriteriaReport:
    """Solve one parameter point and evaluate every criterion; errors are kept in the report."""
    try:
        ladder = solve_steady_state(
            params,
            required_order(orders),
            epsilon=epsilon,
            tol=tol,
            precision=precision,
        )
        full = back_substitute(ladder, coeffs(params))
        return CriteriaReport(p=params.p, results=evaluate_all(full, orders))
    except (QdcavityError, ArithmeticError) as e:
        logger.warning("Criteria failed at p=%r: %s", params.p, e)
        return CriteriaReport(p=params.p, error=f"Failed to evaluate criteria: {str(e)}")


def map_points(func: Callable[[T], R], items: Iterable[T], workers: int = WORKERS) -> list[R]:
    """
    ``func`` over ``items`` in order.

    With more than one worker the points run in a process pool of at most
    ``workers`` processes, since each point is pure-Python arithmetic that
    holds the GIL. ``func`` and the items must pickle; one worker runs in
    process.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as executor:
        return list(executor.map(func, items))


def sweep(
    template: SystemParams,
    p_grid: Sequence[float],
    orders: Sequence[int],
    *,
    epsilon: float = EPSILON,
    tol: float = TOLERANCE,
    precision: Precision | None = None,
    workers: int = WORKERS,
) -> pd.DataFrame:
    """
    Criteria over a pump-strength grid.

    Points run on a bounded process pool (see ``map_points``); rows keep
    grid order whatever the scheduling. A failing point produces rows with
    its error message and the sweep continues.

    Args:
        template: parameter set whose pump strength is replaced
        p_grid: pump strengths, in the template's units
        orders: criterion orders n
        epsilon: bracket parameter
        tol: relative I_1 tolerance
        precision: starting precision
        workers: pool size

    Returns:
        DataFrame with REPORT_COLUMNS, one block of rows per p
    """
    validate(template)
    if len(p_grid) == 0:
        raise ConfigError("p_grid", "must not be empty")
    if len(orders) == 0:
        raise ConfigError("orders", "must not be empty")
    orders = [int(n) for n in orders]
    if min(orders) < 1:
        raise ConfigError("orders", f"must be positive integers, got {orders}")

    points = [template.with_pump(p) for p in p_grid]
    logger.info("Evaluating criteria at %d points, orders %s", len(points), orders)

    run = partial(evaluate_point, orders=orders, epsilon=epsilon, tol=tol, precision=precision)
    reports = map_points(run, points, workers)

    rows = [row for report in reports for row in report.rows(orders)]
    failures = sum(1 for report in reports if report.error is not None)
    if failures:
        logger.warning("%d of %d sweep points failed", failures, len(reports))
    frame = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    frame.attrs["failed_points"] = failures
    return frame
