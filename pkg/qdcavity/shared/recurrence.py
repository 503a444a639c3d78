"""
Three-term recurrence for the steady-state photon moments.

The intracavity moments I_n = <a^+n a^n> obey

    I_{n+2} = alpha_{n+1} I_{n+1} + beta_n I_n,     I_0 = 1,

and I_1 is fixed by requiring the minimal (decaying) solution. Writing
I_n = C_n I_1 + D_n splits the problem into two sequences that are cheap to
run forward; I_1 follows from truncating at I_N = 0 and is bracketed by the
two-sided ratio bound that holds for n >= xi/epsilon.

Forward evaluation of the minimal solution is ill-conditioned, so the
ladder itself is built in extended precision, doubling the working
precision until two successive ladders agree.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceError, LadderError, ParameterError, RecurrenceOverflowError
from .params import SystemParams, normalize, validate
from .precision import NATIVE_BITS, Arithmetic, Precision
from .settings import (
    EPSILON,
    LADDER_ORDER,
    MAX_BITS,
    MAX_ORDER,
    PRECISION_FLAG,
    RESCALE_EVERY,
    TOLERANCE,
)

logger = logging.getLogger(__name__)

# Rescale the C/D state immediately once any entry passes this magnitude
RESCALE_LIMIT = 1e150
# Coefficients are generated in numpy blocks of this many orders
BLOCK_SIZE = 4096
LINEAR_TERMS = ("compact", "expanded")


class _Terms:
    """Coefficient formulas in one number type (float or mpf), kappa = 1."""

    def __init__(self, params: SystemParams, arith: Arithmetic):
        num = arith.num
        self.p = num(params.p)
        self.base = num(params.gamma) + num(params.p)
        self.g2 = num(params.g) ** 2
        self.delta2 = num(params.delta) ** 2
        self.half_gd = num(params.gamma_d) / 2

    def sigma(self, n: int) -> Any:
        return self.base + n

    def gamma_n(self, n: int) -> Any:
        return (self.base + (2 * n + 1)) / 2 + self.half_gd

    def inv_lambda(self, n: int) -> Any:
        gt = self.gamma_n(n)
        return (self.delta2 + gt * gt) / (2 * self.g2 * gt)

    def alpha(self, n: int) -> Any:
        s = self.sigma(n)
        return self.p - n * s / (2 * self.sigma(n - 1)) - s * (1 + self.inv_lambda(n - 1)) / 2

    def beta(self, n: int) -> Any:
        return (n + 1) * self.p * self.sigma(n + 1) / (2 * self.sigma(n))


class RecurrenceCoeffs:
    """
    Recurrence coefficients of one parameter set.

    Everything is evaluated in units of kappa; ``params`` holds the
    normalized set and ``source`` the one the caller passed in.
    """

    def __init__(self, params: SystemParams):
        self.source = validate(params)
        self.params = normalize(params)
        self._native = _Terms(self.params, Precision().arithmetic())

    def __repr__(self) -> str:
        return f"RecurrenceCoeffs({self.params!r})"

    @property
    def p(self) -> float:
        return self.params.p

    @property
    def xi(self) -> float:
        """Asymptotic constant: I_{n+1}/I_n -> xi/n."""
        return 2.0 * self.params.g**2 * self.params.p

    def terms(self, arith: Arithmetic) -> _Terms:
        if arith.precision.is_native:
            return self._native
        return _Terms(self.params, arith)

    def sigma(self, n: int) -> float:
        return self._native.sigma(n)

    def gamma_n(self, n: int) -> float:
        return self._native.gamma_n(n)

    def Lambda(self, n: int) -> float:
        return 1.0 / self._native.inv_lambda(n)

    def alpha(self, n: int) -> float:
        if n < 1:
            raise ValueError(f"alpha is defined for n >= 1, got {n}")
        return self._native.alpha(n)

    def beta(self, n: int) -> float:
        if n < 0:
            raise ValueError(f"beta is defined for n >= 0, got {n}")
        return self._native.beta(n)

    def alpha_array(self, start: int, stop: int) -> np.ndarray:
        """alpha_n for start <= n < stop (start >= 1)."""
        q = self.params
        n = np.arange(start, stop, dtype=np.float64)
        base = q.gamma + q.p
        sig = base + n
        gt_prev = (base + 2.0 * n - 1.0) / 2.0 + q.gamma_d / 2.0
        inv_lam = (q.delta**2 + gt_prev**2) / (2.0 * q.g**2 * gt_prev)
        return q.p - n * sig / (2.0 * (sig - 1.0)) - sig * (1.0 + inv_lam) / 2.0

    def beta_array(self, start: int, stop: int) -> np.ndarray:
        """beta_n for start <= n < stop."""
        q = self.params
        n = np.arange(start, stop, dtype=np.float64)
        base = q.gamma + q.p
        return (n + 1.0) * q.p * (base + n + 1.0) / (2.0 * (base + n))


def coeffs(params: SystemParams) -> RecurrenceCoeffs:
    return RecurrenceCoeffs(params)


@dataclass
class CDSequences:
    """
    C_0..C_N and D_0..D_N with their joint rescaling record.

    Stored entries carry different scales; the true value of entry n is
    ``c[n] * 10**scale_log10[n]``. Ratios D_n/C_n need no correction.
    """

    c: list[float]
    d: list[float]
    scale_log10: list[float]
    rescales: list[tuple[int, float]] = field(default_factory=list)

    def ratio(self, n: int) -> float:
        return self.d[n] / self.c[n]

    def i1_truncated(self, n: int) -> float:
        """I_1 from the truncation I_n = 0."""
        return -self.d[n] / self.c[n]


def cd_sequences(
    co: RecurrenceCoeffs, order: int, rescale_every: int = RESCALE_EVERY
) -> CDSequences:
    """
    Run the C/D decomposition forward to ``order``.

    Args:
        co: recurrence coefficients
        order: last order N (N >= 2)
        rescale_every: joint rescaling period k

    Returns:
        CDSequences with N + 1 entries each

    Raises:
        RecurrenceOverflowError: a value left the float range despite rescaling
    """
    if order < 2:
        raise ValueError(f"order must be at least 2, got {order}")

    c = [0.0, 1.0]
    d = [1.0, 0.0]
    scale = [0.0, 0.0]
    rescales: list[tuple[int, float]] = []
    log_scale = 0.0
    c0, c1, d0, d1 = 0.0, 1.0, 1.0, 0.0

    alphas = co.alpha_array(1, order).tolist()
    betas = co.beta_array(0, order - 1).tolist()
    for n, (a, b) in enumerate(zip(alphas, betas)):
        c2 = a * c1 + b * c0
        d2 = a * d1 + b * d0
        k = n + 2
        if k % rescale_every == 0 or abs(c2) > RESCALE_LIMIT or abs(d2) > RESCALE_LIMIT:
            s = max(abs(c1), abs(c2), abs(d1), abs(d2))
            if not math.isfinite(s):
                raise RecurrenceOverflowError(k)
            if s > 0.0:
                c1, c2, d1, d2 = c1 / s, c2 / s, d1 / s, d2 / s
                log_scale += math.log10(s)
                rescales.append((k, s))
        c.append(c2)
        d.append(d2)
        scale.append(log_scale)
        c0, c1, d0, d1 = c1, c2, d1, d2

    return CDSequences(c=c, d=d, scale_log10=scale, rescales=rescales)


class I1Estimate(NamedTuple):
    value: float
    bracket: tuple[float, float]
    order: int


def estimate_i1(
    co: RecurrenceCoeffs,
    tol: float = TOLERANCE,
    epsilon: float = EPSILON,
    max_order: int = MAX_ORDER,
    min_order: int = 0,
    rescale_every: int = RESCALE_EVERY,
) -> I1Estimate:
    """
    Estimate I_1 with a certified two-sided bracket.

    The C/D sequences run forward in double precision. Once n >= xi/epsilon
    (and n >= min_order) the ratio bounds on I_{n+1}/I_n translate into an
    interval for I_1; iteration stops when its relative width is below tol.
    The point estimate is -D_N/C_N at the truncation order N = n + 2.

    Args:
        co: recurrence coefficients
        tol: relative bracket width to reach
        epsilon: bracket parameter
        max_order: give up beyond this order
        min_order: do not stop before this order
        rescale_every: joint rescaling period of the C/D state

    Returns:
        I1Estimate(value, (lower, upper), N)

    Raises:
        ConvergenceError: carrying the last bracket
        RecurrenceOverflowError: the state left the float range
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if co.p == 0:
        return I1Estimate(0.0, (0.0, 0.0), 0)

    threshold = max(math.ceil(co.xi / epsilon), min_order, 1)
    c0, c1, d0, d1 = 0.0, 1.0, 1.0, 0.0
    rescale_count = 0
    last: tuple[float, float] | None = None
    n = 0

    while n < max_order:
        stop = min(n + BLOCK_SIZE, max_order)
        alphas = co.alpha_array(n + 1, stop + 1).tolist()
        betas = co.beta_array(n, stop).tolist()
        for a, b in zip(alphas, betas):
            # state: (X_n, X_{n+1}); a = alpha_{n+1}, b = beta_n
            c2 = a * c1 + b * c0
            d2 = a * d1 + b * d0
            if n >= threshold and a < 0.0:
                upper_ratio_i1 = -d2 / c2
                r_lo = b / (epsilon - a)
                lower_ratio_i1 = -(d1 - r_lo * d0) / (c1 - r_lo * c0)
                lo = min(lower_ratio_i1, upper_ratio_i1)
                hi = max(lower_ratio_i1, upper_ratio_i1)
                last = (lo, hi)
                if hi - lo <= tol * max(abs(lo), abs(hi)):
                    logger.debug(
                        "I1 converged at order %d after %d rescalings", n + 2, rescale_count
                    )
                    return I1Estimate(upper_ratio_i1, last, n + 2)
            c0, c1, d0, d1 = c1, c2, d1, d2
            n += 1
            if n % rescale_every == 0 or abs(c1) > RESCALE_LIMIT or abs(d1) > RESCALE_LIMIT:
                s = max(abs(c0), abs(c1), abs(d0), abs(d1))
                if not math.isfinite(s):
                    raise RecurrenceOverflowError(n + 1)
                if s > 0.0:
                    c0, c1, d0, d1 = c0 / s, c1 / s, d0 / s, d1 / s
                    rescale_count += 1

    raise ConvergenceError("I1 bracket did not reach the tolerance", n, last)


def refine_i1(
    co: RecurrenceCoeffs,
    precision: Precision,
    start_order: int,
    bracket: tuple[float, float] | None = None,
    max_order: int = MAX_ORDER,
) -> Any:
    """
    Recompute I_1 at extended precision from the C/D convergents.

    Convergents -D_n/C_n are taken from ``start_order`` on until two
    successive ones agree to 2^(8 - bits) relative.

    Returns:
        I_1 as an mpf of the requested precision
    """
    arith = precision.arithmetic()
    terms = co.terms(arith)
    target = arith.num(2) ** (8 - precision.bits)
    c0, c1, d0, d1 = arith.num(0), arith.num(1), arith.num(1), arith.num(0)
    previous = None

    for n in range(max_order):
        a = terms.alpha(n + 1)
        b = terms.beta(n)
        c2 = a * c1 + b * c0
        d2 = a * d1 + b * d0
        if n + 2 >= start_order:
            current = -d2 / c2
            if previous is not None and abs(current - previous) <= target * abs(current):
                _check_containment(current, bracket, n + 2)
                return current
            previous = current
        c0, c1, d0, d1 = c1, c2, d1, d2

    raise ConvergenceError(
        f"I1 convergents did not settle at {precision.bits} bits", max_order, bracket
    )


def _check_containment(value: Any, bracket: tuple[float, float] | None, order: int) -> None:
    if bracket is None:
        return
    lo, hi = bracket
    slack = 1e-12 * max(abs(lo), abs(hi))
    v = float(value)
    if not (lo - slack <= v <= hi + slack):
        logger.warning(
            "Refined I1=%r (order %d) lies outside the double-precision bracket %r",
            v,
            order,
            bracket,
        )


@dataclass
class LadderDiagnostics:
    """What happened while a ladder was built."""

    positivity_failed_at: int | None = None
    precision_bits: int = NATIVE_BITS
    relative_error: float | None = None
    i1_order: int = 0
    escalations: list[dict[str, Any]] = field(default_factory=list)
    converged: bool = True


@dataclass(frozen=True)
class MomentLadder:
    """
    I_0..I_N of one steady state.

    ``values`` holds the working-precision numbers (float or mpf);
    ``i_moments`` is their float view.
    """

    values: tuple[Any, ...]
    i1_bracket: tuple[float, float]
    cutoff_N: int
    epsilon: float
    diagnostics: LadderDiagnostics
    precision_bits: int = NATIVE_BITS

    @property
    def i_moments(self) -> np.ndarray:
        return np.array([float(v) for v in self.values], dtype=np.float64)

    @property
    def i1(self) -> Any:
        return self.values[1]

    @property
    def length(self) -> int:
        """Highest stored order."""
        return len(self.values) - 1

    @property
    def truncated(self) -> bool:
        return self.diagnostics.positivity_failed_at is not None

    @property
    def is_vacuum(self) -> bool:
        return all(v == 0 for v in self.values[1:])

    def arithmetic(self) -> Arithmetic:
        return Precision(self.precision_bits).arithmetic()


def solve_ladder(
    co: RecurrenceCoeffs,
    i1: Any,
    order: int,
    precision: Precision | None = None,
    i1_bracket: tuple[float, float] | None = None,
    epsilon: float = EPSILON,
    i1_order: int = 0,
) -> MomentLadder:
    """
    Run the moment recurrence forward from (I_0 = 1, I_1).

    Positivity is checked at every step; the ladder stops at the last
    nonnegative entry and the failing order is recorded.

    Args:
        co: recurrence coefficients
        i1: I_1, as a float or a working-precision number
        order: last order N to compute
        precision: working precision (native double by default)
        i1_bracket: bracket reported with the ladder
        epsilon: bracket parameter reported with the ladder
        i1_order: order used for the I_1 estimate

    Returns:
        MomentLadder with up to N + 1 entries
    """
    if order < 1:
        raise LadderError(f"ladder order must be at least 1, got {order}")
    precision = precision or Precision()
    arith = precision.arithmetic()
    terms = co.terms(arith)

    i1_num = arith.num(i1)
    values: list[Any] = [arith.num(1), i1_num]
    failed_at: int | None = None
    if i1_num < 0 or not arith.isfinite(i1_num):
        failed_at = 1
        values = values[:1]
    else:
        for n in range(order - 1):
            nxt = terms.alpha(n + 1) * values[n + 1] + terms.beta(n) * values[n]
            if not arith.isfinite(nxt) or nxt < 0:
                failed_at = n + 2
                break
            values.append(nxt)

    if failed_at is not None:
        logger.info(
            "Ladder truncated at order %d of %d (%d bits): forward recurrence lost positivity",
            failed_at - 1,
            order,
            precision.bits,
        )

    bracket = i1_bracket if i1_bracket is not None else (float(i1_num), float(i1_num))
    diagnostics = LadderDiagnostics(
        positivity_failed_at=failed_at,
        precision_bits=precision.bits,
        i1_order=i1_order,
    )
    return MomentLadder(
        values=tuple(values),
        i1_bracket=bracket,
        cutoff_N=order,
        epsilon=epsilon,
        diagnostics=diagnostics,
        precision_bits=precision.bits,
    )


class RatioBounds(NamedTuple):
    lower: float
    upper: float
    valid: bool


def ratio_bounds(co: RecurrenceCoeffs, n: int, epsilon: float = EPSILON) -> RatioBounds:
    """
    Bounds on I_{n+1}/I_n.

    The upper bound beta_n/(-alpha_{n+1}) holds whenever alpha_{n+1} < 0 and
    is infinite otherwise. The lower bound beta_n/(epsilon - alpha_{n+1}) is
    only guaranteed for n >= xi/epsilon; ``valid`` says whether both apply.
    """
    a = co.alpha(n + 1)
    b = co.beta(n)
    upper = b / (-a) if a < 0 else math.inf
    lower = b / (epsilon - a) if epsilon - a > 0 else 0.0
    valid = a < 0 and n >= co.xi / epsilon
    return RatioBounds(lower, upper, valid)


def asymptotic_coeff_series(
    co: RecurrenceCoeffs, n: int, linear_term: str = "compact"
) -> tuple[float, float]:
    """
    Next-to-leading-order forms of alpha_{n+1} and beta_n.

    Args:
        co: recurrence coefficients
        n: order (n >= 1)
        linear_term: "compact" uses 5/2 + 3s/2 inside the kappa^2/4g^2
            bracket, s = (gamma + p)/kappa; "expanded" uses the direct
            expansion 3/2 + 3s/2 + gamma_d/(2 kappa)

    Returns:
        (alpha_nlo, beta_nlo)
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if linear_term not in LINEAR_TERMS:
        raise ValueError(f"linear_term must be one of {LINEAR_TERMS}, got {linear_term!r}")

    q = co.params
    s = q.gamma + q.p
    inv4g2 = 1.0 / (4.0 * q.g**2)
    if linear_term == "compact":
        bracket = 2.5 + 1.5 * s
    else:
        bracket = 1.5 + 1.5 * s + 0.5 * q.gamma_d
    alpha_nlo = -inv4g2 * n * n - (1.0 + inv4g2 * bracket) * n
    beta_nlo = 0.5 * q.p * (n + 2)
    return alpha_nlo, beta_nlo


class CutoffChoice(NamedTuple):
    order: int
    monotone: bool


def _cutoff_holds(co: RecurrenceCoeffs, n: int, epsilon: float) -> bool:
    a = co.alpha(n + 1)
    if not a < epsilon - 1.0:
        return False
    alpha_nlo, beta_nlo = asymptotic_coeff_series(co, n)
    if abs(alpha_nlo - a) >= epsilon * abs(a):
        return False
    b = co.beta(n)
    if b > 0 and abs(beta_nlo - b) >= epsilon * b:
        return False
    return True


def select_cutoff(co: RecurrenceCoeffs, epsilon: float = EPSILON) -> CutoffChoice:
    """
    Smallest order beyond which the asymptotic treatment is trustworthy.

    N satisfies N >= xi/epsilon, the next-to-leading forms of alpha_{N+1}
    and beta_N are within relative epsilon of the exact values, and
    alpha_{N+1} < epsilon - 1 (the two ratio bounds are then within
    relative epsilon of each other).

    Returns:
        CutoffChoice(order, monotone) where ``monotone`` reports epsilon < 1,
        in which case the moments decrease monotonically beyond N
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")

    low = max(1, math.ceil(co.xi / epsilon))
    if _cutoff_holds(co, low, epsilon):
        return CutoffChoice(low, epsilon < 1.0)

    failing, step = low, 1
    while True:
        candidate = low + step
        if _cutoff_holds(co, candidate, epsilon):
            break
        failing = candidate
        step *= 2
        if candidate > MAX_ORDER:
            raise ConvergenceError("no cutoff order satisfies the asymptotic conditions", candidate)

    holding = candidate
    while holding - failing > 1:
        mid = (holding + failing) // 2
        if _cutoff_holds(co, mid, epsilon):
            holding = mid
        else:
            failing = mid
    return CutoffChoice(holding, epsilon < 1.0)


class LargePReference(NamedTuple):
    value: float
    in_regime: bool


def large_p_reference(
    params: SystemParams, n: int, regime_factor: float = 100.0
) -> LargePReference:
    """
    Thermal-limit moment n! (4 g^2 / kappa p)^n for strong pumping.

    The mean photon number is the stimulated rate 2 g^2 / gamma_perp over
    kappa, with the coherence decay gamma_perp -> p / 2.

    Args:
        params: parameter set (p may be infinite)
        n: order
        regime_factor: p must exceed this multiple of every other rate for
            the result to count as in-regime

    Returns:
        LargePReference(value, in_regime)

    Raises:
        ParameterError: p = 0, where the limit is undefined
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if params.p == 0:
        raise ParameterError("p", "must be positive for the large-pumping reference")
    if not params.p > 0:
        raise ParameterError("p", f"must be positive, got {params.p!r}")

    others = (params.gamma, params.kappa, params.g, abs(params.delta))
    validate(SystemParams(params.g, params.kappa, params.gamma, 0.0, params.delta, params.gamma_d))
    in_regime = params.p >= regime_factor * max(others)

    if n == 0:
        return LargePReference(1.0, in_regime)
    if math.isinf(params.p):
        return LargePReference(0.0, True)

    ratio = 4.0 * params.g**2 / (params.kappa * params.p)
    value = math.exp(math.lgamma(n + 1) + n * math.log(ratio))
    return LargePReference(value, in_regime)


def ladder_relative_difference(a: MomentLadder, b: MomentLadder) -> float:
    """Largest entry-wise relative difference over the common orders."""
    worst = 0.0
    for x, y in zip(a.values, b.values):
        scale = max(abs(x), abs(y))
        if scale == 0:
            continue
        worst = max(worst, float(abs(x - y) / scale))
    return worst


def vacuum_ladder(order: int, precision: Precision, epsilon: float = EPSILON) -> MomentLadder:
    arith = precision.arithmetic()
    values = (arith.num(1),) + tuple(arith.num(0) for _ in range(order))
    return MomentLadder(
        values=values,
        i1_bracket=(0.0, 0.0),
        cutoff_N=order,
        epsilon=epsilon,
        diagnostics=LadderDiagnostics(precision_bits=precision.bits, relative_error=0.0),
        precision_bits=precision.bits,
    )


def solve_steady_state(
    params: SystemParams,
    order: int | None = None,
    *,
    epsilon: float = EPSILON,
    tol: float = TOLERANCE,
    precision: Precision | None = None,
    max_bits: int = MAX_BITS,
    ladder_tol: float = 1e-12,
    max_order: int = MAX_ORDER,
) -> MomentLadder:
    """
    Full I_n ladder of one parameter set.

    Pipeline: certified double-precision I_1 bracket, I_1 refinement at the
    working precision, forward ladder with positivity monitoring. The
    working precision doubles until two successive ladders agree within
    ``ladder_tol`` or ``max_bits`` is reached; every attempt is recorded in
    the ladder diagnostics.

    Args:
        params: parameter set (any units)
        order: last order N of the ladder (LADDER_ORDER by default)
        epsilon: bracket parameter
        tol: relative bracket width for I_1
        precision: starting precision (from PRECISION_FLAG by default)
        max_bits: precision ceiling
        ladder_tol: relative agreement required between successive ladders
        max_order: order ceiling for the I_1 iteration

    Returns:
        MomentLadder at the last precision used
    """
    co = coeffs(params)
    precision = precision or Precision.from_flag(PRECISION_FLAG)
    order = LADDER_ORDER if order is None else order
    if order < 2:
        raise LadderError(f"ladder order must be at least 2, got {order}")

    if co.p == 0:
        return vacuum_ladder(order, precision, epsilon)

    estimate = estimate_i1(co, tol=tol, epsilon=epsilon, max_order=max_order)
    logger.info(
        "I1 estimate %.17g, bracket %r, order %d", estimate.value, estimate.bracket, estimate.order
    )

    escalations: list[dict[str, Any]] = []
    previous: MomentLadder | None = None
    current = precision
    while True:
        if current.is_native:
            i1 = estimate.value
        else:
            i1 = refine_i1(
                co,
                current,
                start_order=order + 2,
                bracket=estimate.bracket,
                max_order=max_order,
            )
        ladder = solve_ladder(
            co,
            i1,
            order,
            precision=current,
            i1_bracket=estimate.bracket,
            epsilon=epsilon,
            i1_order=estimate.order,
        )

        difference = None
        if previous is not None and not previous.truncated and not ladder.truncated:
            difference = ladder_relative_difference(previous, ladder)
        escalations.append(
            {
                "bits": current.bits,
                "positivity_failed_at": ladder.diagnostics.positivity_failed_at,
                "relative_difference": difference,
            }
        )

        if difference is not None and difference <= ladder_tol:
            converged = True
            break
        if current.bits * 2 > max_bits:
            converged = False
            logger.warning(
                "Ladder did not settle by %d bits (order %d, last difference %r)",
                current.bits,
                order,
                difference,
            )
            break
        logger.info("Escalating ladder precision %d -> %d bits", current.bits, current.bits * 2)
        previous = ladder
        current = current.doubled()

    ladder.diagnostics.relative_error = difference
    ladder.diagnostics.escalations = escalations
    ladder.diagnostics.converged = converged
    return ladder


def recurrence_residual(ladder: MomentLadder, co: RecurrenceCoeffs) -> float:
    """Largest |I_{n+2} - alpha_{n+1} I_{n+1} - beta_n I_n| relative to its terms."""
    arith = ladder.arithmetic()
    terms = co.terms(arith)
    v = ladder.values
    worst = 0.0
    for n in range(len(v) - 2):
        t1 = terms.alpha(n + 1) * v[n + 1]
        t2 = terms.beta(n) * v[n]
        scale = max(abs(v[n + 2]), abs(t1), abs(t2))
        if scale == 0:
            continue
        worst = max(worst, float(abs(v[n + 2] - t1 - t2) / scale))
    return worst


def bounds_profile(
    co: RecurrenceCoeffs, orders: Sequence[int], epsilon: float = EPSILON
) -> list[dict[str, Any]]:
    """Ratio bounds, next-to-leading ratio and xi/n at each order."""
    rows = []
    for n in orders:
        bounds = ratio_bounds(co, n, epsilon)
        alpha_nlo, beta_nlo = asymptotic_coeff_series(co, n)
        rows.append(
            {
                "n": int(n),
                "lower": bounds.lower,
                "upper": bounds.upper,
                "valid": bounds.valid,
                "nlo_ratio": beta_nlo / (-alpha_nlo),
                "xi_over_n": co.xi / n,
            }
        )
    return rows
