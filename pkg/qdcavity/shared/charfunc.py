"""
Normally ordered characteristic function of the intracavity field.

Phi depends on |alpha| only:

    Phi(|alpha|) = sum_n (-1)^n |alpha|^(2n) I_n / (n!)^2

The series alternates with terms far larger than the result, so it is
summed in extended precision with compensated summation, and every value
carries a bound on its truncation and moment error.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, NamedTuple, Sequence

import numpy as np
import pandas as pd

from .errors import PrecisionRangeError
from .params import SystemParams
from .precision import Arithmetic, Precision
from .recurrence import (
    MomentLadder,
    RecurrenceCoeffs,
    coeffs,
    ratio_bounds,
    select_cutoff,
    solve_steady_state,
)
from .settings import EPSILON, MAX_BITS, TOLERANCE

logger = logging.getLogger(__name__)

# Absolute uncertainty allowed on a Phi value
PHI_TOLERANCE = 1e-8
# Envelope considered valid from this value of x^(1/3) on
ENVELOPE_THRESHOLD = 5.0
# Largest ladder built while looking for enough terms
MAX_PROFILE_ORDER = 1024
SUM_BITS = 128
CANCELLATION_WARN = 1e12


class PhiValue(NamedTuple):
    value: float
    tail_bound: float
    n_terms: int


def _sum_arith(ladder: MomentLadder) -> Arithmetic:
    return Precision(max(ladder.precision_bits, SUM_BITS)).arithmetic()


def _ladder_error(ladder: MomentLadder) -> float:
    err = ladder.diagnostics.relative_error
    if err is None:
        return math.ldexp(1.0, 4 - ladder.precision_bits)
    return err


def _terms(ladder: MomentLadder, x: Any, arith: Arithmetic) -> list[Any]:
    """(-1)^n x^n I_n / (n!)^2 for every stored order."""
    out = []
    power = arith.num(1)
    fact = arith.num(1)
    for n, i_n in enumerate(ladder.values):
        if n > 0:
            power *= x
            fact *= n
        term = power * arith.num(i_n) / (fact * fact)
        out.append(-term if n % 2 else term)
    return out


def _tail_ratio(ladder: MomentLadder, co: RecurrenceCoeffs | None, x: float) -> float:
    """Bound on |t_{n+1} / t_n| for every n past the ladder end."""
    last = ladder.length
    if co is not None:
        q = 0.0
        for n in range(last, last + 32):
            upper = ratio_bounds(co, n, ladder.epsilon or EPSILON).upper
            q = max(q, x * upper / (n + 1) ** 2)
        return q
    prev = float(ladder.values[last - 1]) if last >= 1 else 0.0
    if prev == 0:
        return 0.0
    observed = float(ladder.values[last]) / prev
    return x * observed / (last * (last + 1))


def _evaluate(
    ladder: MomentLadder, alpha_abs: float, co: RecurrenceCoeffs | None
) -> tuple[Any, float, float]:
    """Sum, uncertainty bound and largest-term/result ratio."""
    if alpha_abs < 0 or not math.isfinite(alpha_abs):
        raise ValueError(f"|alpha| must be finite and nonnegative, got {alpha_abs!r}")
    arith = _sum_arith(ladder)
    x = arith.num(alpha_abs) ** 2
    terms = _terms(ladder, x, arith)
    total = arith.fsum(terms)

    magnitudes = [abs(t) for t in terms]
    abs_sum = float(arith.fsum(magnitudes))
    last = float(magnitudes[-1])
    if last == 0:
        tail = 0.0
    else:
        q = _tail_ratio(ladder, co, float(x))
        tail = math.inf if q >= 1 else last * q / (1 - q)
    bound = tail + _ladder_error(ladder) * abs_sum

    result = float(total)
    ratio = float(max(magnitudes)) / abs(result) if result != 0 else math.inf
    return total, bound, ratio


def phi_series(
    ladder: MomentLadder,
    alpha_abs: float,
    co: RecurrenceCoeffs | None = None,
    phi_tol: float = PHI_TOLERANCE,
) -> PhiValue:
    """
    Phi at one |alpha| from the stored moments.

    Args:
        ladder: moment ladder
        alpha_abs: |alpha|
        co: coefficients of the ladder's parameter set; when given, the
            rigorous ratio bound controls the truncated tail, otherwise
            the last observed ratio does
        phi_tol: largest acceptable uncertainty

    Returns:
        PhiValue(value, tail_bound, n_terms)

    Raises:
        PrecisionRangeError: the uncertainty exceeds ``phi_tol``
    """
    total, bound, ratio = _evaluate(ladder, alpha_abs, co)
    if ratio > CANCELLATION_WARN:
        logger.info("Phi at |alpha|=%g: largest term / result = %.3g", alpha_abs, ratio)
    if not bound <= phi_tol:
        raise PrecisionRangeError(alpha_abs, max_safe_alpha(ladder, co, phi_tol))
    return PhiValue(float(total), bound, ladder.length + 1)


def max_safe_alpha(
    ladder: MomentLadder,
    co: RecurrenceCoeffs | None = None,
    phi_tol: float = PHI_TOLERANCE,
    alpha_cap: float = 1e4,
) -> float:
    """Largest |alpha| whose Phi uncertainty stays within ``phi_tol``."""
    if ladder.is_vacuum:
        return math.inf

    def ok(a: float) -> bool:
        return _evaluate(ladder, a, co)[1] <= phi_tol

    if not ok(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while ok(hi):
        lo, hi = hi, 2.0 * hi
        if hi > alpha_cap:
            return alpha_cap
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def phi_split(
    ladder: MomentLadder,
    co: RecurrenceCoeffs,
    alpha_abs: float,
    n_split: int,
) -> PhiValue:
    """
    Phi with exact moments up to ``n_split`` and the asymptotic tail beyond.

    Past N the moments follow I_{n+1} = (xi/n) I_n, which turns the tail into

        I_N (N-1)! / xi^N * sum_{n>N} (-1)^n n xi^n |alpha|^(2n) / (n!)^3.

    Args:
        ladder: moment ladder reaching order n_split
        co: coefficients of the same parameter set
        alpha_abs: |alpha|
        n_split: split order N, at least the cutoff order

    Returns:
        PhiValue whose tail_bound is the magnitude of the last tail term kept
    """
    cutoff = select_cutoff(co, ladder.epsilon or EPSILON).order
    if n_split < cutoff:
        raise ValueError(f"split order {n_split} is below the cutoff order {cutoff}")
    if n_split > ladder.length:
        raise ValueError(f"split order {n_split} exceeds the ladder length {ladder.length}")

    arith = _sum_arith(ladder)
    x = arith.num(alpha_abs) ** 2
    head = _terms(ladder, x, arith)[: n_split + 1]
    i_n = arith.num(ladder.values[n_split])
    if i_n == 0 or co.xi == 0:
        return PhiValue(float(arith.fsum(head)), 0.0, n_split + 1)

    xi = arith.num(co.xi)
    y = xi * x
    prefactor = i_n * arith.factorial(n_split - 1) / xi**n_split
    # term(n) = (-1)^n n y^n / (n!)^3, iterated from n = N
    n = n_split
    term = (-1) ** n * n * y**n / arith.factorial(n) ** 3
    tail = []
    cutoff_term = arith.num(2) ** (-arith.bits)
    while True:
        term = -term * y * (n + 1) / (n * (n + 1) ** 3)
        n += 1
        contribution = prefactor * term
        tail.append(contribution)
        past_peak = n**3 > y
        if past_peak and abs(contribution) <= cutoff_term * (1 + abs(head[0])):
            break
    value = arith.fsum(head + tail)
    return PhiValue(float(value), float(abs(tail[-1])), n)


class EnvelopeValue(NamedTuple):
    value: float
    valid: bool


def phi_asymp_envelope(x: float, threshold: float = ENVELOPE_THRESHOLD) -> EnvelopeValue:
    """
    Closed-form asymptotics of sum_n n (-x)^n / (n!)^3, x = |alpha|^2 xi.

        exp(3/2 x^(1/3)) cos(3 sqrt(3)/2 x^(1/3)) / (sqrt(3) pi)

    ``valid`` is set once x^(1/3) reaches ``threshold``.
    """
    if not x > 0:
        raise ValueError(f"x must be positive, got {x!r}")
    t = x ** (1.0 / 3.0)
    value = math.exp(1.5 * t) * math.cos(1.5 * math.sqrt(3.0) * t) / (math.sqrt(3.0) * math.pi)
    return EnvelopeValue(value, t >= threshold)


def envelope_amplitude(x: float) -> float:
    return math.exp(1.5 * x ** (1.0 / 3.0)) / (math.sqrt(3.0) * math.pi)


def three_exponential_identity(xt: float, precision: Precision | None = None) -> Any:
    """(1/3)[2 e^(3t/2) cos(3 sqrt(3) t / 2) + e^(-3t)] - 1 at t = ``xt``."""
    arith = (precision or Precision(256)).arithmetic()
    ctx = arith.ctx
    t = arith.num(xt)
    if ctx is None:
        return (2 * math.exp(1.5 * t) * math.cos(1.5 * math.sqrt(3) * t) + math.exp(-3 * t)) / 3 - 1
    return (2 * ctx.exp(t * 3 / 2) * ctx.cos(3 * ctx.sqrt(3) * t / 2) + ctx.exp(-3 * t)) / 3 - 1


def three_exponential_series(xt: float, precision: Precision | None = None) -> Any:
    """Direct summation of sum_{n>=1} (-3t)^(3n) / (3n)!."""
    arith = (precision or Precision(256)).arithmetic()
    y = -3 * arith.num(xt)
    y3 = y**3
    term = arith.num(1)
    terms = []
    n = 0
    floor = arith.num(2) ** (-arith.bits)
    peak = arith.num(0)
    while True:
        n += 1
        term = term * y3 / ((3 * n) * (3 * n - 1) * (3 * n - 2))
        terms.append(term)
        peak = max(peak, abs(term))
        if 3 * n > abs(y) and abs(term) <= floor * peak:
            break
    return arith.fsum(terms)


def reduced_series(x: float, precision: Precision | None = None) -> Any:
    """sum_{n>=1} n (-x)^n / (n!)^3 summed directly."""
    arith = (precision or Precision(256)).arithmetic()
    xx = arith.num(x)
    base = arith.num(1)  # (-x)^n / (n!)^3
    terms = []
    n = 0
    floor = arith.num(2) ** (-arith.bits)
    peak = arith.num(0)
    while True:
        n += 1
        base = -base * xx / arith.num(n) ** 3
        term = n * base
        terms.append(term)
        peak = max(peak, abs(term))
        if n**3 > xx and abs(term) <= floor * peak:
            break
    return arith.fsum(terms)


@dataclass
class CharFnProfile:
    """Phi sampled over an |alpha| grid."""

    alpha_grid: np.ndarray
    phi: np.ndarray
    tail_bound: np.ndarray
    exceeds_one: np.ndarray
    n_trunc: int
    tail_params: tuple[int, float, float]
    precision_used: int
    envelope: np.ndarray
    phi_split: np.ndarray

    @property
    def xi(self) -> float:
        return self.tail_params[1]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "alpha_abs": self.alpha_grid,
                "phi": self.phi,
                "tail_bound": self.tail_bound,
                "exceeds_one": self.exceeds_one,
                "phi_split": self.phi_split,
                "envelope": self.envelope,
            }
        )


def profile(
    ladder: MomentLadder,
    co: RecurrenceCoeffs,
    alpha_grid: Sequence[float],
    phi_tol: float = PHI_TOLERANCE,
) -> CharFnProfile:
    """
    Phi, its split-sum form and the asymptotic envelope over a grid.

    The split form uses the cutoff order as N when the ladder reaches it;
    its column is NaN otherwise.

    Raises:
        PrecisionRangeError: a grid point lies outside the controllable range
    """
    grid = np.asarray(alpha_grid, dtype=np.float64)
    cutoff = select_cutoff(co, ladder.epsilon or EPSILON).order
    n_split = cutoff if cutoff <= ladder.length else None
    i_split = float(ladder.values[n_split]) if n_split is not None else math.nan

    phi = np.empty(len(grid))
    bounds = np.empty(len(grid))
    split = np.full(len(grid), math.nan)
    envelope = np.full(len(grid), math.nan)
    for k, a in enumerate(grid):
        value = phi_series(ladder, float(a), co, phi_tol)
        phi[k] = value.value
        bounds[k] = value.tail_bound
        if n_split is not None:
            split[k] = phi_split(ladder, co, float(a), n_split).value
        if co.xi > 0 and a > 0:
            envelope[k] = phi_asymp_envelope(float(a) ** 2 * co.xi).value

    exceeds = np.abs(phi) - bounds > 1.0
    return CharFnProfile(
        alpha_grid=grid,
        phi=phi,
        tail_bound=bounds,
        exceeds_one=exceeds,
        n_trunc=ladder.length,
        tail_params=(n_split if n_split is not None else -1, co.xi, i_split),
        precision_used=ladder.precision_bits,
        envelope=envelope,
        phi_split=split,
    )


@dataclass(frozen=True)
class PhiVerdict:
    nonclassical: bool
    max_abs_phi: float
    alpha_at_max: float
    asymptotic: str


def nonclassicality_by_phi(prof: CharFnProfile) -> PhiVerdict:
    """
    |Phi| > 1 anywhere on the grid, beyond the uncertainty of that sample.

    Independently of the grid, the envelope grows like exp(3/2 x^(1/3)),
    so any pumped system (xi > 0) eventually exceeds 1; ``asymptotic``
    reports that, or "inapplicable" for the vacuum.
    """
    magnitudes = np.abs(prof.phi)
    k = int(np.argmax(magnitudes)) if len(magnitudes) else 0
    return PhiVerdict(
        nonclassical=bool(np.any(prof.exceeds_one)),
        max_abs_phi=float(magnitudes[k]) if len(magnitudes) else math.nan,
        alpha_at_max=float(prof.alpha_grid[k]) if len(magnitudes) else math.nan,
        asymptotic="nonclassical" if prof.xi > 0 else "inapplicable",
    )


def profile_ladder_tolerance(precision: Precision) -> float:
    """Ladder agreement needed for Phi at the requested precision."""
    return math.ldexp(1.0, 16 - max(precision.bits, SUM_BITS))


def solve_for_profile(
    params: SystemParams,
    alpha_max: float | None,
    *,
    precision: Precision | None = None,
    epsilon: float = EPSILON,
    tol: float = TOLERANCE,
    max_bits: int = MAX_BITS,
    phi_tol: float = PHI_TOLERANCE,
) -> MomentLadder:
    """
    Ladder long and accurate enough for Phi up to ``alpha_max``.

    The order starts at the cutoff order (at least 40) and doubles until
    ``alpha_max`` is within the controllable range or MAX_PROFILE_ORDER is
    reached. Without ``alpha_max`` the starting ladder is returned.
    """
    precision = precision or Precision(256)
    co = coeffs(params)
    order = max(40, select_cutoff(co, epsilon).order + 2)
    ladder_tol = profile_ladder_tolerance(precision)

    while True:
        ladder = solve_steady_state(
            params,
            order,
            epsilon=epsilon,
            tol=tol,
            precision=precision,
            max_bits=max_bits,
            ladder_tol=ladder_tol,
        )
        if alpha_max is None or ladder.truncated:
            return ladder
        safe = max_safe_alpha(ladder, co, phi_tol)
        if safe >= alpha_max or order * 2 > MAX_PROFILE_ORDER:
            return ladder
        logger.info("Extending ladder to order %d (safe |alpha| so far %g)", 2 * order, safe)
        order *= 2
