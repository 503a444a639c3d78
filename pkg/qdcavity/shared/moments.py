"""
Emitter and coherence moments from the photon ladder, and derived statistics.

With I_n known, the steady-state equations of motion give the remaining
moments directly (kappa = 1):

    B_n = (p I_n - I_{n+1}) / sigma_n
    R_n = -(I_{n+1} / 2g) (delta / gamma_n + i)

where B_n = <A22 a^+n a^n> and R_n = <A21 a^+n a^{n+1}>.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from .errors import LadderError
from .params import SystemParams, normalize
from .precision import Precision
from .recurrence import LadderDiagnostics, MomentLadder, RecurrenceCoeffs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FullMoments:
    """I_0..I_N together with B_0..B_{N-1} and R_0..R_{N-1}."""

    ladder: MomentLadder
    b_values: tuple[Any, ...]
    r_values: tuple[Any, ...]

    @property
    def i_moments(self) -> np.ndarray:
        return self.ladder.i_moments

    @property
    def b_moments(self) -> np.ndarray:
        return np.array([float(v) for v in self.b_values], dtype=np.float64)

    @property
    def r_moments(self) -> np.ndarray:
        return np.array([complex(v) for v in self.r_values], dtype=np.complex128)

    @property
    def length(self) -> int:
        """Highest order available for B and R."""
        return len(self.b_values) - 1


def back_substitute(ladder: MomentLadder, co: RecurrenceCoeffs) -> FullMoments:
    """
    Recover B_n and R_n from the I_n ladder.

    The last ladder entry only feeds B and R of the order below it, so both
    sequences are one shorter than the ladder.

    Args:
        ladder: photon-moment ladder with N >= 2
        co: coefficients of the same parameter set

    Returns:
        FullMoments
    """
    if ladder.length < 2:
        raise LadderError(
            f"back-substitution needs a ladder up to order 2 or more, got {ladder.length}"
        )

    arith = ladder.arithmetic()
    terms = co.terms(arith)
    q = co.params
    g = arith.num(q.g)
    delta = arith.num(q.delta)
    p = terms.p
    v = ladder.values

    b_values = []
    r_values = []
    for n in range(ladder.length):
        b_values.append((p * v[n] - v[n + 1]) / terms.sigma(n))
        scale = -v[n + 1] / (2 * g)
        r_values.append(arith.complex(scale * delta / terms.gamma_n(n), scale))

    return FullMoments(ladder=ladder, b_values=tuple(b_values), r_values=tuple(r_values))


def g_n_zero(ladder: MomentLadder, n: int) -> float:
    """Normalized n-th order intensity correlation I_n / I_1^n."""
    if n < 1:
        raise ValueError(f"correlation order must be at least 1, got {n}")
    if n > ladder.length:
        raise LadderError(f"g({n})(0) needs I_{n}; ladder ends at order {ladder.length}")
    i1 = ladder.values[1]
    if i1 == 0:
        raise LadderError("vacuum state, correlation undefined")
    return float(ladder.values[n] / i1**n)


def mandel_q(ladder: MomentLadder) -> float:
    """Q = (<(dn)^2> - <n>) / <n> = (I_2 - I_1^2) / I_1."""
    if ladder.length < 2:
        raise LadderError(f"Mandel Q needs I_2; ladder ends at order {ladder.length}")
    i1 = ladder.values[1]
    if i1 == 0:
        raise LadderError("vacuum state, Mandel Q undefined")
    return float((ladder.values[2] - i1 * i1) / i1)


def _reference_ladder(values: list[Any], precision: Precision) -> MomentLadder:
    i1 = float(values[1]) if len(values) > 1 else 0.0
    return MomentLadder(
        values=tuple(values),
        i1_bracket=(i1, i1),
        cutoff_N=len(values) - 1,
        epsilon=0.0,
        diagnostics=LadderDiagnostics(precision_bits=precision.bits),
        precision_bits=precision.bits,
    )


def coherent_ladder(i1: float, order: int, precision: Precision | None = None) -> MomentLadder:
    """Coherent-state moments I_n = I_1^n."""
    precision = precision or Precision()
    arith = precision.arithmetic()
    x = arith.num(i1)
    return _reference_ladder([x**n for n in range(order + 1)], precision)


def thermal_ladder(i1: float, order: int, precision: Precision | None = None) -> MomentLadder:
    """Thermal-state moments I_n = n! I_1^n."""
    precision = precision or Precision()
    arith = precision.arithmetic()
    x = arith.num(i1)
    return _reference_ladder([arith.factorial(n) * x**n for n in range(order + 1)], precision)


class Residuals(NamedTuple):
    intensity: float
    population: float
    coherence: float

    @property
    def worst(self) -> float:
        return max(self.intensity, self.population, self.coherence)


def _relative(residual: Any, *terms: Any) -> float:
    scale = max(abs(t) for t in terms)
    if scale == 0:
        return 0.0
    return float(abs(residual) / scale)


def steady_state_residuals(full: FullMoments, co: RecurrenceCoeffs) -> Residuals:
    """
    Largest relative residual of each steady-state equation of motion.

    The coherence equation is checked where B_{n+1} exists.
    """
    arith = full.ladder.arithmetic()
    terms = co.terms(arith)
    q = co.params
    g = arith.num(q.g)
    delta = arith.num(q.delta)
    i_vals = full.ladder.values
    b_vals = full.b_values
    r_vals = full.r_values
    m = full.length

    intensity = 0.0
    for n in range(1, m + 1):
        t1 = n * i_vals[n]
        t2 = 2 * n * g * r_vals[n - 1].imag
        intensity = max(intensity, _relative(t1 + t2, t1, t2))

    population = 0.0
    for n in range(m + 1):
        t1 = terms.sigma(n) * b_vals[n]
        t2 = terms.p * i_vals[n]
        t3 = 2 * g * r_vals[n].imag
        population = max(population, _relative(-t1 + t2 + t3, t1, t2, t3))

    coherence = 0.0
    ii = arith.complex(0, 1)
    for n in range(m):
        t1 = (ii * delta + terms.gamma_n(n)) * r_vals[n]
        t2 = ii * g * ((n + 1) * b_vals[n] + 2 * b_vals[n + 1] - i_vals[n + 1])
        coherence = max(coherence, _relative(t1 + t2, t1, t2))

    return Residuals(intensity, population, coherence)


def eom_derivatives(
    params: SystemParams,
    i_moments: np.ndarray,
    b_moments: np.ndarray,
    r_moments: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Time derivatives of the truncated moment hierarchy, time in units of 1/kappa.

    All three arrays hold orders 0..M-1; order M is closed to zero.

    Returns:
        (dI/dt, dB/dt, dR/dt)
    """
    q = normalize(params)
    m = len(i_moments)
    n = np.arange(m, dtype=np.float64)
    base = q.gamma + q.p
    sigma = base + n
    gamma_n = (base + 2.0 * n + 1.0) / 2.0 + q.gamma_d / 2.0

    i_next = np.append(i_moments[1:], 0.0)
    b_next = np.append(b_moments[1:], 0.0)
    r_prev_im = np.concatenate(([0.0], r_moments[:-1].imag))

    d_i = -n * i_moments - 2.0 * n * q.g * r_prev_im
    d_b = -sigma * b_moments + q.p * i_moments + 2.0 * q.g * r_moments.imag
    d_r = -(1j * q.delta + gamma_n) * r_moments - 1j * q.g * (
        (n + 1.0) * b_moments + 2.0 * b_next - i_next
    )
    return d_i, d_b, d_r


def summary(full: FullMoments) -> dict[str, float]:
    """Scalar statistics of a steady state (NaN where undefined)."""
    ladder = full.ladder
    stats = {
        "I1": float(ladder.values[1]),
        "B0": float(full.b_values[0]),
        "g2": math.nan,
        "mandel_q": math.nan,
    }
    if ladder.values[1] != 0:
        stats["g2"] = g_n_zero(ladder, 2)
        stats["mandel_q"] = mandel_q(ladder)
    return stats
