"""
Brute-force reference solutions on a truncated Fock space.

The master equation is written as a dense generator acting on the
row-major vectorized density matrix, vec(A rho B) = (A kron B^T) vec(rho).
Its steady state is the null vector fixed by an appended trace row. The
steady state only populates the excitation-balanced block (bra and ket with
the same number of excitations), so by default only that block is built;
the full generator is kept for benchmarking the naive dense solve.

Everything runs in units of kappa.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
import pandas as pd
from scipy import integrate, linalg

from .errors import OracleError
from .moments import FullMoments, eom_derivatives
from .params import SystemParams, normalize, validate
from .precision import NATIVE_BITS, Arithmetic, Precision
from .recurrence import LadderDiagnostics, MomentLadder, coeffs, estimate_i1
from .settings import MAX_BENCH_ORDER, MAX_FOCK_CUTOFF, ORACLE_BITS

logger = logging.getLogger(__name__)

SECTORS = ("balanced", "full")
RESIDUAL_TOLERANCE = 1e-10
PSD_TOLERANCE = 1e-10
BIAS_TOLERANCE = 1e-6
BIAS_ATOL = 1e-12
# Extra photons used to estimate the truncation bias
BIAS_EXTRA_PHOTONS = 10


def _check_params(params: SystemParams) -> SystemParams:
    """Validate, allowing g = 0 (uncoupled emitter and cavity)."""
    if params.g == 0:
        validate(replace(params, g=1.0))
        return params
    return validate(params)


def _operators(n_ph: int) -> dict[str, np.ndarray]:
    """Field and emitter operators on C^2 (ground, excited) x C^(n_ph+1)."""
    nf = n_ph + 1
    a_field = np.diag(np.sqrt(np.arange(1, nf, dtype=np.float64)), k=1).astype(np.complex128)
    lower = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=np.complex128)
    excited = np.diag([0.0, 1.0]).astype(np.complex128)
    eye_tls = np.eye(2, dtype=np.complex128)
    eye_field = np.eye(nf, dtype=np.complex128)

    a = np.kron(eye_tls, a_field)
    a12 = np.kron(lower, eye_field)
    return {
        "a": a,
        "adag": a.conj().T,
        "A12": a12,
        "A21": a12.conj().T,
        "A22": np.kron(excited, eye_field),
        "eye": np.eye(2 * nf, dtype=np.complex128),
    }


def _excitations(n_ph: int) -> np.ndarray:
    nf = n_ph + 1
    k = np.arange(2 * nf)
    return k // nf + k % nf


Sparse = dict[tuple[int, int], Any]


def _sparse_operators(n_ph: int, arith: Arithmetic) -> dict[str, Sparse]:
    """The operators of ``_operators`` as {(row, col): value} in one arithmetic."""
    nf = n_ph + 1
    one = arith.num(1)
    a: Sparse = {}
    for tls in (0, 1):
        for m in range(1, nf):
            a[(tls * nf + m - 1, tls * nf + m)] = arith.sqrt(arith.num(m))
    a12: Sparse = {(m, nf + m): one for m in range(nf)}
    return {
        "a": a,
        "adag": {(j, i): v for (i, j), v in a.items()},
        "A12": a12,
        "A21": {(j, i): v for (i, j), v in a12.items()},
        "A22": {(nf + m, nf + m): one for m in range(nf)},
        "eye": {(k, k): one for k in range(2 * nf)},
    }


def _sparse_matmul(x: Sparse, y: Sparse) -> Sparse:
    by_row: dict[int, list[tuple[int, Any]]] = {}
    for (j, k), v in y.items():
        by_row.setdefault(j, []).append((k, v))
    out: Sparse = {}
    for (i, j), u in x.items():
        for k, v in by_row.get(j, ()):
            out[(i, k)] = out.get((i, k), 0) + u * v
    return out


def _sparse_axpy(out: Sparse, scale: Any, x: Sparse) -> None:
    for key, v in x.items():
        out[key] = out.get(key, 0) + scale * v


def _balanced_order(n_ph: int) -> tuple[np.ndarray, np.ndarray]:
    """Balanced (ket, bra) pairs sorted by excitation number, so the generator is banded."""
    exc = _excitations(n_ph)
    rows, cols = np.nonzero(exc[:, None] == exc[None, :])
    order = np.argsort(exc[rows], kind="stable")
    return rows[order], cols[order]


def _exact_generator(
    q: SystemParams, n_ph: int, arith: Arithmetic
) -> tuple[Sparse, np.ndarray, np.ndarray]:
    """Balanced-block generator as sparse entries at the working precision."""
    ops = _sparse_operators(n_ph, arith)
    num = arith.num
    minus_i = arith.complex(0, -1)

    hamiltonian: Sparse = {}
    _sparse_axpy(hamiltonian, num(q.delta), _sparse_matmul(ops["adag"], ops["a"]))
    _sparse_axpy(hamiltonian, num(q.g), _sparse_matmul(ops["A21"], ops["a"]))
    _sparse_axpy(hamiltonian, num(q.g), _sparse_matmul(ops["adag"], ops["A12"]))
    channels = [
        (num(q.gamma), ops["A12"], ops["A21"]),
        (num(q.p), ops["A21"], ops["A12"]),
        (num(q.kappa), ops["a"], ops["adag"]),
        (num(q.gamma_d), ops["A22"], ops["A22"]),
    ]
    h_eff: Sparse = dict(hamiltonian)
    for rate, x, xdag in channels:
        if rate:
            _sparse_axpy(h_eff, minus_i * rate / 2, _sparse_matmul(xdag, x))

    rows, cols = _balanced_order(n_ph)
    position = {(int(r), int(c)): k for k, (r, c) in enumerate(zip(rows, cols))}
    entries: Sparse = {}

    def sandwich(scale: Any, left: Sparse, right: Sparse) -> None:
        # rho -> scale * left @ rho @ right on the balanced entries
        for (r, r2), u in left.items():
            for (c2, c), v in right.items():
                i = position.get((r, c))
                j = position.get((r2, c2))
                if i is not None and j is not None:
                    entries[(i, j)] = entries.get((i, j), 0) + scale * u * v

    h_eff_dag = {(j, i): arith.complex(v.real, -v.imag) for (i, j), v in h_eff.items()}
    sandwich(minus_i, h_eff, ops["eye"])
    sandwich(-minus_i, ops["eye"], h_eff_dag)
    for rate, x, xdag in channels:
        if rate:
            sandwich(rate, x, xdag)
    return entries, rows, cols


@dataclass
class FockLiouvillian:
    """
    Dense generator of the truncated master equation.

    ``rows``/``cols`` are the (ket, bra) indices of every vectorized
    entry the generator acts on, in order. Above double precision the
    balanced block is also kept as sparse ``entries`` at that precision and
    ``generator`` is their complex cast.
    """

    params: SystemParams
    n_ph: int
    sector: str
    generator: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    precision: Precision = field(default_factory=Precision)
    entries: Sparse | None = None

    @property
    def dim(self) -> int:
        return 2 * (self.n_ph + 1)

    @property
    def trace_row(self) -> np.ndarray:
        return (self.rows == self.cols).astype(np.complex128)


def build_liouvillian(
    params: SystemParams,
    n_ph: int,
    sector: str = "balanced",
    precision: Precision | None = None,
) -> FockLiouvillian:
    """
    Assemble the generator.

    Hamiltonian (rotating at the emitter frequency):
        H = delta a^+ a + g (A21 a + a^+ A12)
    Dissipators (rate/2) L_X, L_X(rho) = 2 X rho X^+ - X^+X rho - rho X^+X:
        gamma on A12, p on A21, kappa on a, gamma_d on A22.

    Args:
        params: parameter set (g = 0 allowed)
        n_ph: photon-number cutoff
        sector: "balanced" or "full"
        precision: working precision; above double only the balanced
            sector is available

    Returns:
        FockLiouvillian
    """
    precision = precision or Precision()
    if n_ph < 2:
        raise OracleError(f"photon cutoff must be at least 2, got {n_ph}")
    if sector not in SECTORS:
        raise ValueError(f"sector must be one of {SECTORS}, got {sector!r}")
    if sector != "balanced" and not precision.is_native:
        raise ValueError("extended precision is only available for the balanced sector")
    _check_params(params)
    # normalize rejects g = 0, so scale through a stand-in coupling
    q = replace(normalize(replace(params, g=1.0)), g=params.g / params.kappa)

    if not precision.is_native:
        entries, rows, cols = _exact_generator(q, n_ph, precision.arithmetic())
        generator = np.zeros((len(rows), len(rows)), dtype=np.complex128)
        for (i, j), v in entries.items():
            generator[i, j] = complex(v)
        return FockLiouvillian(
            params=q,
            n_ph=n_ph,
            sector=sector,
            generator=generator,
            rows=rows,
            cols=cols,
            precision=precision,
            entries=entries,
        )

    ops = _operators(n_ph)
    dim = 2 * (n_ph + 1)
    a, adag = ops["a"], ops["adag"]
    hamiltonian = q.delta * (adag @ a) + q.g * (ops["A21"] @ a + adag @ ops["A12"])
    channels = [
        (q.gamma, ops["A12"]),
        (q.p, ops["A21"]),
        (q.kappa, a),
        (q.gamma_d, ops["A22"]),
    ]

    h_eff = hamiltonian.copy()
    for rate, x in channels:
        h_eff -= 0.5j * rate * (x.conj().T @ x)

    if sector == "full":
        rows, cols = np.divmod(np.arange(dim * dim), dim)
    else:
        exc = _excitations(n_ph)
        rows, cols = np.nonzero(exc[:, None] == exc[None, :])

    def sandwich(left: np.ndarray, right: np.ndarray) -> np.ndarray:
        # rho -> left @ rho @ right, restricted to the chosen entries
        if sector == "full":
            return np.kron(left, right.T)
        return left[np.ix_(rows, rows)] * right[np.ix_(cols, cols)].T

    eye = ops["eye"]
    generator = sandwich(-1j * h_eff, eye)
    generator += sandwich(eye, 1j * h_eff.conj().T)
    for rate, x in channels:
        if rate:
            generator += rate * sandwich(x, x.conj().T)

    return FockLiouvillian(
        params=q, n_ph=n_ph, sector=sector, generator=generator, rows=rows, cols=cols
    )


def trace_residual(liouvillian: FockLiouvillian) -> float:
    """max |Tr[L(.)]| over the basis: zero for a trace-preserving generator."""
    return float(np.max(np.abs(liouvillian.trace_row @ liouvillian.generator)))


@dataclass
class SteadyState:
    """Steady-state density matrix of one truncated problem."""

    rho: np.ndarray
    n_ph: int
    params: SystemParams
    residual: float
    min_eigenvalue: float
    # working-precision entries of the balanced block, when solved above double
    entries: Sparse | None = None
    precision_bits: int = NATIVE_BITS



def _banded_null_vector(entries: Sparse, size: int, arith: Arithmetic) -> list[Any]:
    """
    Null vector of a banded generator with x_0 = 1.

    Equation 0 is a population row, hence implied by the others through
    trace preservation; it is dropped, x_0 is fixed, and the rest is solved
    by banded Gaussian elimination with partial pivoting.
    """
    n = size - 1
    zero = arith.num(0)
    matrix = [[zero] * n for _ in range(n)]
    rhs = [zero] * n
    lower = upper = 0
    scale = zero
    for (i, j), v in entries.items():
        scale = max(scale, abs(v))
        if i == 0:
            continue
        if j == 0:
            rhs[i - 1] -= v
            continue
        matrix[i - 1][j - 1] = v
        lower = max(lower, i - j)
        upper = max(upper, j - i)

    tiny = arith.num(2) ** (16 - arith.bits) * scale
    width = lower + upper
    for k in range(n):
        last_row = min(n - 1, k + lower)
        pivot_row = max(range(k, last_row + 1), key=lambda r: abs(matrix[r][k]))
        if abs(matrix[pivot_row][k]) <= tiny:
            raise OracleError(f"steady state is not unique: vanishing pivot at column {k + 1}")
        matrix[k], matrix[pivot_row] = matrix[pivot_row], matrix[k]
        rhs[k], rhs[pivot_row] = rhs[pivot_row], rhs[k]
        row_k = matrix[k]
        pivot = row_k[k]
        last_col = min(n - 1, k + width)
        for r in range(k + 1, last_row + 1):
            factor = matrix[r][k] / pivot
            if factor == 0:
                continue
            row_r = matrix[r]
            for c in range(k, last_col + 1):
                row_r[c] -= factor * row_k[c]
            rhs[r] -= factor * rhs[k]

    x = [zero] * n
    for k in range(n - 1, -1, -1):
        acc = rhs[k]
        for c in range(k + 1, min(n - 1, k + width) + 1):
            acc -= matrix[k][c] * x[c]
        x[k] = acc / matrix[k][k]
    return [arith.num(1)] + x


def _exact_steady_state(liouvillian: FockLiouvillian) -> SteadyState:
    arith = liouvillian.precision.arithmetic()
    rows, cols = liouvillian.rows, liouvillian.cols
    x = _banded_null_vector(liouvillian.entries, len(rows), arith)
    trace = arith.fsum(v for v, r, c in zip(x, rows, cols) if r == c)
    x = [v / trace for v in x]

    products: dict[int, list[Any]] = {}
    for (i, j), v in liouvillian.entries.items():
        products.setdefault(i, []).append(v * x[j])
    worst = max(abs(arith.fsum(terms)) for terms in products.values())
    scale = max(abs(v) for v in liouvillian.entries.values())
    residual = float(worst / max(arith.num(1), scale))
    if residual > RESIDUAL_TOLERANCE:
        raise OracleError(f"steady-state residual {residual:.3g} exceeds {RESIDUAL_TOLERANCE:g}")

    dim = liouvillian.dim
    rho = np.zeros((dim, dim), dtype=np.complex128)
    rho[rows, cols] = [complex(v) for v in x]
    rho = 0.5 * (rho + rho.conj().T)
    min_eig = float(np.min(linalg.eigvalsh(rho)))
    if min_eig < -PSD_TOLERANCE:
        raise OracleError(f"steady state is not positive semidefinite (eigenvalue {min_eig:.3g})")

    return SteadyState(
        rho=rho,
        n_ph=liouvillian.n_ph,
        params=liouvillian.params,
        residual=residual,
        min_eigenvalue=min_eig,
        entries={(int(r), int(c)): v for v, r, c in zip(x, rows, cols)},
        precision_bits=arith.bits,
    )


def steady_state(liouvillian: FockLiouvillian, refine_steps: int = 1) -> SteadyState:
    """
    Null vector of the generator with unit trace.

    Solved as the least-squares problem [L; trace] x = [0; 1] with the
    rank-revealing QR driver, followed by iterative refinement.

    Raises:
        OracleError: degenerate null space, relative residual above 1e-10, or a
            density matrix that is not positive semidefinite
    """
    if liouvillian.entries is not None:
        return _exact_steady_state(liouvillian)
    m = liouvillian.generator
    size = m.shape[1]
    system = np.vstack([m, liouvillian.trace_row[None, :]])
    rhs = np.zeros(size + 1, dtype=np.complex128)
    rhs[-1] = 1.0

    x, _, rank, _ = linalg.lstsq(system, rhs, lapack_driver="gelsy")
    if rank < size:
        raise OracleError(
            f"steady state is not unique: constrained generator has rank {rank} < {size}"
        )
    for _ in range(refine_steps):
        correction, _, _, _ = linalg.lstsq(system, rhs - system @ x, lapack_driver="gelsy")
        x = x + correction

    dim = liouvillian.dim
    rho = np.zeros((dim, dim), dtype=np.complex128)
    rho[liouvillian.rows, liouvillian.cols] = x
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real

    vec = rho[liouvillian.rows, liouvillian.cols]
    # relative to the largest rate in the generator
    residual = float(np.max(np.abs(m @ vec)) / max(1.0, np.max(np.abs(m))))
    if residual > RESIDUAL_TOLERANCE:
        raise OracleError(f"steady-state residual {residual:.3g} exceeds {RESIDUAL_TOLERANCE:g}")
    min_eig = float(np.min(linalg.eigvalsh(rho)))
    if min_eig < -PSD_TOLERANCE:
        raise OracleError(f"steady state is not positive semidefinite (eigenvalue {min_eig:.3g})")

    return SteadyState(
        rho=rho,
        n_ph=liouvillian.n_ph,
        params=liouvillian.params,
        residual=residual,
        min_eigenvalue=min_eig,
    )


def extract_moments(state: SteadyState, max_n: int) -> FullMoments:
    """
    I_0..I_{max_n+1}, B_0..B_{max_n} and R_0..R_{max_n} by operator products.

    Raises:
        OracleError: max_n > n_ph - 2
    """
    if max_n > state.n_ph - 2:
        raise OracleError(
            f"moments up to order {max_n} need a photon cutoff of at least {max_n + 2}, "
            f"got {state.n_ph}"
        )
    if state.entries is not None:
        return _exact_moments(state, max_n)
    ops = _operators(state.n_ph)
    rho = state.rho
    a, adag = ops["a"], ops["adag"]

    i_values: list[float] = []
    b_values: list[float] = []
    r_values: list[complex] = []
    normal = ops["eye"]  # a^+n a^n
    for n in range(max_n + 2):
        if n > 0:
            normal = adag @ normal @ a
        i_values.append(float(np.trace(rho @ normal).real))
        if n <= max_n:
            b_values.append(float(np.trace(rho @ ops["A22"] @ normal).real))
            r_values.append(complex(np.trace(rho @ ops["A21"] @ normal @ a)))

    ladder = MomentLadder(
        values=tuple(i_values),
        i1_bracket=(i_values[1], i_values[1]),
        cutoff_N=state.n_ph,
        epsilon=0.0,
        diagnostics=LadderDiagnostics(),
    )
    return FullMoments(ladder=ladder, b_values=tuple(b_values), r_values=tuple(r_values))



def _exact_moments(state: SteadyState, max_n: int) -> FullMoments:
    """Normally ordered moments summed from the working-precision entries."""
    arith = Precision(state.precision_bits).arithmetic()
    nf = state.n_ph + 1
    entries = state.entries
    zero = arith.num(0)
    excited = [entries.get((nf + m, nf + m), zero).real for m in range(nf)]
    photons = [entries.get((m, m), zero).real + excited[m] for m in range(nf)]
    # <g, m| rho |e, m-1>
    coherence = [zero] + [entries.get((m, nf + m - 1), zero) for m in range(1, nf)]

    i_values = []
    b_values = []
    r_values = []
    for n in range(max_n + 2):
        i_values.append(arith.fsum(math.perm(m, n) * photons[m] for m in range(n, nf)))
        if n <= max_n:
            b_values.append(arith.fsum(math.perm(m, n) * excited[m] for m in range(n, nf)))
            r_values.append(
                arith.fsum(
                    arith.sqrt(arith.num(math.perm(m, n + 1) * math.perm(m - 1, n))) * coherence[m]
                    for m in range(n + 1, nf)
                )
            )

    ladder = MomentLadder(
        values=tuple(float(v) for v in i_values),
        i1_bracket=(float(i_values[1]), float(i_values[1])),
        cutoff_N=state.n_ph,
        epsilon=0.0,
        diagnostics=LadderDiagnostics(),
    )
    return FullMoments(
        ladder=ladder,
        b_values=tuple(float(v) for v in b_values),
        r_values=tuple(complex(v) for v in r_values),
    )


def populations(state: SteadyState) -> tuple[float, float]:
    """(<A11>, <A22>) of the emitter."""
    ops = _operators(state.n_ph)
    excited = float(np.trace(state.rho @ ops["A22"]).real)
    ground = float(np.trace(state.rho @ (ops["eye"] - ops["A22"])).real)
    return ground, excited


def off_diagonal_moments(state: SteadyState, max_order: int) -> float:
    """Largest |<a^+k a^l>| with k != l, k, l <= max_order."""
    ops = _operators(state.n_ph)
    a, adag = ops["a"], ops["adag"]
    worst = 0.0
    for k in range(max_order + 1):
        left = np.linalg.matrix_power(adag, k)
        for l in range(max_order + 1):
            if k == l:
                continue
            value = np.trace(state.rho @ left @ np.linalg.matrix_power(a, l))
            worst = max(worst, float(abs(value)))
    return worst


def _moment_vector(full: FullMoments, max_n: int) -> np.ndarray:
    """I_1..I_max_n, B_0..B_{max_n-2} and |R_0|..|R_{max_n-3}|, the compared set."""
    return np.concatenate(
        [
            full.i_moments[1 : max_n + 1],
            full.b_moments[: max(max_n - 1, 1)],
            np.abs(full.r_moments[: max(max_n - 2, 1)]),
        ]
    )


def _relative_change(a: np.ndarray, b: np.ndarray, atol: float = BIAS_ATOL) -> float:
    """Largest relative difference, ignoring entries that differ by at most ``atol``."""
    diff = np.abs(a - b)
    scale = np.maximum(np.abs(a), np.abs(b))
    mask = (scale > 0) & (diff > atol)
    if not np.any(mask):
        return 0.0
    return float(np.max(diff[mask] / scale[mask]))


@dataclass
class OracleMoments:
    moments: FullMoments
    n_ph: int
    bias: float
    state: SteadyState


def oracle_moments(
    params: SystemParams,
    n_ph: int = 40,
    max_n: int = 5,
    sector: str = "balanced",
    bias_tol: float = BIAS_TOLERANCE,
    precision: Precision | None = None,
) -> OracleMoments:
    """
    Reference moments with a truncation-bias estimate.

    The problem is solved at n_ph and at n_ph + 10; the largest relative
    change of I_1..I_max_n, B_0..B_{max_n-2} and |R_0|..|R_{max_n-3}|
    (differences up to 1e-12 ignored) is the bias. The balanced sector is
    solved at ``ORACLE_BITS`` unless ``precision`` says otherwise; the full
    sector always runs in double.

    Raises:
        OracleError: the bias exceeds ``bias_tol``
    """
    if precision is None:
        precision = Precision(ORACLE_BITS) if sector == "balanced" else Precision()
    state = steady_state(build_liouvillian(params, n_ph, sector, precision))
    full = extract_moments(state, max_n)
    wider = steady_state(build_liouvillian(params, n_ph + BIAS_EXTRA_PHOTONS, sector, precision))
    wider_full = extract_moments(wider, max_n)

    bias = _relative_change(_moment_vector(full, max_n), _moment_vector(wider_full, max_n))
    logger.info("Oracle at n_ph=%d (%d bits): truncation bias %.3g", n_ph, precision.bits, bias)
    if bias > bias_tol:
        raise OracleError(
            f"truncation bias {bias:.3g} at n_ph={n_ph} exceeds {bias_tol:g}; "
            "increase the photon cutoff"
        )
    return OracleMoments(moments=wider_full, n_ph=n_ph + BIAS_EXTRA_PHOTONS, bias=bias, state=wider)


@dataclass
class Trajectory:
    """Moment hierarchy over time (time in units of 1/kappa)."""

    t: np.ndarray
    i_moments: np.ndarray
    b_moments: np.ndarray
    r_moments: np.ndarray
    converged: bool
    message: str

    def final(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.i_moments[-1], self.b_moments[-1], self.r_moments[-1]


def integrate_eom(
    params: SystemParams,
    t_end: float,
    dt_control: float | None = None,
    max_n: int = 20,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    n_samples: int = 201,
    settle_tol: float = 1e-8,
) -> Trajectory:
    """
    Integrate the moment equations from the vacuum with an adaptive RK45.

    The hierarchy is closed by I = B = R = 0 at order ``max_n``.

    Args:
        params: parameter set
        t_end: final time in the units of ``params`` (seconds for SI rates)
        dt_control: largest allowed step in the same units (unbounded if None)
        max_n: closure order
        rtol: relative tolerance of the integrator
        atol: absolute tolerance of the integrator
        n_samples: stored time points
        settle_tol: largest |d/dt| accepted as steady at t_end

    Returns:
        Trajectory; ``converged`` is False when the derivatives have not
        settled by t_end

    Raises:
        OracleError: the integrator failed (e.g. step size underflow)
    """
    validate(params)
    if max_n < 2:
        raise ValueError(f"closure order must be at least 2, got {max_n}")
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end!r}")
    tau_end = t_end * params.kappa
    max_step = math.inf if dt_control is None else dt_control * params.kappa
    m = max_n

    def unpack(y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return y[:m], y[m : 2 * m], y[2 * m : 3 * m] + 1j * y[3 * m :]

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        i, b, r = unpack(y)
        d_i, d_b, d_r = eom_derivatives(params, i, b, r)
        return np.concatenate([d_i, d_b, d_r.real, d_r.imag])

    y0 = np.zeros(4 * m)
    y0[0] = 1.0
    t_eval = np.linspace(0.0, tau_end, n_samples)
    solution = integrate.solve_ivp(
        rhs,
        (0.0, tau_end),
        y0,
        method="RK45",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
        max_step=max_step,
    )
    if solution.status == -1:
        raise OracleError(f"moment integration failed: {solution.message}")

    ys = solution.y.T
    i_traj = ys[:, :m]
    b_traj = ys[:, m : 2 * m]
    r_traj = ys[:, 2 * m : 3 * m] + 1j * ys[:, 3 * m :]
    drift = float(np.max(np.abs(rhs(tau_end, ys[-1]))))
    converged = drift <= settle_tol
    if not converged:
        logger.warning("Moments still drifting at t_end (max |d/dt| = %.3g)", drift)

    return Trajectory(
        t=solution.t / params.kappa,
        i_moments=i_traj,
        b_moments=b_traj,
        r_moments=r_traj,
        converged=converged,
        message=solution.message,
    )


def cross_check(reference: FullMoments, oracle: FullMoments, max_n: int) -> pd.DataFrame:
    """
    Side-by-side moments with their relative differences.

    Compares I_1..I_max_n, B_0..B_{max_n-2} and |R_0|..|R_{max_n-3}|.
    """
    rows = []

    def add(quantity: str, order: int, rec: float, ora: float) -> None:
        scale = max(abs(rec), abs(ora))
        rel = abs(rec - ora) / scale if scale > 0 else 0.0
        rows.append(
            {
                "quantity": quantity,
                "order": order,
                "recurrence": rec,
                "oracle": ora,
                "rel_error": rel,
            }
        )

    for n in range(1, max_n + 1):
        add("I", n, float(reference.ladder.values[n]), float(oracle.ladder.values[n]))
    for n in range(max_n - 1):
        add("B", n, float(reference.b_values[n]), float(oracle.b_values[n]))
    for n in range(max_n - 2):
        add("|R|", n, float(abs(reference.r_values[n])), float(abs(oracle.r_values[n])))
    return pd.DataFrame(rows, columns=["quantity", "order", "recurrence", "oracle", "rel_error"])


def _time_ns(func: Any, repeats: int) -> int:
    best = None
    for _ in range(repeats):
        start = time.perf_counter_ns()
        func()
        elapsed = time.perf_counter_ns() - start
        best = elapsed if best is None else min(best, elapsed)
    return int(best)


def fitted_slope(sizes: Sequence[float], wall_ns: Sequence[float]) -> float:
    """Slope of log(time) against log(size)."""
    if len(sizes) < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(sizes), np.log(wall_ns), 1)
    return float(slope)


BENCH_COLUMNS = ["solver", "size", "order", "wall_ns", "fitted_slope"]


def benchmark(
    params: SystemParams,
    recurrence_sizes: Sequence[int],
    fock_sizes: Sequence[int],
    repeats: int = 1,
    max_order: int = MAX_BENCH_ORDER,
    max_fock: int = MAX_FOCK_CUTOFF,
) -> pd.DataFrame:
    """
    Wall time of the recurrence solve against the dense Liouvillian solve.

    The recurrence is timed as the C/D sweep that fixes I_1 at truncation
    order N, the only part of the method whose cost grows with N; the
    ladder that follows has a fixed length. The order the sweep actually
    stopped at is reported in ``order``. The Liouvillian is timed as the
    full dense generator's assembly and null-space solve at cutoff n_ph.
    Sizes above the caps are skipped with a warning.

    Returns:
        DataFrame with BENCH_COLUMNS; fitted_slope repeats per solver
    """
    if len(recurrence_sizes) == 0 and len(fock_sizes) == 0:
        raise ValueError("benchmark needs at least one size")
    validate(params)
    co = coeffs(params)
    rows: list[dict[str, Any]] = []

    timed: list[tuple[int, int, int]] = []
    for n in recurrence_sizes:
        if n > max_order:
            logger.warning("Skipping recurrence size %d (cap %d)", n, max_order)
            continue
        reached: list[int] = []

        def run_recurrence(n: int = n, reached: list[int] = reached) -> None:
            # any finite bracket is accepted so the sweep stops at order n
            estimate = estimate_i1(co, tol=1.0, min_order=n - 2, max_order=n + 1000)
            reached.append(estimate.order)

        wall = _time_ns(run_recurrence, repeats)
        if reached[-1] != n:
            logger.warning("Recurrence size %d ran to order %d (xi/epsilon floor)", n, reached[-1])
        timed.append((n, reached[-1], wall))
        logger.info("recurrence N=%d: %d ns", n, wall)
    slope = fitted_slope([o for _, o, _ in timed], [w for _, _, w in timed])
    rows.extend(
        {"solver": "recurrence", "size": s, "order": o, "wall_ns": w, "fitted_slope": slope}
        for s, o, w in timed
    )

    timed = []
    for n_ph in fock_sizes:
        if n_ph > max_fock:
            logger.warning("Skipping Liouvillian cutoff %d (cap %d)", n_ph, max_fock)
            continue

        def run_dense(n_ph: int = n_ph) -> None:
            steady_state(build_liouvillian(params, n_ph, "full"), refine_steps=0)

        wall = _time_ns(run_dense, repeats)
        timed.append((n_ph, n_ph, wall))
        logger.info("liouvillian n_ph=%d: %d ns", n_ph, wall)
    slope = fitted_slope([s for s, _, _ in timed], [w for _, _, w in timed])
    rows.extend(
        {"solver": "liouvillian", "size": s, "order": o, "wall_ns": w, "fitted_slope": slope}
        for s, o, w in timed
    )

    return pd.DataFrame(rows, columns=BENCH_COLUMNS)


def trajectory_moments(trajectory: Trajectory) -> FullMoments:
    """Moments at the last time point, in the FullMoments layout."""
    i_final, b_final, r_final = trajectory.final()
    i1 = float(i_final[1])
    ladder = MomentLadder(
        values=tuple(float(v) for v in i_final),
        i1_bracket=(i1, i1),
        cutoff_N=len(i_final) - 1,
        epsilon=0.0,
        diagnostics=LadderDiagnostics(converged=trajectory.converged),
    )
    return FullMoments(
        ladder=ladder,
        b_values=tuple(float(v) for v in b_final[:-1]),
        r_values=tuple(complex(v) for v in r_final[:-1]),
    )
