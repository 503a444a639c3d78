"""Tests for the truncated-Fock reference solver, the moment ODEs and the benchmark."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qdcavity.shared.errors import OracleError
from qdcavity.shared.moments import back_substitute
from qdcavity.shared.oracle import (
    BENCH_COLUMNS,
    _moment_vector,
    _relative_change,
    benchmark,
    build_liouvillian,
    cross_check,
    extract_moments,
    fitted_slope,
    integrate_eom,
    off_diagonal_moments,
    oracle_moments,
    populations,
    steady_state,
    trace_residual,
    trajectory_moments,
)
from qdcavity.shared.params import SystemParams, normalize
from qdcavity.shared.precision import Precision
from qdcavity.shared.recurrence import coeffs, solve_steady_state
from qdcavity.shared.settings import ORACLE_BITS


def _recurrence(params, order=40):
    return back_substitute(solve_steady_state(params, order), coeffs(params))


class TestLiouvillian:
    """Tests for generator assembly."""

    @pytest.mark.parametrize("sector", ["balanced", "full"])
    def test_trace_preserving(self, set_b, sector):
        """Test that every column of the generator has zero trace."""
        assert trace_residual(build_liouvillian(set_b, 6, sector)) < 1e-12

    def test_balanced_sector_size(self, set_a):
        """Test that the balanced sector holds the excitation-diagonal pairs only."""
        full = build_liouvillian(set_a, 5, "full")
        balanced = build_liouvillian(set_a, 5, "balanced")
        assert full.generator.shape == (144, 144)
        assert balanced.generator.shape[0] == 4 * 5 + 2
        assert balanced.dim == full.dim == 12

    def test_sectors_agree(self, set_a):
        """Test that both sectors give the same steady-state moments."""
        a = extract_moments(steady_state(build_liouvillian(set_a, 10, "balanced")), 3)
        b = extract_moments(steady_state(build_liouvillian(set_a, 10, "full")), 3)
        assert_allclose(a.i_moments, b.i_moments, rtol=1e-8, atol=1e-14)
        assert_allclose(a.b_moments, b.b_moments, rtol=1e-8, atol=1e-14)

    def test_bad_arguments(self, set_a):
        """Test the cutoff and sector checks."""
        with pytest.raises(OracleError):
            build_liouvillian(set_a, 1)
        with pytest.raises(ValueError):
            build_liouvillian(set_a, 5, "diagonal")

    def test_extended_precision_block(self, set_b):
        """Test that the extended-precision block is banded, trace preserving and complete."""
        liouvillian = build_liouvillian(set_b, 6, precision=Precision(128))
        assert liouvillian.generator.shape == (4 * 6 + 2, 4 * 6 + 2)
        assert trace_residual(liouvillian) < 1e-12
        rows, cols = zip(*liouvillian.entries)
        assert max(abs(i - j) for i, j in zip(rows, cols)) < 12
        excitation = [r // 7 + r % 7 for r in liouvillian.rows]
        assert excitation == sorted(excitation)

    def test_extended_precision_balanced_only(self, set_a):
        """Test that extended precision refuses the full sector."""
        with pytest.raises(ValueError, match="balanced"):
            build_liouvillian(set_a, 5, "full", precision=Precision(128))


class TestSteadyState:
    """Tests for the null-space solve."""

    def test_density_matrix(self, set_b):
        """Test unit trace, hermiticity and positivity."""
        state = steady_state(build_liouvillian(set_b, 12))
        assert np.trace(state.rho).real == pytest.approx(1.0)
        assert_allclose(state.rho, state.rho.conj().T)
        assert state.min_eigenvalue > -1e-10
        assert state.residual <= 1e-10

    def test_populations(self, set_b):
        """Test that the emitter populations sum to one and match B_0."""
        state = steady_state(build_liouvillian(set_b, 12))
        ground, excited = populations(state)
        assert ground + excited == pytest.approx(1.0)
        assert excited == pytest.approx(extract_moments(state, 2).b_moments[0])

    def test_no_off_diagonal_moments(self, set_a):
        """Test that <a^+k a^l> vanishes for k != l."""
        state = steady_state(build_liouvillian(set_a, 8, "full"))
        assert off_diagonal_moments(state, 3) < 1e-10

    def test_uncoupled_emitter(self):
        """Test that g = 0 leaves the cavity empty and the emitter pumped."""
        params = SystemParams(g=0.0, kappa=1.0, gamma=1.0, p=0.5)
        state = steady_state(build_liouvillian(params, 6))
        moments = extract_moments(state, 2)
        assert moments.i_moments[1] == pytest.approx(0.0, abs=1e-14)
        assert moments.b_moments[0] == pytest.approx(0.5 / 1.5)

    def test_unpumped_vacuum(self, vacuum_params):
        """Test that p = 0 relaxes to the joint ground state."""
        state = steady_state(build_liouvillian(vacuum_params, 6))
        assert state.rho[0, 0].real == pytest.approx(1.0)
        moments = extract_moments(state, 2)
        assert_allclose(moments.i_moments[1:], 0.0, atol=1e-14)
        assert_allclose(moments.b_moments, 0.0, atol=1e-14)

    def test_moment_order_limit(self, set_a):
        """Test that moments too close to the cutoff are refused."""
        state = steady_state(build_liouvillian(set_a, 6))
        with pytest.raises(OracleError, match="photon cutoff"):
            extract_moments(state, 5)

    @pytest.mark.parametrize("preset", ["set_a", "set_b"])
    def test_extended_precision_matches_double(self, preset, request):
        """Test that the banded extended-precision solve reproduces the double solve."""
        params = request.getfixturevalue(preset)
        double = steady_state(build_liouvillian(params, 10))
        exact = steady_state(build_liouvillian(params, 10, precision=Precision(128)))
        assert exact.precision_bits == 128
        assert exact.residual <= 1e-10
        assert np.trace(exact.rho).real == pytest.approx(1.0)
        a = extract_moments(double, 4)
        b = extract_moments(exact, 4)
        assert_allclose(b.i_moments, a.i_moments, rtol=1e-8, atol=1e-14)
        assert_allclose(b.b_moments, a.b_moments, rtol=1e-8, atol=1e-14)
        assert_allclose(np.abs(b.r_moments), np.abs(a.r_moments), rtol=1e-8, atol=1e-14)

    def test_extended_precision_uncoupled(self):
        """Test the g = 0 steady state on the extended-precision path."""
        params = SystemParams(g=0.0, kappa=1.0, gamma=1.0, p=0.5)
        state = steady_state(build_liouvillian(params, 6, precision=Precision(128)))
        moments = extract_moments(state, 2)
        assert moments.i_moments[1] == pytest.approx(0.0, abs=1e-14)
        assert moments.b_moments[0] == pytest.approx(0.5 / 1.5)


class TestAgreement:
    """Tests for recurrence against Liouvillian agreement."""

    @pytest.mark.parametrize("preset", ["set_a", "set_b", "unit_params"])
    def test_moments_agree(self, preset, request):
        """Test I_1..I_6, B_0..B_4 and R_0..R_3 against the recurrence."""
        params = request.getfixturevalue(preset)
        reference = _recurrence(params)
        oracle = oracle_moments(params, n_ph=40, max_n=6)
        assert oracle.bias <= 1e-6
        got = oracle.moments
        assert_allclose(got.i_moments[1:7], reference.i_moments[1:7], rtol=1e-6, atol=1e-12)
        assert_allclose(got.b_moments[:5], reference.b_moments[:5], rtol=1e-6, atol=1e-12)
        assert_allclose(
            np.abs(got.r_moments[:4]), np.abs(reference.r_moments[:4]), rtol=1e-6, atol=1e-12
        )

    def test_detuned_and_dephased(self, kappa_units):
        """Test agreement away from resonance with pure dephasing."""
        params = kappa_units(g=0.8, gamma=0.5, p=0.4, delta=1.3, gamma_d=0.7)
        reference = _recurrence(params)
        got = oracle_moments(params, n_ph=30, max_n=4).moments
        assert_allclose(got.i_moments[1:5], reference.i_moments[1:5], rtol=1e-6, atol=1e-12)
        assert_allclose(got.r_moments[:3], reference.r_moments[:3], rtol=1e-6, atol=1e-12)

    def test_bad_cavity_thermal_limit(self):
        """Test thermal statistics when the cavity barely leaks."""
        params = SystemParams(g=1.0, kappa=1e-6, gamma=1.0, p=0.2)
        moments = oracle_moments(params, n_ph=40, max_n=3).moments
        i = moments.i_moments
        assert i[1] == pytest.approx(0.25, rel=0.05)
        assert i[2] / i[1] ** 2 == pytest.approx(2.0, rel=0.05)
        assert i[3] / i[1] ** 3 == pytest.approx(6.0, rel=0.05)

    def test_truncation_bias_detected(self, kappa_units):
        """Test that a cutoff far too small is rejected."""
        with pytest.raises(OracleError, match="truncation bias"):
            oracle_moments(kappa_units(g=2.0, p=5.0), n_ph=4, max_n=2)

    def test_cross_check_layout(self, set_a):
        """Test the comparison table."""
        reference = _recurrence(set_a)
        oracle = oracle_moments(set_a, n_ph=30, max_n=6).moments
        frame = cross_check(reference, oracle, 5)
        assert list(frame.columns) == ["quantity", "order", "recurrence", "oracle", "rel_error"]
        assert frame["quantity"].tolist() == ["I"] * 5 + ["B"] * 4 + ["|R|"] * 3
        assert frame["rel_error"].max() <= 1e-6

    def test_bias_ignores_vanishing_moments(self):
        """Test that differences at the 1e-12 level do not count as truncation bias."""
        a = np.array([0.5, 1e-13, 0.0])
        b = np.array([0.5, 3e-13, 0.0])
        assert _relative_change(a, b) == 0.0
        assert _relative_change(a, b, atol=0.0) == pytest.approx(2.0 / 3.0)

    def test_bias_covers_compared_set(self, set_a):
        """Test that the bias only looks at I_1..I_n, B_0..B_{n-2} and |R_0|..|R_{n-3}|."""
        moments = oracle_moments(set_a, n_ph=30, max_n=5).moments
        assert len(_moment_vector(moments, 5)) == 5 + 4 + 3

    @pytest.mark.parametrize("preset", ["set_a", "set_b"])
    def test_default_oracle_passes_bias_check(self, preset, request):
        """Test that the default oracle settles the presets within the bias tolerance."""
        oracle = oracle_moments(request.getfixturevalue(preset))
        assert oracle.bias <= 1e-6
        assert oracle.n_ph == 50
        assert oracle.state.precision_bits == ORACLE_BITS

    @pytest.mark.slow
    @pytest.mark.parametrize("pump", [1e10, 1e11, 1e12])
    @pytest.mark.parametrize("preset", ["set_a", "set_b"])
    def test_preset_pump_grid(self, preset, pump, request):
        """Test recurrence and Liouvillian agreement at n_ph = 40 across the preset pump grid."""
        params = request.getfixturevalue(preset).with_pump(pump)
        reference = _recurrence(params)
        oracle = oracle_moments(params, n_ph=40, max_n=5)
        frame = cross_check(reference, oracle.moments, 5)
        assert frame["quantity"].tolist() == ["I"] * 5 + ["B"] * 4 + ["|R|"] * 3
        assert frame["rel_error"].max() <= 1e-6


class TestMomentEquations:
    """Tests for direct integration of the moment hierarchy."""

    @pytest.mark.slow
    def test_relaxes_to_recurrence(self, set_a):
        """Test that the long-time limit matches the recurrence."""
        params = normalize(set_a)
        trajectory = integrate_eom(params, 50.0 / params.gamma, max_n=24, rtol=1e-10, atol=1e-15)
        assert trajectory.converged
        frame = cross_check(_recurrence(params), trajectory_moments(trajectory), 5)
        assert frame["rel_error"].max() <= 1e-6

    def test_starts_in_vacuum(self):
        """Test the initial condition and the time axis units."""
        params = SystemParams(g=2.0, kappa=2.0, gamma=2.0, p=1.0)
        trajectory = integrate_eom(params, 1.0, max_n=8, n_samples=11)
        assert trajectory.i_moments[0, 0] == 1.0
        assert trajectory.i_moments[0, 1] == 0.0
        assert trajectory.t[-1] == pytest.approx(1.0)
        assert len(trajectory.t) == 11

    def test_short_run_not_converged(self, kappa_units):
        """Test that an early stop is reported as unsettled."""
        trajectory = integrate_eom(kappa_units(), 0.1, max_n=8)
        assert not trajectory.converged

    def test_bad_arguments(self, unit_params):
        """Test closure order and end time validation."""
        with pytest.raises(ValueError):
            integrate_eom(unit_params, 1.0, max_n=1)
        with pytest.raises(ValueError):
            integrate_eom(unit_params, 0.0)

    def test_trajectory_moments_layout(self, kappa_units):
        """Test that the final state drops the closed order of B and R."""
        trajectory = integrate_eom(kappa_units(), 5.0, max_n=8)
        full = trajectory_moments(trajectory)
        assert full.ladder.length == 7
        assert full.length == 6


class TestBenchmark:
    """Tests for the solver benchmark."""

    def test_small_run(self, set_b):
        """Test one row per size and a slope per solver."""
        frame = benchmark(set_b, [100, 200], [3, 4])
        assert list(frame.columns) == BENCH_COLUMNS
        assert frame["order"].tolist() == [100, 200, 3, 4]
        assert frame["solver"].tolist() == ["recurrence"] * 2 + ["liouvillian"] * 2
        assert (frame["wall_ns"] > 0).all()
        assert frame.groupby("solver")["fitted_slope"].nunique().max() == 1

    def test_caps_skip_sizes(self, set_b):
        """Test that sizes above the caps are skipped."""
        frame = benchmark(set_b, [100], [3, 40], max_fock=35)
        assert frame[frame["solver"] == "liouvillian"]["size"].tolist() == [3]
        assert math.isnan(frame["fitted_slope"].iloc[0])

    def test_needs_sizes(self, set_b):
        """Test that an empty benchmark is rejected."""
        with pytest.raises(ValueError):
            benchmark(set_b, [], [])

    def test_fitted_slope(self):
        """Test the log-log fit."""
        sizes = [10, 100, 1000]
        assert fitted_slope(sizes, [s**2 for s in sizes]) == pytest.approx(2.0)
        assert math.isnan(fitted_slope([10], [5]))

    def test_recurrence_runs_to_requested_order(self, set_a, set_b):
        """Test that every timed recurrence run reaches exactly the requested order."""
        for params in (set_a, set_b):
            frame = benchmark(params, [500, 2000, 8000], [])
            assert frame["order"].tolist() == frame["size"].tolist() == [500, 2000, 8000]

    @pytest.mark.slow
    def test_scaling_slopes(self, set_b):
        """Test a linear recurrence and a steep dense-solve scaling."""
        frame = benchmark(set_b, [10_000, 100_000, 1_000_000], [10, 20, 30])
        slopes = frame.groupby("solver")["fitted_slope"].first()
        assert slopes["recurrence"] == pytest.approx(1.0, abs=0.3)
        assert slopes["liouvillian"] >= 4.0
        million = frame[(frame["solver"] == "recurrence") & (frame["size"] == 1_000_000)]
        assert million["wall_ns"].iloc[0] < 10e9
