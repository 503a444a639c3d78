"""Tests for the characteristic function and its asymptotic forms."""

import math

import numpy as np
import pytest
from scipy import special

from qdcavity.shared.charfunc import (
    envelope_amplitude,
    max_safe_alpha,
    nonclassicality_by_phi,
    phi_asymp_envelope,
    phi_series,
    phi_split,
    profile,
    reduced_series,
    solve_for_profile,
    three_exponential_identity,
    three_exponential_series,
)
from qdcavity.shared.errors import PrecisionRangeError
from qdcavity.shared.moments import coherent_ladder, thermal_ladder
from qdcavity.shared.precision import Precision
from qdcavity.shared.recurrence import coeffs, select_cutoff, solve_steady_state


@pytest.fixture(scope="module")
def profile_ladder_a(set_a):
    return solve_for_profile(set_a, 8.0)


class TestPhiSeries:
    """Tests for direct summation."""

    def test_origin(self, set_a, ladder_a):
        """Test Phi(0) = 1."""
        value = phi_series(ladder_a, 0.0, coeffs(set_a))
        assert value.value == pytest.approx(1.0, abs=1e-12)
        assert value.n_terms == ladder_a.length + 1

    def test_vacuum_is_flat(self, vacuum_params):
        """Test that the vacuum has Phi = 1 everywhere."""
        ladder = solve_steady_state(vacuum_params, 10)
        for a in (0.5, 3.0, 12.0):
            assert phi_series(ladder, a).value == 1.0
        assert max_safe_alpha(ladder) == math.inf

    @pytest.mark.parametrize("alpha_abs", [0.5, 1.0, 2.5, 4.0])
    def test_coherent_state_is_bessel(self, alpha_abs):
        """Test that a coherent ladder gives J0(2 |alpha| sqrt(I1))."""
        ladder = coherent_ladder(0.25, 60, Precision(128))
        value = phi_series(ladder, alpha_abs)
        assert value.value == pytest.approx(special.j0(alpha_abs), abs=1e-10)

    @pytest.mark.parametrize("alpha_abs", [0.5, 2.0, 3.0])
    def test_thermal_state_is_gaussian(self, alpha_abs):
        """Test that a thermal ladder gives exp(-|alpha|^2 I1)."""
        ladder = thermal_ladder(0.3, 80, Precision(128))
        value = phi_series(ladder, alpha_abs)
        assert value.value == pytest.approx(math.exp(-0.3 * alpha_abs**2), abs=1e-10)

    def test_out_of_range(self):
        """Test that an uncontrolled |alpha| raises with the safe limit."""
        ladder = coherent_ladder(0.25, 10)
        safe = max_safe_alpha(ladder)
        assert 0.0 < safe < 20.0
        with pytest.raises(PrecisionRangeError) as exc:
            phi_series(ladder, 20.0)
        assert exc.value.max_safe == pytest.approx(safe)

    def test_negative_alpha(self, ladder_a):
        """Test that |alpha| must be nonnegative."""
        with pytest.raises(ValueError):
            phi_series(ladder_a, -1.0)


class TestAsymptotics:
    """Tests for the closed-form envelope and its identities."""

    @pytest.mark.parametrize("xt", [1.0, 3.0, 7.5, 12.0, 20.0])
    def test_three_exponential_identity(self, xt):
        """Test the closed form against direct summation at 256 bits."""
        closed = three_exponential_identity(xt, Precision(256))
        direct = three_exponential_series(xt, Precision(256))
        assert abs(float(closed - direct)) <= 1e-20 * max(1.0, math.exp(1.5 * xt))

    @pytest.mark.parametrize("t", [6.0, 8.0, 10.0, 12.5, 15.0])
    def test_envelope_matches_series(self, t):
        """Test the envelope against the reduced series for large x."""
        x = t**3
        direct = float(reduced_series(x, Precision(256)))
        approx = phi_asymp_envelope(x)
        assert approx.valid
        assert abs(direct - approx.value) <= 0.05 * envelope_amplitude(x)

    def test_envelope_zero(self):
        """Test the first zero of the cosine factor."""
        t = math.pi / (3.0 * math.sqrt(3.0))
        value = phi_asymp_envelope(t**3)
        assert abs(value.value) < 1e-12 * envelope_amplitude(t**3)
        assert not value.valid

    def test_envelope_domain(self):
        """Test that x must be positive."""
        with pytest.raises(ValueError):
            phi_asymp_envelope(0.0)


class TestPhiSplit:
    """Tests for the split-sum form."""

    def test_split_matches_series(self, set_a):
        """Test that the split sum reproduces direct summation."""
        co = coeffs(set_a)
        n_split = max(select_cutoff(co).order, 20)
        ladder = solve_steady_state(set_a, n_split + 10, precision=Precision(256))
        for a in (1.0, 2.5, 4.0):
            split = phi_split(ladder, co, a, n_split)
            direct = phi_series(ladder, a, co)
            assert split.value == pytest.approx(direct.value, abs=1e-10)

    def test_split_order_limits(self, set_a, ladder_a):
        """Test the lower and upper limits of the split order."""
        co = coeffs(set_a)
        with pytest.raises(ValueError, match="below the cutoff"):
            phi_split(ladder_a, co, 1.0, 0)
        with pytest.raises(ValueError, match="exceeds the ladder"):
            phi_split(ladder_a, co, 1.0, ladder_a.length + 1)


class TestProfile:
    """Tests for Phi profiles and the nonclassicality verdict."""

    def test_set_a_dips_below_minus_one(self, set_a, profile_ladder_a):
        """Test that set A has Phi < -1 inside its controllable range."""
        co = coeffs(set_a)
        grid = [a for a in (5.75, 6.5, 7.25) if a <= max_safe_alpha(profile_ladder_a, co)]
        assert grid
        prof = profile(profile_ladder_a, co, grid)
        assert np.all(prof.phi < -1.0)
        verdict = nonclassicality_by_phi(prof)
        assert verdict.nonclassical
        assert verdict.asymptotic == "nonclassical"
        assert verdict.alpha_at_max in grid

    def test_set_b_stays_bounded(self, set_b):
        """Test that set B keeps |Phi| <= 1 for |alpha|^2 xi up to 60."""
        co = coeffs(set_b)
        ladder = solve_for_profile(set_b, math.sqrt(60.0 / co.xi))
        top = min(math.sqrt(60.0 / co.xi), max_safe_alpha(ladder, co))
        prof = profile(ladder, co, np.linspace(0.0, top, 25))
        assert np.all(prof.phi >= -0.25)
        assert np.all(prof.phi <= 1.0 + 1e-8)
        assert not nonclassicality_by_phi(prof).nonclassical

    def test_frame_columns(self, set_a, profile_ladder_a):
        """Test the tabular form of a profile."""
        prof = profile(profile_ladder_a, coeffs(set_a), [0.0, 1.0, 2.0])
        frame = prof.to_frame()
        assert list(frame.columns) == [
            "alpha_abs",
            "phi",
            "tail_bound",
            "exceeds_one",
            "phi_split",
            "envelope",
        ]
        assert math.isnan(frame["envelope"].iloc[0])
        assert frame["phi"].iloc[0] == pytest.approx(1.0)

    def test_vacuum_verdict(self, vacuum_params):
        """Test that the vacuum is never flagged."""
        co = coeffs(vacuum_params)
        prof = profile(solve_steady_state(vacuum_params, 10), co, [0.0, 2.0, 4.0])
        verdict = nonclassicality_by_phi(prof)
        assert not verdict.nonclassical
        assert verdict.asymptotic == "inapplicable"
