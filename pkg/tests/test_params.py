"""Tests for parameter validation, normalization, loading and environment settings."""

import importlib
import logging

import pytest

from qdcavity.shared.errors import ConfigError, ParameterError
from qdcavity.shared.params import (
    SystemParams,
    apply_overrides,
    from_mapping,
    load_config,
    load_preset,
    normalize,
    validate,
    xi,
)
from qdcavity.shared import settings
from qdcavity.shared.precision import Precision


class TestValidate:
    """Tests for parameter invariants."""

    @pytest.mark.parametrize("name", ["g", "kappa", "gamma"])
    def test_zero_rate_rejected(self, name):
        """Test that a zero coupling or loss rate names the field."""
        values = dict(g=1.0, kappa=1.0, gamma=1.0, p=1.0)
        values[name] = 0.0
        with pytest.raises(ParameterError) as exc:
            validate(SystemParams(**values))
        assert exc.value.field == name

    @pytest.mark.parametrize("name", ["p", "gamma_d"])
    def test_negative_rate_rejected(self, name):
        """Test that negative pump or dephasing is rejected."""
        values = dict(g=1.0, kappa=1.0, gamma=1.0, p=1.0)
        values[name] = -0.5
        with pytest.raises(ParameterError) as exc:
            validate(SystemParams(**values))
        assert exc.value.field == name

    def test_non_finite_rejected(self):
        """Test that NaN and infinity are rejected."""
        with pytest.raises(ParameterError, match="finite"):
            validate(SystemParams(g=float("nan"), kappa=1.0, gamma=1.0, p=1.0))
        with pytest.raises(ParameterError, match="finite"):
            validate(SystemParams(g=1.0, kappa=1.0, gamma=1.0, p=float("inf")))

    def test_negative_detuning_allowed(self):
        """Test that the detuning may have either sign."""
        params = SystemParams(g=1.0, kappa=1.0, gamma=1.0, p=1.0, delta=-2.0)
        assert validate(params) is params

    def test_zero_pump_allowed(self, vacuum_params):
        """Test that p = 0 is a valid parameter set."""
        assert validate(vacuum_params).p == 0.0


class TestNormalize:
    """Tests for kappa normalization."""

    def test_kappa_becomes_one(self, set_a):
        """Test that every rate is divided by kappa."""
        q = normalize(set_a)
        assert q.kappa == 1.0
        assert q.g == pytest.approx(122 / 276)
        assert q.gamma == pytest.approx(113 / 276)
        assert q.p == pytest.approx(100 / 276)

    def test_normalize_is_idempotent(self, set_b):
        """Test that normalizing twice changes nothing."""
        once = normalize(set_b)
        assert normalize(once) == once

    def test_xi_of_normalized_presets(self, set_a, set_b):
        """Test the asymptotic ratio constant of both presets."""
        assert xi(normalize(set_a)) == pytest.approx(0.1416, rel=1e-3)
        assert xi(normalize(set_b)) == pytest.approx(7.854, rel=1e-3)
        assert xi(set_a) == pytest.approx(xi(normalize(set_a)))


class TestFromMapping:
    """Tests for mapping and TOML loading."""

    def test_unknown_key_named(self):
        """Test that an unknown key is rejected by name."""
        with pytest.raises(ConfigError) as exc:
            from_mapping({"g": 1, "kappa": 1, "gamma": 1, "p": 1, "omega": 3})
        assert exc.value.key == "omega"

    def test_missing_key_named(self):
        """Test that a missing required key is reported."""
        with pytest.raises(ConfigError) as exc:
            from_mapping({"g": 1, "kappa": 1, "gamma": 1})
        assert exc.value.key == "p"

    def test_kappa_units_fill_kappa(self):
        """Test that kappa units imply kappa = 1."""
        params = from_mapping({"g": 2, "gamma": 1, "p": 0.5}, units="kappa")
        assert params.kappa == 1.0
        assert params.g == 2.0

    def test_kappa_units_reject_other_kappa(self):
        """Test that kappa != 1 is inconsistent with kappa units."""
        with pytest.raises(ConfigError, match="kappa"):
            from_mapping({"g": 2, "kappa": 3, "gamma": 1, "p": 0.5}, units="kappa")

    def test_bad_units(self):
        """Test that unknown units are rejected."""
        with pytest.raises(ConfigError) as exc:
            from_mapping({"units": "ev", "g": 1, "kappa": 1, "gamma": 1, "p": 1})
        assert exc.value.key == "units"

    def test_load_config_file(self, tmp_path):
        """Test that a TOML file round-trips into SystemParams."""
        path = tmp_path / "params.toml"
        path.write_text('units = "kappa"\ng = 1.5\ngamma = 0.5\np = 2.0\ndelta = -0.3\n')
        params = load_config(path)
        assert params == SystemParams(g=1.5, kappa=1.0, gamma=0.5, p=2.0, delta=-0.3)

    def test_load_config_missing_file(self, tmp_path):
        """Test that a missing file raises ConfigError."""
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.toml")

    def test_load_config_malformed(self, tmp_path):
        """Test that malformed TOML raises ConfigError."""
        path = tmp_path / "bad.toml"
        path.write_text("g = = 1\n")
        with pytest.raises(ConfigError, match="malformed"):
            load_config(path)


class TestPresets:
    """Tests for the shipped presets."""

    def test_presets_load(self, set_a, set_b):
        """Test that both presets carry their reference rates."""
        assert set_a.g == pytest.approx(122e9)
        assert set_b.kappa == pytest.approx(213e9)
        assert set_a.p == set_b.p == pytest.approx(1e11)

    def test_unknown_preset(self):
        """Test that an unknown preset name is rejected."""
        with pytest.raises(ConfigError) as exc:
            load_preset("setC")
        assert exc.value.key == "preset"


class TestOverrides:
    """Tests for per-field overrides."""

    def test_si_override(self, set_a):
        """Test that an SI override replaces the field."""
        params = apply_overrides(set_a, {"p": 2e11})
        assert params.p == 2e11
        assert params.g == set_a.g

    def test_kappa_override_scales(self, set_a):
        """Test that kappa-unit overrides are scaled by the base kappa."""
        params = apply_overrides(set_a, {"p": 2.0}, units="kappa")
        assert params.p == pytest.approx(2.0 * set_a.kappa)

    def test_no_base_needs_complete_set(self):
        """Test that overrides alone must form a full set."""
        params = apply_overrides(None, {"g": 1.0, "gamma": 1.0, "p": 1.0}, units="kappa")
        assert params.kappa == 1.0
        with pytest.raises(ConfigError):
            apply_overrides(None, {"g": 1.0}, units="si")

    def test_invalid_override_value(self, set_a):
        """Test that an override breaking an invariant is rejected."""
        with pytest.raises(ParameterError):
            apply_overrides(set_a, {"gamma": -1.0})


class TestPrecision:
    """Tests for precision flags."""

    def test_flags(self):
        """Test the flag to bits mapping."""
        assert Precision.from_flag(64).is_native
        assert Precision.from_flag(128).bits == 128
        assert Precision.from_flag(256).bits == 256

    def test_unknown_flag(self):
        """Test that an unsupported flag is rejected."""
        with pytest.raises(ValueError, match="Unsupported precision"):
            Precision.from_flag(32)

    def test_contexts_are_private(self):
        """Test that two arithmetics do not share mpmath precision."""
        a = Precision(128).arithmetic()
        b = Precision(256).arithmetic()
        assert a.ctx.prec == 128
        assert b.ctx.prec == 256


class TestSettings:
    """Tests for environment defaults."""

    def test_unset_keeps_default(self, monkeypatch):
        """Test that a missing variable gives the default."""
        monkeypatch.delenv("QDCAVITY_WORKERS", raising=False)
        assert settings.env("WORKERS", 4, int) == 4

    def test_valid_value(self, monkeypatch):
        """Test that a well-formed variable is cast."""
        monkeypatch.setenv("QDCAVITY_EPS", "0.25")
        assert settings.env("EPS", 0.1, float) == 0.25

    def test_malformed_value_falls_back(self, monkeypatch, caplog):
        """Test that a malformed variable is logged and replaced by the default."""
        monkeypatch.setenv("QDCAVITY_PRECISION", "high")
        with caplog.at_level(logging.WARNING, logger="qdcavity.shared.settings"):
            assert settings.env("PRECISION", 64, int) == 64
        assert "QDCAVITY_PRECISION" in caplog.text

    def test_import_survives_malformed_environment(self, monkeypatch):
        """Test that the settings module loads with malformed numbers in the environment."""
        monkeypatch.setenv("QDCAVITY_TOL", "tight")
        monkeypatch.setenv("QDCAVITY_WORKERS", "4.5")
        try:
            reloaded = importlib.reload(settings)
            assert reloaded.TOLERANCE == 1e-10
            assert reloaded.WORKERS == 4
        finally:
            monkeypatch.undo()
            importlib.reload(settings)
