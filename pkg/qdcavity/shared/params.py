"""
Physical parameters of one quantum-dot / cavity instance.

Rates are angular frequencies in s^-1. ``normalize`` maps any valid set onto
units of the cavity loss rate, which is the form every solver works in.
"""

import logging
import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError, ParameterError

logger = logging.getLogger(__name__)

UNITS = ("si", "kappa")
RATE_FIELDS = ("g", "kappa", "gamma", "p", "delta", "gamma_d")
REQUIRED_FIELDS = ("g", "gamma", "p")
PRESET_NAMES = ("setA", "setB")


@dataclass(frozen=True)
class SystemParams:
    """
    Rates defining one emitter-cavity system.

    Attributes:
        g: emitter-field coupling strength
        kappa: cavity loss rate
        gamma: spontaneous emission rate of the emitter
        p: incoherent pump strength
        delta: detuning between cavity and emitter (may be negative)
        gamma_d: pure dephasing rate
    """

    g: float
    kappa: float
    gamma: float
    p: float
    delta: float = 0.0
    gamma_d: float = 0.0

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    def with_pump(self, p: float) -> "SystemParams":
        return replace(self, p=float(p))


def validate(params: SystemParams) -> SystemParams:
    """
    Check every invariant of a parameter set.

    Args:
        params: raw parameter set

    Returns:
        The same parameter set, unchanged

    Raises:
        ParameterError: naming the first offending field
    """
    for name in RATE_FIELDS:
        value = getattr(params, name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParameterError(name, f"must be a real number, got {value!r}")
        if not math.isfinite(value):
            raise ParameterError(name, f"must be finite, got {value!r}")

    for name in ("kappa", "g", "gamma"):
        value = getattr(params, name)
        if value == 0:
            raise ParameterError(name, "must be nonzero")
        if value < 0:
            raise ParameterError(name, f"must be positive, got {value!r}")

    for name in ("p", "gamma_d"):
        value = getattr(params, name)
        if value < 0:
            raise ParameterError(name, f"must be nonnegative, got {value!r}")

    return params


def normalize(params: SystemParams) -> SystemParams:
    """Express every rate in units of kappa (kappa becomes exactly 1)."""
    validate(params)
    k = params.kappa
    return SystemParams(
        g=params.g / k,
        kappa=1.0,
        gamma=params.gamma / k,
        p=params.p / k,
        delta=params.delta / k,
        gamma_d=params.gamma_d / k,
    )


def from_mapping(values: Mapping[str, Any], units: str = "si") -> SystemParams:
    """
    Build a validated parameter set from a key/value mapping.

    Args:
        values: keys from g, kappa, gamma, p, delta, gamma_d (optionally units)
        units: "si" (s^-1) or "kappa" (rates relative to kappa) when the
            mapping carries no units key of its own

    Returns:
        Validated SystemParams in the given units

    Raises:
        ConfigError: unknown key, missing key, bad units or non-numeric value
        ParameterError: a value violates a parameter invariant
    """
    data = dict(values)
    units = data.pop("units", units)
    if units not in UNITS:
        raise ConfigError("units", f"must be one of {list(UNITS)}, got {units!r}")

    for key in data:
        if key not in RATE_FIELDS:
            raise ConfigError(key, "unknown key")
    for key, value in data.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"must be a number, got {value!r}")

    required = REQUIRED_FIELDS if units == "kappa" else REQUIRED_FIELDS + ("kappa",)
    for key in required:
        if key not in data:
            raise ConfigError(key, "is required")

    if units == "kappa":
        if data.get("kappa", 1.0) != 1.0:
            raise ConfigError("kappa", "must be 1 (or omitted) when units = 'kappa'")
        data["kappa"] = 1.0

    params = SystemParams(**{key: float(value) for key, value in data.items()})
    return validate(params)


def load_config(path: str | Path, units: str = "si") -> SystemParams:
    """
    Load a TOML parameter file.

    Args:
        path: file path
        units: units assumed when the file has no ``units`` key

    Returns:
        Validated SystemParams
    """
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as e:
        raise ConfigError("config", f"file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError("config", f"malformed TOML in {path}: {e}") from e

    logger.info("Loaded parameters from %s", path)
    return from_mapping(data, units=units)


def load_preset(name: str) -> SystemParams:
    """Load one of the shipped presets (setA, setB)."""
    if name not in PRESET_NAMES:
        raise ConfigError("preset", f"must be one of {list(PRESET_NAMES)}, got {name!r}")
    source = resources.files("qdcavity.presets").joinpath(f"{name}.toml")
    data = tomllib.loads(source.read_text(encoding="utf-8"))
    return from_mapping(data)


def apply_overrides(
    params: SystemParams | None,
    overrides: Mapping[str, float | None],
    units: str = "si",
) -> SystemParams:
    """
    Apply per-field overrides on top of a base parameter set.

    Override values are read in ``units``; in kappa units they are scaled by
    the base kappa so the result stays in the base's units. Without a base,
    the overrides alone must form a complete parameter set.
    """
    given = {key: value for key, value in overrides.items() if value is not None}
    for key in given:
        if key not in RATE_FIELDS:
            raise ConfigError(key, "unknown key")

    if params is None:
        return from_mapping(given, units=units)
    if not given:
        return params

    if units not in UNITS:
        raise ConfigError("units", f"must be one of {list(UNITS)}, got {units!r}")
    if units == "kappa":
        if "kappa" in given:
            raise ConfigError("kappa", "cannot be overridden in kappa units")
        given = {key: value * params.kappa for key, value in given.items()}

    return validate(replace(params, **{key: float(value) for key, value in given.items()}))


def xi(params: SystemParams) -> float:
    """Asymptotic ratio constant 2 g^2 p / kappa^3."""
    return 2.0 * params.g**2 * params.p / params.kappa**3
