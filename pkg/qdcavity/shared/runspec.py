"""
Run descriptions shared by every handler.

A handler event is a plain dict. Keys that are absent fall back to the
QDCAVITY_* environment settings, so a flag given on the command line
always wins over the environment, which wins over the built-in default.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import ConfigError
from .params import (
    RATE_FIELDS,
    SystemParams,
    UNITS as UNIT_CHOICES,
    apply_overrides,
    load_config,
    load_preset,
)
from .precision import FLAG_BITS, Precision
from .settings import EPSILON, OUTPUT_FORMAT, PRECISION_FLAG, TOLERANCE, UNITS, WORKERS
from .table_utils import FORMATS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunSpec:
    """Everything one command needs; identical specs give identical output."""

    command: str
    params: SystemParams | None
    units: str
    epsilon: float
    tol: float
    precision: Precision
    precision_flag: int
    out: str | None
    fmt: str
    workers: int
    source: str
    options: dict[str, Any] = field(default_factory=dict)

    def metadata(self, **extra: Any) -> dict[str, Any]:
        """Header block for output files: the run settings plus ``extra``."""
        meta: dict[str, Any] = {
            "command": self.command,
            "source": self.source,
            "units": self.units,
            "epsilon": self.epsilon,
            "tol": self.tol,
            "precision": self.precision_flag,
        }
        if self.params is not None:
            meta["params"] = self.params.to_dict()
        meta.update(extra)
        return meta


def _number(event: Mapping[str, Any], key: str, default: float) -> float:
    value = event.get(key)
    if value is None:
        return default
    try:
        number = float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(key, f"must be a number, got {value!r}") from e
    if not number > 0:
        raise ConfigError(key, f"must be positive, got {value!r}")
    return number


def _integer(event: Mapping[str, Any], key: str, default: int) -> int:
    value = event.get(key)
    if value is None:
        return default
    try:
        return int(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(key, f"must be an integer, got {value!r}") from e


def resolve_params(
    event: Mapping[str, Any], default_preset: str | None = None
) -> tuple[SystemParams | None, str]:
    """
    Parameter set named by an event.

    The base comes from ``config`` (a TOML path) or ``preset``; entries of
    ``overrides`` are applied on top in the event's units. Without any
    source, ``default_preset`` is used.

    Returns:
        (params, description of the source); params is None when the event
        names nothing and there is no default
    """
    units = event.get("units") or UNITS
    if units not in UNIT_CHOICES:
        raise ConfigError("units", f"must be one of {list(UNIT_CHOICES)}, got {units!r}")
    overrides = dict(event.get("overrides") or {})
    for key in overrides:
        if key not in RATE_FIELDS:
            raise ConfigError(key, "unknown key")

    config = event.get("config")
    preset = event.get("preset")
    if config and preset:
        raise ConfigError("config", "give either a config file or a preset, not both")

    base: SystemParams | None = None
    source = "flags"
    if config:
        base = load_config(config, units=units)
        source = f"config:{config}"
    elif preset:
        base = load_preset(preset)
        source = f"preset:{preset}"
    elif not any(v is not None for v in overrides.values()) and default_preset:
        base = load_preset(default_preset)
        source = f"preset:{default_preset}"

    if base is None and not any(v is not None for v in overrides.values()):
        return None, "none"
    return apply_overrides(base, overrides, units=units), source


def from_event(
    event: Mapping[str, Any], command: str, default_preset: str | None = None
) -> RunSpec:
    """
    Build a RunSpec from a handler event.

    Raises:
        ConfigError: any malformed entry, naming its key
        ParameterError: the resulting parameters are invalid
    """
    flag = _integer(event, "precision", PRECISION_FLAG)
    if flag not in FLAG_BITS:
        raise ConfigError("precision", f"must be one of {sorted(FLAG_BITS)}, got {flag}")
    fmt = event.get("format") or OUTPUT_FORMAT
    if fmt not in FORMATS:
        raise ConfigError("format", f"must be one of {list(FORMATS)}, got {fmt!r}")
    workers = _integer(event, "workers", WORKERS)
    if workers < 1:
        raise ConfigError("workers", f"must be at least 1, got {workers}")

    params, source = resolve_params(event, default_preset)
    spec = RunSpec(
        command=command,
        params=params,
        units=event.get("units") or UNITS,
        epsilon=_number(event, "eps", EPSILON),
        tol=_number(event, "tol", TOLERANCE),
        precision=Precision.from_flag(flag),
        precision_flag=flag,
        out=event.get("out"),
        fmt=fmt,
        workers=workers,
        source=source,
        options={
            k: v
            for k, v in event.items()
            if k
            not in (
                "units",
                "overrides",
                "config",
                "preset",
                "precision",
                "format",
                "workers",
                "eps",
                "tol",
                "out",
            )
        },
    )
    logger.info("Run %s with parameters from %s", command, source)
    return spec


def int_list(value: Any, key: str) -> list[int]:
    """Integers from a list or a comma-separated string."""
    if value is None:
        return []
    items = value.split(",") if isinstance(value, str) else list(value)
    try:
        return [int(str(v).strip()) for v in items if str(v).strip()]
    except ValueError as e:
        raise ConfigError(key, f"must be a list of integers, got {value!r}") from e


def float_list(value: Any, key: str) -> list[float]:
    """Floats from a list or a comma-separated string."""
    if value is None:
        return []
    items = value.split(",") if isinstance(value, str) else list(value)
    try:
        return [float(str(v).strip()) for v in items if str(v).strip()]
    except ValueError as e:
        raise ConfigError(key, f"must be a list of numbers, got {value!r}") from e
