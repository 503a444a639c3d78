"""Writers and readers for result tables (CSV, JSON, Parquet)."""

import json
import math
from pathlib import Path
from typing import Any

import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from .errors import ConfigError
from .settings import SCHEMA_VERSION

FORMATS = ("csv", "json", "parquet")
FLOAT_FORMAT = "%.17g"
METADATA_KEY = b"qdcavity"


def _scalar(value: Any) -> Any:
    """Plain JSON-compatible scalar; NaN and infinities become strings."""
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, complex):
        return [_scalar(value.real), _scalar(value.imag)]
    return value


def build_metadata(metadata: dict[str, Any] | None) -> dict[str, Any]:
    """Metadata block with the schema version first and sorted keys after it."""
    out: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    for key in sorted(metadata or {}):
        out[key] = metadata[key]
    return out


def _header_lines(metadata: dict[str, Any]) -> str:
    lines = []
    for key, value in metadata.items():
        text = json.dumps(value, default=str) if not isinstance(value, str) else value
        lines.append(f"# {key}: {text}\n")
    return "".join(lines)


def write_table(
    path: str | Path,
    df: pd.DataFrame,
    fmt: str = "csv",
    metadata: dict[str, Any] | None = None,
) -> Path:
    """
    Write a result table.

    CSV carries the metadata as ``# key: value`` header lines; JSON wraps
    the rows as {"schema_version", "metadata", "rows"}; Parquet stores the
    metadata in the schema. Floats are written with full round-trip
    precision and no timestamps are added, so identical inputs give
    identical bytes.

    Args:
        path: output file
        df: table to write
        fmt: 'csv', 'json' or 'parquet'
        metadata: run parameters and defaults to record

    Returns:
        The path written
    """
    if fmt not in FORMATS:
        raise ConfigError("format", f"must be one of {', '.join(FORMATS)}, got {fmt!r}")
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    meta = build_metadata(metadata)

    if fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as f:
            f.write(_header_lines(meta))
            df.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    elif fmt == "json":
        rows = [{col: _scalar(v) for col, v in row.items()} for row in df.to_dict(orient="records")]
        payload = {
            "schema_version": SCHEMA_VERSION,
            "metadata": {k: v for k, v in meta.items() if k != "schema_version"},
            "rows": rows,
        }
        path.write_text(json.dumps(payload, indent=2, default=str) + "\n", encoding="utf-8")
    else:
        table = pa.Table.from_pandas(df, preserve_index=False)
        existing = table.schema.metadata or {}
        table = table.replace_schema_metadata(
            {**existing, METADATA_KEY: json.dumps(meta, default=str).encode("utf-8")}
        )
        pq.write_table(table, path)

    return path


def read_table(path: str | Path) -> tuple[pd.DataFrame, dict[str, Any]]:
    """
    Read a table written by ``write_table``.

    Returns:
        (DataFrame, metadata); metadata values from CSV headers come back as
        strings
    """
    path = Path(path)
    suffix = path.suffix.lower().lstrip(".")
    if suffix == "parquet":
        table = pq.read_table(path)
        raw = (table.schema.metadata or {}).get(METADATA_KEY)
        return table.to_pandas(), json.loads(raw) if raw else {}
    if suffix == "json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        meta = {"schema_version": payload.get("schema_version"), **payload.get("metadata", {})}
        return pd.DataFrame(payload.get("rows", [])), meta

    meta: dict[str, Any] = {}
    with path.open(encoding="utf-8") as f:
        for line in f:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition(": ")
            meta[key] = value
    return pd.read_csv(path, comment="#", float_precision="round_trip"), meta


def output_path(out: str | None, default_stem: str, fmt: str) -> Path:
    """``out`` if given, else ``<default_stem>.<fmt>`` in the working directory."""
    if out:
        return Path(out)
    return Path(f"{default_stem}.{fmt}")
