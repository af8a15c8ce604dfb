import dataclasses
import json
import sys
from pathlib import Path
from typing import Any, TextIO

import numpy as np
import pandas as pd
from loguru import logger

UNIT_CONVENTION = "dimensionless units: omega_sp = 1, 1/(4 pi eps0) = 1; rates in Gamma_0, forces in |F_0|"


def _custom_serializer(obj: Any) -> Any:
    """Custom JSON serializer for objects not serializable by default json code."""
    if isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, np.ndarray):
        return obj.tolist()
    elif isinstance(obj, complex):
        return [obj.real, obj.imag]
    elif isinstance(obj, Path):
        return str(obj)
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dataclasses.asdict(obj)
    logger.debug(f"Type {type(obj)} is not serializable")
    raise TypeError("Type not serializable")


def dumps(payload: Any) -> str:
    """Serializes a payload to indented JSON with non-finite floats as null."""
    return json.dumps(_finite_or_none(payload), default=_custom_serializer, indent=2, sort_keys=False)


def _finite_or_none(payload: Any) -> Any:
    if isinstance(payload, dict):
        return {key: _finite_or_none(value) for key, value in payload.items()}
    if isinstance(payload, list | tuple):
        return [_finite_or_none(value) for value in payload]
    if isinstance(payload, float | np.floating) and not np.isfinite(payload):
        return None
    return payload


def save_json(payload: Any, path: str | Path) -> None:
    """Saves a payload as JSON.

    Args:
        payload: Anything the custom serializer understands.
        path (str | Path): Output file.
    """
    path_obj = Path(path)
    logger.info(f"Saving results locally to: {path_obj}")
    with path_obj.open("w") as f:
        f.write(dumps(payload))
        f.write("\n")
    logger.info("results saved ✅")


def load_json(path: str | Path) -> dict:
    """Loads a JSON object (used for run configurations).

    Raises:
        ValueError: If the file is missing or does not hold a JSON object.
    """
    path_obj = Path(path)
    if not path_obj.is_file():
        raise ValueError(f"Configuration file not found: {path_obj}")
    logger.info(f"Loading configuration from: {path_obj} 🌪️")
    with path_obj.open() as f:
        try:
            content = json.load(f)
        except json.JSONDecodeError as err:
            raise ValueError(f"Invalid JSON in {path_obj}: {err}")
    if not isinstance(content, dict):
        raise ValueError(f"Expected a JSON object in {path_obj}, got {type(content).__name__}")
    return content


def header_lines(params: dict[str, Any]) -> list[str]:
    """Comment lines recording the unit convention and every input parameter."""
    lines = [f"# {UNIT_CONVENTION}"]
    for key, value in params.items():
        rendered = json.dumps(value, default=_custom_serializer) if not isinstance(value, str) else value
        lines.append(f"# {key}: {rendered}")
    return lines


def write_table(
    frame: pd.DataFrame,
    params: dict[str, Any],
    fmt: str = "csv",
    out: str | Path | None = None,
    stream: TextIO | None = None,
) -> None:
    """Writes a result table as CSV (17 significant digits, comment header) or as JSON records.

    Output is byte-identical for identical inputs.

    Args:
        frame (pd.DataFrame): The result rows.
        params (dict): Input parameters echoed in the header.
        fmt (str): 'csv' or 'json'.
        out (str | Path | None): Output file; stdout when None.
        stream (TextIO | None): Explicit stream, overriding stdout.
    """
    if fmt == "csv":
        body = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n", na_rep="nan")
        text = "\n".join(header_lines(params)) + "\n" + body
    elif fmt == "json":
        text = dumps({"parameters": params, "rows": frame.to_dict(orient="records")}) + "\n"
    else:
        raise ValueError(f"Unsupported output format: {fmt!r} (expected 'csv' or 'json')")

    if out is not None:
        path_obj = Path(out)
        with path_obj.open("w", newline="") as f:
            f.write(text)
        logger.info(f"{len(frame)} rows written to {path_obj} ✅")
    else:
        (stream or sys.stdout).write(text)


def read_table(path: str | Path) -> pd.DataFrame:
    """Reads a CSV written by write_table, skipping the comment header."""
    return pd.read_csv(path, comment="#")
