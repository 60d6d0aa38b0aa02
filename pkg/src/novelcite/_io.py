"""CSV files carrying a one-line ``# novelcite {json}`` metadata header."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pandas as pd

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import DataError, ValidationError

PREFIX = "# novelcite "


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def digest_obj(obj) -> str:
    return digest_bytes(json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str).encode())


def load_mapping(path, section: str | None = None) -> dict:
    """Read a TOML (by ``.toml`` suffix) or JSON file into a dict.

    When ``section`` names a top-level table that exists, only that table
    is returned.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = tomllib.loads(text) if path.suffix.lower() == ".toml" else json.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: cannot parse config ({exc})") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: config must be a table/object")
    if section is not None and isinstance(data.get(section), dict):
        data = data[section]
    return data


def write_csv(df: pd.DataFrame, path, meta: dict | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(PREFIX + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
        df.to_csv(fh, index=False, lineterminator="\n", na_rep="")


def read_csv(path, dtype=None) -> tuple[pd.DataFrame, dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    meta = {}
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        skip = 0
        if first.startswith(PREFIX):
            meta = json.loads(first[len(PREFIX):])
            skip = 1
    try:
        df = pd.read_csv(path, skiprows=skip, dtype=dtype, keep_default_na=False, na_values=[""])
    except (ValueError, pd.errors.ParserError) as exc:
        raise DataError(f"{path}: unreadable CSV ({exc})") from None
    return df, meta
