"""Small shared helpers: thread cap, hashing, deterministic JSON."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from .errors import InputError

THREADS_ENV = "FRICSYM_THREADS"


def max_threads() -> int:
    """Worker-thread cap from the FRICSYM_THREADS environment variable.

    Unset means 1 (sequential).  Results do not depend on the value; it only
    caps internal parallelism.
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if value < 1:
        raise InputError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def json_dumps(data) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def write_json(path: str | Path, data) -> Path:
    path = Path(path)
    path.write_text(json_dumps(data), encoding="utf-8")
    return path


def read_json(path: str | Path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise InputError(f"invalid JSON in {path}: {err}") from err
