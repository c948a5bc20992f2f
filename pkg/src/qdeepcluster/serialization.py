"""Bit-exact float encoding for JSON artifacts (``float.hex``)."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def hexify(values) -> list | str:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        return float(arr).hex()
    return [hexify(v) for v in arr]


def unhex(data) -> np.ndarray:
    if isinstance(data, str):
        return np.float64(float.fromhex(data))
    return np.array([unhex(v) for v in data], dtype=np.float64)


def hex_complex(values) -> dict:
    arr = np.asarray(values, dtype=np.complex128)
    return {"re": hexify(arr.real), "im": hexify(arr.imag)}


def unhex_complex(data) -> np.ndarray:
    return unhex(data["re"]) + 1j * unhex(data["im"])


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
