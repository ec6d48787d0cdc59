"""Bit-exact array and style-code serialization helpers.

Arrays are stored as little-endian float64 base64 payloads so artifacts
round-trip bitwise across platforms.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .stylespace import StyleCode


def encode_array(arr: np.ndarray | None) -> dict | None:
    if arr is None:
        return None
    little = np.ascontiguousarray(arr, dtype="<f8")
    return {
        "dtype": "<f8",
        "shape": list(arr.shape),
        "data": base64.b64encode(little.tobytes()).decode("ascii"),
    }


def decode_array(raw: dict) -> np.ndarray:
    buf = base64.b64decode(raw["data"])
    return np.frombuffer(buf, dtype=raw["dtype"]).reshape(raw["shape"]).astype(np.float64)


def save_style_code(code: StyleCode, path: str | Path, **meta) -> None:
    payload = {
        "values": encode_array(np.asarray(code.values)),
        "editable": [bool(b) for b in code.editable],
        **meta,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_style_code(path: str | Path) -> StyleCode:
    raw = json.loads(Path(path).read_text())
    return StyleCode(decode_array(raw["values"]), np.array(raw["editable"], dtype=bool))
