"""Small helpers for the JSON wire formats: complex numbers are ``[re, im]``."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InputError


def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(obj: Any, *, stage: str = "io") -> complex:
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return complex(obj)
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        try:
            return complex(float(obj[0]), float(obj[1]))
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad complex literal {obj!r}", stage) from exc
    raise InputError(f"bad complex literal {obj!r}", stage)


def encode_array(values) -> list[list[float]]:
    return [encode_complex(v) for v in np.asarray(values).ravel()]


def decode_array(obj: Any, *, stage: str = "io") -> np.ndarray:
    if not isinstance(obj, (list, tuple)):
        raise InputError(f"expected a list, got {type(obj).__name__}", stage)
    return np.array([decode_complex(v, stage=stage) for v in obj], dtype=complex)


def load_json(path: str | Path, *, stage: str = "io") -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg})", stage) from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}", stage) from exc


def dump_json(obj: Any, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
