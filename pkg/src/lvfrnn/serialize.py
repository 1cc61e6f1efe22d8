"""JSON and CSV encodings for matrices, spectra and checkpoints."""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import ShapeError
from .geometry import VectorField


def matrix_to_dict(m) -> dict:
    if isinstance(m, VectorField):
        m = m.entries
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    return {"kappa": int(a.shape[0]), "entries": a.tolist()}


def matrix_from_dict(d: dict) -> np.ndarray:
    a = np.array(d["entries"], dtype=np.float64)
    if a.shape != (d["kappa"], d["kappa"]):
        raise ShapeError(f"entries of shape {a.shape} do not match kappa={d['kappa']}")
    return a


def field_from_dict(d: dict) -> VectorField:
    return VectorField(matrix_from_dict(d))


def matrix_to_json(m) -> str:
    return json.dumps(matrix_to_dict(m))


def matrix_from_json(text: str) -> np.ndarray:
    return matrix_from_dict(json.loads(text))


def matrix_to_csv(m) -> str:
    a = np.asarray(m.entries if isinstance(m, VectorField) else m, dtype=np.float64)
    return "".join(",".join(f"{x:.17g}" for x in row) + "\n" for row in a)


def matrix_from_csv(text: str) -> np.ndarray:
    rows = [[float(x) for x in line.split(",")] for line in text.splitlines() if line.strip()]
    return np.array(rows, dtype=np.float64)


def write_atomic(path, text: str):
    """Write via a temporary file and rename, so readers never see a partial file."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def array_to_json(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 2 and a.shape[0] == a.shape[1]:
        return matrix_to_dict(a)
    return {"shape": list(a.shape), "data": a.reshape(-1).tolist()}


def array_from_json(d) -> np.ndarray:
    if "kappa" in d:
        return matrix_from_dict(d)
    return np.array(d["data"], dtype=np.float64).reshape(d["shape"])
