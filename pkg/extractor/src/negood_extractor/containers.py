"""Writers for the negood matrix container and label file formats.

This package talks to the detection toolkit only through its published
file formats, so the layout is implemented here rather than imported:
magic "NEGL", version 1, kind byte (0 embeddings / 1 similarities),
dtype byte 1 (float32), reserved 0, rows/dims as little-endian u32,
then the row-major float32 payload. Embedding rows are written
unit-normalized so the consumer never has to re-normalize model
output.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import EncodeError, IoFailure

_HEADER = struct.Struct("<4sBBBBII")
MAGIC = b"NEGL"
KIND_EMBEDDINGS = 0


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    out = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    if (norms <= 1e-12).any():
        raise EncodeError("encoder produced a zero embedding row")
    return (out / norms).astype(np.float32)


def write_embeddings(matrix: np.ndarray, path: str | Path) -> None:
    """Normalize rows and write an embeddings container."""
    data = normalize_rows(matrix)
    rows, dims = data.shape
    header = _HEADER.pack(MAGIC, 1, KIND_EMBEDDINGS, 1, 0, rows, dims)
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(np.ascontiguousarray(data, dtype="<f4").tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_labels(labels: list[str], path: str | Path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            for label in labels:
                f.write(label)
                f.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
