"""Binary matrix containers and label lists.

The on-disk container layout (all integers little-endian):

    offset  size  field
    0       4     magic ``4E 45 47 4C`` ("NEGL")
    4       1     format version, currently 1
    5       1     kind: 0 = embeddings, 1 = similarities
    6       1     dtype: 1 = float32 (the only supported payload type)
    7       1     reserved, must be 0
    8       4     rows (u32)
    12      4     dims (u32)
    16      -     rows * dims float32 values, row-major

Embedding containers hold unit rows (L2 norm within 1e-4 of 1);
similarity containers hold values in [-1, 1]. Both are validated on
load and before save. Label files are plain UTF-8 text, one non-empty
label per LF-terminated line, no BOM.

Containers are immutable after construction; the payload array is
marked read-only so they can be shared freely across threads.
"""

from __future__ import annotations

import enum
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DimMismatch,
    EmptyFile,
    EmptyLine,
    IoFailure,
    NormViolation,
    RangeViolation,
    TruncatedPayload,
    UnsupportedVersion,
    ZeroRow,
)

MAGIC = b"NEGL"
FORMAT_VERSION = 1
_DTYPE_F32 = 1
_HEADER = struct.Struct("<4sBBBBII")

NORM_TOL = 1e-4
SIM_RANGE_SLACK = 1e-6


class MatrixKind(enum.IntEnum):
    EMBEDDINGS = 0
    SIMILARITIES = 1


@dataclass(frozen=True)
class MatrixContainer:
    kind: MatrixKind
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> int:
        return self.data.shape[1]

    def validate(self) -> "MatrixContainer":
        """Check the content invariants for this container's kind."""
        if self.data.ndim != 2:
            raise TruncatedPayload("payload must be a rows x dims matrix")
        if self.rows < 1 or self.dims < 1:
            raise TruncatedPayload(
                f"container must be at least 1x1, got {self.rows}x{self.dims}"
            )
        if self.kind == MatrixKind.EMBEDDINGS:
            norms = np.linalg.norm(self.data.astype(np.float64), axis=1)
            bad = np.nonzero(np.abs(norms - 1.0) > NORM_TOL)[0]
            if bad.size:
                raise NormViolation(
                    f"row {bad[0]} has L2 norm {norms[bad[0]]:.6g}, expected 1"
                )
        else:
            lo = float(self.data.min())
            hi = float(self.data.max())
            if not np.isfinite([lo, hi]).all():
                raise RangeViolation("similarities must be finite")
            if lo < -1.0 - SIM_RANGE_SLACK or hi > 1.0 + SIM_RANGE_SLACK:
                raise RangeViolation(
                    f"similarities outside [-1, 1]: min {lo:.6g}, max {hi:.6g}"
                )
        return self


@dataclass(frozen=True)
class LabelSet:
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 1:
            raise EmptyFile("label set must contain at least one label")
        for i, lab in enumerate(self.labels):
            if not lab:
                raise EmptyLine(f"label {i} is empty")
            if "\n" in lab:
                raise EmptyLine(f"label {i} contains a line feed")

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __getitem__(self, i):
        return self.labels[i]


def save_matrix(m: MatrixContainer, path: str | Path) -> None:
    """Write a validated container to disk in the binary format."""
    m.validate()
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, int(m.kind), _DTYPE_F32, 0, m.rows, m.dims
    )
    payload = np.ascontiguousarray(m.data, dtype="<f4").tobytes()
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_matrix(path: str | Path) -> MatrixContainer:
    """Read and validate a container written by :func:`save_matrix`."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise TruncatedPayload(f"{path}: file shorter than the fixed header")
    magic, version, kind, dtype, reserved, rows, dims = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagic(f"{path}: expected magic {MAGIC!r}, found {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"{path}: format version {version} not supported")
    if dtype != _DTYPE_F32 or reserved != 0:
        raise UnsupportedVersion(
            f"{path}: dtype {dtype} / reserved {reserved} not supported"
        )
    if kind not in (0, 1):
        raise UnsupportedVersion(f"{path}: unknown kind byte {kind}")
    expected = rows * dims * 4
    body = raw[_HEADER.size :]
    if len(body) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(body)} bytes, expected {expected}"
        )
    if rows < 1 or dims < 1:
        raise TruncatedPayload(f"{path}: degenerate shape {rows}x{dims}")
    data = np.frombuffer(body, dtype="<f4").reshape(rows, dims)
    return MatrixContainer(MatrixKind(kind), data).validate()


def save_labels(ls: LabelSet, path: str | Path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            for lab in ls.labels:
                f.write(lab)
                f.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_labels(path: str | Path) -> LabelSet:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not text:
        raise EmptyFile(f"{path}: label file is empty")
    if text.startswith("﻿"):
        raise EmptyLine(f"{path}: label files must not carry a BOM")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # trailing LF terminator
    if not lines:
        raise EmptyFile(f"{path}: label file is empty")
    for i, line in enumerate(lines):
        if line == "":
            raise EmptyLine(f"{path}: line {i + 1} is blank")
    return LabelSet(tuple(lines))


def normalize_rows(m: MatrixContainer) -> MatrixContainer:
    """Scale each row to unit L2 norm (norms accumulated in float64)."""
    data = m.data.astype(np.float64)
    norms = np.linalg.norm(data, axis=1)
    bad = np.nonzero(norms <= 1e-12)[0]
    if bad.size:
        raise ZeroRow(f"row {bad[0]} has zero norm")
    out = (data / norms[:, None]).astype(np.float32)
    return MatrixContainer(MatrixKind.EMBEDDINGS, out).validate()


def _dot_block(a64: np.ndarray, b64: np.ndarray) -> np.ndarray:
    # einsum keeps a fixed ascending-index accumulation per output entry,
    # independent of blocking and thread count (no BLAS dispatch).
    return np.einsum("id,jd->ij", a64, b64)


def cosine_matrix(
    a: MatrixContainer,
    b: MatrixContainer,
    threads: int = 1,
    block_rows: int = 256,
) -> MatrixContainer:
    """Pairwise dot products of two unit-row embedding sets.

    Output entry (i, j) is dot(a[i], b[j]) accumulated in float64 over
    ascending dimension index, clamped to [-1, 1] and stored as float32.
    Rows of ``a`` may be processed by multiple threads; results are
    bit-identical for any thread count.
    """
    if a.dims != b.dims:
        raise DimMismatch(f"dims differ: {a.dims} vs {b.dims}")
    a64 = a.data.astype(np.float64)
    b64 = b.data.astype(np.float64)
    out = np.empty((a.rows, b.rows), dtype=np.float32)
    spans = [(s, min(s + block_rows, a.rows)) for s in range(0, a.rows, block_rows)]

    def fill(span):
        lo, hi = span
        block = np.clip(_dot_block(a64[lo:hi], b64), -1.0, 1.0)
        out[lo:hi] = block.astype(np.float32)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, spans))
    else:
        for span in spans:
            fill(span)
    return MatrixContainer(MatrixKind.SIMILARITIES, out)
