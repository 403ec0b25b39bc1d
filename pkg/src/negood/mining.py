"""Negative-label selection.

Candidates are ranked by how far they sit from the in-distribution
label space: for candidate i the distance is a percentile of the
negated cosine similarities to all K ID labels,

    d_i = percentile_eta({ -cos(cand_i, id_k) : k = 1..K }),

where the percentile uses the nearest-rank convention on the ascending
sort, index floor(eta * (K - 1)). ``eta = 0`` therefore picks the
minimum distance (the negated closest ID label) and ``eta = 1`` the
maximum. The top M candidates by distance are selected, ties broken by
ascending candidate index so selections are reproducible.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .containers import LabelSet, MatrixContainer, cosine_matrix
from .errors import (
    DimMismatch,
    EmptyRow,
    IoFailure,
    LabelCountMismatch,
    MTooLarge,
    ValidationError,
)


@dataclass(frozen=True)
class MiningConfig:
    eta: float = 0.05
    m: int = 10000
    block_rows: int = 1024  # candidate rows per similarity block

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValidationError(f"eta must be in [0, 1], got {self.eta}")
        if self.m < 1:
            raise ValidationError(f"m must be >= 1, got {self.m}")
        if self.block_rows < 1:
            raise ValidationError("block_rows must be >= 1")


@dataclass(frozen=True)
class NegativeSelection:
    indices: tuple[int, ...]
    labels: LabelSet
    distances: tuple[float, ...]

    def __post_init__(self):
        n = len(self.indices)
        if not (n == len(self.labels) == len(self.distances)):
            raise ValidationError("indices, labels, distances must align")
        if len(set(self.indices)) != n:
            raise ValidationError("selection indices must be unique")
        for i in range(n - 1):
            if self.distances[i] < self.distances[i + 1]:
                raise ValidationError("distances must be non-increasing")
            if self.distances[i] == self.distances[i + 1] and not (
                self.indices[i] < self.indices[i + 1]
            ):
                raise ValidationError("ties must be ordered by ascending index")

    def __len__(self) -> int:
        return len(self.indices)


def dedup_candidates(candidates: LabelSet) -> tuple[LabelSet, list[int]]:
    """Drop exact duplicate strings, keeping first occurrences in order.

    Returns the deduplicated labels and, for each kept label, its
    position in the original list.
    """
    seen: set[str] = set()
    kept: list[str] = []
    index_map: list[int] = []
    for pos, lab in enumerate(candidates):
        if lab in seen:
            continue
        seen.add(lab)
        kept.append(lab)
        index_map.append(pos)
    return LabelSet(tuple(kept)), index_map


def percentile_rank(eta: float, k: int) -> int:
    """Nearest-rank index into an ascending sort of k values."""
    return math.floor(eta * (k - 1))


def percentile_distance(cand_sims: np.ndarray, eta: float) -> float:
    """Percentile of the negated similarities of one candidate row."""
    sims = np.asarray(cand_sims, dtype=np.float64).ravel()
    if sims.size == 0:
        raise EmptyRow("candidate similarity row is empty")
    negsims = np.sort(-sims)
    return float(negsims[percentile_rank(eta, sims.size)])


def _percentile_column(sims_block: np.ndarray, eta: float) -> np.ndarray:
    # Row-wise version of percentile_distance for a block of candidates.
    negsims = np.sort(-sims_block.astype(np.float64), axis=1)
    return negsims[:, percentile_rank(eta, sims_block.shape[1])]


def mine(
    id_emb: MatrixContainer,
    cand_emb: MatrixContainer,
    cand_labels: LabelSet,
    cfg: MiningConfig,
    threads: int = 1,
) -> NegativeSelection:
    """Select the cfg.m candidates most distant from the ID label space.

    Candidate labels are deduplicated first; returned indices refer to
    the deduplicated list. Deterministic for fixed inputs under any
    thread count.
    """
    if cand_emb.dims != id_emb.dims:
        raise DimMismatch(f"dims differ: {cand_emb.dims} vs {id_emb.dims}")
    if len(cand_labels) != cand_emb.rows:
        raise LabelCountMismatch(
            f"{len(cand_labels)} labels for {cand_emb.rows} candidate rows"
        )
    unique_labels, index_map = dedup_candidates(cand_labels)
    rows = np.asarray(index_map, dtype=np.intp)
    c = len(unique_labels)
    if cfg.m > c:
        raise MTooLarge(f"m={cfg.m} exceeds {c} distinct candidates")

    distances = np.empty(c, dtype=np.float64)
    for start in range(0, c, cfg.block_rows):
        stop = min(start + cfg.block_rows, c)
        block = MatrixContainer(cand_emb.kind, cand_emb.data[rows[start:stop]])
        sims = cosine_matrix(block, id_emb, threads=threads)
        distances[start:stop] = _percentile_column(sims.data, cfg.eta)

    # Distance descending, candidate index ascending on ties.
    order = np.lexsort((np.arange(c), -distances))[: cfg.m]
    return NegativeSelection(
        indices=tuple(int(i) for i in order),
        labels=LabelSet(tuple(unique_labels[int(i)] for i in order)),
        distances=tuple(float(distances[i]) for i in order),
    )


def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def save_selection(
    sel: NegativeSelection,
    cfg: MiningConfig,
    path: str | Path,
    provenance: dict[str, str] | None = None,
) -> None:
    """Persist a selection as JSON (schema documented in the README)."""
    doc = {
        "eta": cfg.eta,
        "m": cfg.m,
        "indices": list(sel.indices),
        "labels": list(sel.labels),
        "distances": list(sel.distances),
        "provenance": provenance or {},
    }
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_selection(path: str | Path) -> tuple[NegativeSelection, dict]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid selection JSON: {exc}") from exc
    try:
        sel = NegativeSelection(
            indices=tuple(int(i) for i in doc["indices"]),
            labels=LabelSet(tuple(doc["labels"])),
            distances=tuple(float(d) for d in doc["distances"]),
        )
    except KeyError as exc:
        raise ValidationError(f"{path}: missing selection field {exc}") from exc
    return sel, doc
