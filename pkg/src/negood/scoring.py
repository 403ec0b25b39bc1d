"""Zero-shot classification and the detection score family.

Scores fuse a sample's cosine similarities to the K in-distribution
labels with its similarities to M mined negative labels. The flagship
variant is the sum-softmax fraction

    score = sum_i exp(c_i / tau) / (sum_i exp(c_i / tau) + sum_j exp(n_j / tau))

over the extended label space (ID columns first, negatives after).
Exponentials subtract the per-sample max over both parts before
scaling by 1/tau; at tau = 0.01 raw exponents reach +-100, which would
overflow without the shift. All arithmetic is float64 on float32 input.

Grouping splits the first n_g * floor(M / n_g) negatives (selection
rank order) into n_g contiguous groups, scores each group against the
full ID row, and averages; remainder negatives are discarded. A seeded
shuffle of the negatives before splitting is available but off by
default, keeping the contiguous rank-order grouping reproducible.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .containers import MatrixContainer
from .errors import (
    ColumnSplitInvalid,
    DenominatorZero,
    EmptyRow,
    GroupTooSmall,
    NonPositiveTau,
    ValidationError,
)

RATIO_DENOM_EPS = 1e-12


class ScoreVariant(str, enum.Enum):
    SUM_SOFTMAX = "sum-softmax"
    MAX_SOFTMAX = "max-softmax"
    SUM_RATIO = "sum-ratio"
    MAX_RATIO = "max-ratio"
    LINEAR = "linear"
    BINARIZED_LINEAR = "binarized-linear"
    BINARIZED_COUNT = "binarized-count"
    BINARIZED_RATIO = "binarized-ratio"
    MAX_COS = "max-cos"


@dataclass(frozen=True)
class ScoreConfig:
    variant: ScoreVariant = ScoreVariant.SUM_SOFTMAX
    tau: float = 0.01
    n_groups: int = 100
    alpha: float = 0.1
    beta: float = 0.25
    shuffle_seed: int | None = None  # None keeps rank-contiguous groups

    def __post_init__(self):
        object.__setattr__(self, "variant", ScoreVariant(self.variant))
        if not self.tau > 0:
            raise NonPositiveTau(f"tau must be positive, got {self.tau}")
        if self.n_groups < 1:
            raise ValidationError(f"n_groups must be >= 1, got {self.n_groups}")
        if not -1.0 <= self.beta <= 1.0:
            raise ValidationError(f"beta must be in [-1, 1], got {self.beta}")


@dataclass(frozen=True)
class ScoreBatch:
    scores: np.ndarray = field(repr=False)
    variant: ScoreVariant
    k: int
    m_effective: int

    def __len__(self) -> int:
        return len(self.scores)


def classify(sim_id: np.ndarray) -> int:
    """Index of the best-matching ID label; ties go to the lowest index."""
    row = np.asarray(sim_id, dtype=np.float64).ravel()
    if row.size == 0:
        raise EmptyRow("similarity row is empty")
    return int(np.argmax(row))


def _score_rows(sim_id: np.ndarray, sim_neg: np.ndarray, cfg: ScoreConfig) -> np.ndarray:
    """Grouped variant scores for a block of samples.

    ``sim_id`` is (n, K), ``sim_neg`` is (n, M); returns (n,) float64.
    """
    sid = np.asarray(sim_id, dtype=np.float64)
    sneg = np.asarray(sim_neg, dtype=np.float64)
    n, k = sid.shape
    m = sneg.shape[1]
    if k == 0:
        raise EmptyRow("ID similarity rows are empty")
    if m < cfg.n_groups:
        raise GroupTooSmall(f"{m} negatives cannot fill {cfg.n_groups} groups")
    if cfg.shuffle_seed is not None:
        perm = np.random.default_rng(cfg.shuffle_seed).permutation(m)
        sneg = sneg[:, perm]
    group = m // cfg.n_groups
    grouped = sneg[:, : cfg.n_groups * group].reshape(n, cfg.n_groups, group)
    v = cfg.variant

    if v in (ScoreVariant.SUM_SOFTMAX, ScoreVariant.MAX_SOFTMAX):
        shift = np.maximum(sid.max(axis=1), grouped.max(axis=(1, 2)))
        eid = np.exp((sid - shift[:, None]) / cfg.tau)
        eneg = np.exp((grouped - shift[:, None, None]) / cfg.tau)
        id_sum = eid.sum(axis=1)
        neg_sums = eneg.sum(axis=2)
        numer = id_sum if v == ScoreVariant.SUM_SOFTMAX else eid.max(axis=1)
        return (numer[:, None] / (id_sum[:, None] + neg_sums)).mean(axis=1)

    if v in (ScoreVariant.SUM_RATIO, ScoreVariant.MAX_RATIO):
        id_sum = sid.sum(axis=1)
        denom = id_sum[:, None] + grouped.sum(axis=2)
        if np.abs(denom).min() < RATIO_DENOM_EPS:
            raise DenominatorZero("ratio denominator is numerically zero")
        numer = id_sum if v == ScoreVariant.SUM_RATIO else sid.max(axis=1)
        return (numer[:, None] / denom).mean(axis=1)

    if v == ScoreVariant.LINEAR:
        neg_sums = grouped.sum(axis=2)
        return (sid.sum(axis=1)[:, None] - cfg.alpha * neg_sums).mean(axis=1)

    if v == ScoreVariant.MAX_COS:
        return sid.max(axis=1)

    id_count = (sid >= cfg.beta).sum(axis=1).astype(np.float64)
    neg_counts = (grouped >= cfg.beta).sum(axis=2).astype(np.float64)
    if v == ScoreVariant.BINARIZED_LINEAR:
        return (id_count[:, None] - cfg.alpha * neg_counts).mean(axis=1)
    if v == ScoreVariant.BINARIZED_COUNT:
        return (-neg_counts).mean(axis=1)
    if v == ScoreVariant.BINARIZED_RATIO:
        denom = id_count[:, None] + neg_counts
        if denom.min() == 0:
            raise DenominatorZero("no similarity reached the binarization threshold")
        return (id_count[:, None] / denom).mean(axis=1)

    raise ValidationError(f"unknown variant {v}")


def neglabel_score(sim_id, sim_neg, cfg: ScoreConfig | None = None) -> float:
    """Ungrouped sum-softmax score for one sample.

    An empty negative row yields exactly 1.0 (the sample's entire mass
    sits in the ID label space).
    """
    cfg = cfg or ScoreConfig()
    if cfg.variant != ScoreVariant.SUM_SOFTMAX:
        raise ValidationError("neglabel_score is the sum-softmax variant")
    sid = np.atleast_2d(np.asarray(sim_id, dtype=np.float64))
    sneg = np.atleast_2d(np.asarray(sim_neg, dtype=np.float64))
    if sid.shape[1] == 0:
        raise EmptyRow("ID similarity row is empty")
    if sneg.shape[1] == 0:
        return 1.0
    ungrouped = ScoreConfig(
        variant=cfg.variant, tau=cfg.tau, n_groups=1,
        alpha=cfg.alpha, beta=cfg.beta,
    )
    return float(_score_rows(sid, sneg, ungrouped)[0])


def grouped_score(sim_id, sim_neg, cfg: ScoreConfig) -> float:
    """Grouped score for one sample (mean of per-group variant scores)."""
    sid = np.atleast_2d(np.asarray(sim_id, dtype=np.float64))
    sneg = np.atleast_2d(np.asarray(sim_neg, dtype=np.float64))
    return float(_score_rows(sid, sneg, cfg)[0])


def variant_score(sim_id, sim_neg, cfg: ScoreConfig) -> float:
    """Ungrouped score under any variant (single group over all negatives)."""
    ungrouped = ScoreConfig(
        variant=cfg.variant, tau=cfg.tau, n_groups=1,
        alpha=cfg.alpha, beta=cfg.beta, shuffle_seed=cfg.shuffle_seed,
    )
    return grouped_score(sim_id, sim_neg, ungrouped)


def score_batch(
    sims: MatrixContainer,
    k: int,
    cfg: ScoreConfig,
    threads: int = 1,
    block_rows: int = 1024,
) -> ScoreBatch:
    """Grouped scores for every row of an extended similarity matrix.

    Columns 0..k-1 are the ID labels, the rest the negatives in
    selection rank order. Rows are independent; blocks may run on
    multiple threads without changing the result.
    """
    cols = sims.dims
    if not 1 <= k <= cols:
        raise ColumnSplitInvalid(f"k={k} invalid for {cols} columns")
    m = cols - k
    if m < cfg.n_groups:
        raise GroupTooSmall(f"{m} negatives cannot fill {cfg.n_groups} groups")
    n = sims.rows
    out = np.empty(n, dtype=np.float64)
    spans = [(s, min(s + block_rows, n)) for s in range(0, n, block_rows)]

    def fill(span):
        lo, hi = span
        block = sims.data[lo:hi]
        out[lo:hi] = _score_rows(block[:, :k], block[:, k:], cfg)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, spans))
    else:
        for span in spans:
            fill(span)
    m_effective = cfg.n_groups * (m // cfg.n_groups)
    return ScoreBatch(scores=out, variant=cfg.variant, k=k, m_effective=m_effective)
