"""Detection rule and benchmark metrics (AUROC, FPR at fixed TPR).

AUROC is computed as the rank-sum statistic

    P(S_id > S_ood) + 0.5 * P(S_id = S_ood)

with average ranks for ties, which equals the trapezoidal area under
the ROC curve. FPR at TPR lambda uses the nearest-rank threshold: the
ceil(lambda * n_id)-th largest ID score, so that the inclusive rule
``score >= threshold -> ID`` attains TPR >= lambda; ties at the
threshold count toward both TPR and FPR.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadLambda, EmptyList, NonFinite


class Detection(enum.Enum):
    ID = "id"
    OOD = "ood"


@dataclass(frozen=True)
class DetectionMetrics:
    auroc: float
    fpr_at_lambda: float
    lam: float
    threshold: float
    n_id: int
    n_ood: int

    def to_dict(self) -> dict:
        """JSON payload: raw values plus 2-decimal percentage renderings."""
        return {
            "auroc": self.auroc,
            "fpr95": self.fpr_at_lambda,
            "threshold": self.threshold,
            "tpr_target": self.lam,
            "n_id": self.n_id,
            "n_ood": self.n_ood,
            "auroc_pct": f"{100.0 * self.auroc:.2f}",
            "fpr95_pct": f"{100.0 * self.fpr_at_lambda:.2f}",
        }


def detect(score: float, gamma: float) -> Detection:
    """Inclusive threshold rule: a score at the threshold counts as ID."""
    return Detection.ID if score >= gamma else Detection.OOD


def _checked(scores, name: str) -> np.ndarray:
    arr = np.asarray(scores, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptyList(f"{name} score list is empty")
    if not np.isfinite(arr).all():
        raise NonFinite(f"{name} scores contain non-finite values")
    return arr


def _average_ranks(pooled: np.ndarray) -> np.ndarray:
    """1-based ranks of a pooled sample, ties sharing their mean rank."""
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled), dtype=np.float64)
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(id_scores, ood_scores) -> float:
    """Probability a random ID sample outscores a random OOD sample."""
    ids = _checked(id_scores, "ID")
    oods = _checked(ood_scores, "OOD")
    ranks = _average_ranks(np.concatenate([ids, oods]))
    n_id, n_ood = len(ids), len(oods)
    u = ranks[:n_id].sum() - n_id * (n_id + 1) / 2.0
    return float(u / (n_id * n_ood))


def fpr_at_tpr(id_scores, ood_scores, lam: float) -> tuple[float, float]:
    """False-positive rate on OOD scores at TPR >= lam on ID scores.

    Returns (fpr, threshold). The threshold is the ceil(lam * n_id)-th
    largest ID score.
    """
    if not 0.0 < lam <= 1.0:
        raise BadLambda(f"TPR target must be in (0, 1], got {lam}")
    ids = _checked(id_scores, "ID")
    oods = _checked(ood_scores, "OOD")
    rank = math.ceil(lam * len(ids))  # 1-based, among descending ID scores
    threshold = float(np.sort(ids)[len(ids) - rank])
    fpr = float(np.count_nonzero(oods >= threshold) / len(oods))
    return fpr, threshold


def evaluate(id_scores, ood_scores, lam: float = 0.95) -> DetectionMetrics:
    """Bundle AUROC and FPR at TPR lam over two score lists."""
    fpr, threshold = fpr_at_tpr(id_scores, ood_scores, lam)
    return DetectionMetrics(
        auroc=auroc(id_scores, ood_scores),
        fpr_at_lambda=fpr,
        lam=lam,
        threshold=threshold,
        n_id=len(np.ravel(id_scores)),
        n_ood=len(np.ravel(ood_scores)),
    )
