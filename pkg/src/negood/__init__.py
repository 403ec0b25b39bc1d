"""Zero-shot OOD detection with mined negative labels."""

from .containers import (
    LabelSet,
    MatrixContainer,
    MatrixKind,
    cosine_matrix,
    load_labels,
    load_matrix,
    normalize_rows,
    save_labels,
    save_matrix,
)
from .metrics import DetectionMetrics, Detection, auroc, detect, evaluate, fpr_at_tpr
from .mining import (
    MiningConfig,
    NegativeSelection,
    dedup_candidates,
    load_selection,
    mine,
    percentile_distance,
    save_selection,
)
from .scoring import (
    ScoreBatch,
    ScoreConfig,
    ScoreVariant,
    classify,
    grouped_score,
    neglabel_score,
    score_batch,
    variant_score,
)
from .synth import SynthSpec, generate, random_unit_embeddings
from .theory import (
    NormalApprox,
    PoissonBinomialSpec,
    TheoryParams,
    binomial_gaussian_valid,
    erf,
    erfinv,
    fpr_closed_form,
    fpr_derivative_in_m,
    fpr_normal_composition,
    monte_carlo_fpr,
    normal_cdf,
    normal_quantile,
    poisson_binomial_exact,
    poisson_binomial_normal_approx,
    simulate_counts,
)

__version__ = "0.1.0"

__all__ = [
    "LabelSet",
    "MatrixContainer",
    "MatrixKind",
    "cosine_matrix",
    "load_labels",
    "load_matrix",
    "normalize_rows",
    "save_labels",
    "save_matrix",
    "MiningConfig",
    "NegativeSelection",
    "dedup_candidates",
    "load_selection",
    "mine",
    "percentile_distance",
    "save_selection",
    "ScoreBatch",
    "ScoreConfig",
    "ScoreVariant",
    "classify",
    "grouped_score",
    "neglabel_score",
    "score_batch",
    "variant_score",
    "DetectionMetrics",
    "Detection",
    "auroc",
    "detect",
    "evaluate",
    "fpr_at_tpr",
    "SynthSpec",
    "generate",
    "random_unit_embeddings",
    "NormalApprox",
    "PoissonBinomialSpec",
    "TheoryParams",
    "binomial_gaussian_valid",
    "erf",
    "erfinv",
    "fpr_closed_form",
    "fpr_derivative_in_m",
    "fpr_normal_composition",
    "monte_carlo_fpr",
    "normal_cdf",
    "normal_quantile",
    "poisson_binomial_exact",
    "poisson_binomial_normal_approx",
    "simulate_counts",
    "__version__",
]
