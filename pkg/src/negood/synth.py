"""Synthetic similarity matrices realizing the two-cluster matching model.

Every (sample, label) similarity is drawn from one of two Gaussian
clusters: a matched pair around mu_pos (0.3 by default, the typical
CLIP positive-pair cosine) or an unmatched pair around mu_neg (0.1).
ID samples match exactly one uniformly chosen ID label and each
negative label independently with probability p1; OOD samples match no
ID label and each negative with probability p2. With the default
sigma = 0.02 the clusters sit far clear of the 0.25 binarization
threshold, so thresholded counts follow the binomial model exactly for
practical purposes and the pipeline can be cross-checked against the
theory engine.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .containers import LabelSet, MatrixContainer, MatrixKind
from .errors import IoFailure, SpecInvalid, ValidationError


@dataclass(frozen=True)
class SynthSpec:
    k: int
    m: int
    n_id: int
    n_ood: int
    p1: float
    p2: float
    mu_pos: float = 0.3
    mu_neg: float = 0.1
    sigma: float = 0.02
    seed: int = 0
    allow_degenerate: bool = False  # permit p1 >= p2 for the limit-case study

    def __post_init__(self):
        if min(self.k, self.m, self.n_id, self.n_ood) < 1:
            raise SpecInvalid("k, m, n_id, n_ood must all be >= 1")
        for name, p in (("p1", self.p1), ("p2", self.p2)):
            if not 0.0 < p < 1.0:
                raise SpecInvalid(f"{name} must be in (0, 1), got {p}")
        if not self.allow_degenerate and not self.p1 < self.p2:
            raise SpecInvalid(
                f"p1 < p2 required (got {self.p1} >= {self.p2}); "
                "set allow_degenerate to study this case"
            )
        if not self.mu_neg < self.mu_pos:
            raise SpecInvalid("mu_neg must be below mu_pos")
        if self.sigma <= 0:
            raise SpecInvalid("sigma must be positive")
        for mu in (self.mu_pos, self.mu_neg):
            if abs(mu) + 5.0 * self.sigma > 1.0:
                raise SpecInvalid(
                    f"cluster mean {mu} +- 5 sigma must stay within [-1, 1]"
                )


def generate(spec: SynthSpec) -> tuple[MatrixContainer, np.ndarray, LabelSet]:
    """Draw the (n_id + n_ood) x (k + m) similarity matrix.

    Returns the similarity container, a boolean mask marking the ID
    rows (the first n_id), and the column labels. Generation is
    single-threaded with a fixed draw order, so a seed pins the output
    bit-for-bit.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_id + spec.n_ood

    # Cluster membership per column. Draw order: planted classes, ID-block
    # negative coins, OOD-block negative coins, then one noise field.
    planted = rng.integers(0, spec.k, size=spec.n_id)
    id_neg_match = rng.random((spec.n_id, spec.m)) < spec.p1
    ood_neg_match = rng.random((spec.n_ood, spec.m)) < spec.p2

    means = np.full((n, spec.k + spec.m), spec.mu_neg, dtype=np.float64)
    means[np.arange(spec.n_id), planted] = spec.mu_pos
    means[: spec.n_id, spec.k :][id_neg_match] = spec.mu_pos
    means[spec.n_id :, spec.k :][ood_neg_match] = spec.mu_pos

    values = means + spec.sigma * rng.standard_normal((n, spec.k + spec.m))
    np.clip(values, -1.0, 1.0, out=values)

    container = MatrixContainer(
        MatrixKind.SIMILARITIES, values.astype(np.float32)
    ).validate()
    id_mask = np.zeros(n, dtype=bool)
    id_mask[: spec.n_id] = True
    labels = LabelSet(
        tuple(f"id_{i:04d}" for i in range(spec.k))
        + tuple(f"neg_{j:05d}" for j in range(spec.m))
    )
    return container, id_mask, labels


def random_unit_embeddings(rows: int, dims: int, seed: int) -> MatrixContainer:
    """Random unit-norm embedding rows, for exercising the cosine kernel."""
    if rows < 1 or dims < 1:
        raise ValidationError("rows and dims must be >= 1")
    rng = np.random.default_rng(seed)
    vecs = rng.standard_normal((rows, dims))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    return MatrixContainer(MatrixKind.EMBEDDINGS, vecs.astype(np.float32)).validate()


def spec_from_json(path: str | Path) -> SynthSpec:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecInvalid(f"{path}: invalid JSON: {exc}") from exc
    try:
        return SynthSpec(**doc)
    except TypeError as exc:
        raise SpecInvalid(f"{path}: {exc}") from exc


def write_outputs(
    spec: SynthSpec, out_dir: str | Path
) -> dict[str, str]:
    """Generate and persist matrix, mask, labels, and a manifest.

    The manifest echoes the spec and records SHA-256 digests of the
    three output files. Returns the written paths.
    """
    from .containers import save_labels, save_matrix

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    container, id_mask, labels = generate(spec)
    paths = {
        "similarities": out / "similarities.negl",
        "id_mask": out / "id_mask.txt",
        "labels": out / "labels.txt",
    }
    save_matrix(container, paths["similarities"])
    try:
        with open(paths["id_mask"], "w", encoding="utf-8") as f:
            for flag in id_mask:
                f.write("1\n" if flag else "0\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {paths['id_mask']}: {exc}") from exc
    save_labels(labels, paths["labels"])

    manifest = {
        "spec": asdict(spec),
        "digests": {
            name: hashlib.sha256(path.read_bytes()).hexdigest()
            for name, path in paths.items()
        },
    }
    manifest_path = out / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return {name: str(path) for name, path in paths.items()} | {
        "manifest": str(manifest_path)
    }
