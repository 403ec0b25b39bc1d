"""Embedding extraction and WordNet candidate export."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .containers import write_embeddings, write_labels
from .encoders import Encoder
from .errors import ConfigInvalid, DatabaseMissing, ImageDecodeError, IoFailure

log = logging.getLogger(__name__)

PLACEHOLDER = "<label>"
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}


@dataclass(frozen=True)
class ExtractorConfig:
    model_id: str = "openai/clip-vit-base-patch16"
    prompt_template: str = "The nice <label>."
    batch_size: int = 32
    device: str = "cpu"
    skip_bad_images: bool = False  # skip-with-log instead of aborting

    def __post_init__(self):
        if self.prompt_template.count(PLACEHOLDER) != 1:
            raise ConfigInvalid(
                f"prompt template must contain exactly one {PLACEHOLDER!r}, "
                f"got {self.prompt_template!r}"
            )
        if self.batch_size < 1:
            raise ConfigInvalid("batch size must be >= 1")

    def prompt(self, label: str) -> str:
        return self.prompt_template.replace(PLACEHOLDER, label)


def extract_text(
    labels: list[str], cfg: ExtractorConfig, encoder: Encoder, out: str | Path
) -> int:
    """Encode prompted labels into an embeddings container (row i = label i)."""
    if not labels:
        raise ConfigInvalid("no labels to encode")
    prompts = [cfg.prompt(label) for label in labels]
    write_embeddings(encoder.encode_text(prompts), out)
    return len(labels)


def collect_images(source: str | Path | list) -> list[Path]:
    """Image paths in lexicographic order (the row-order contract)."""
    if isinstance(source, (str, Path)):
        root = Path(source)
        if not root.is_dir():
            raise IoFailure(f"{root} is not a directory")
        paths = [p for p in root.rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES]
    else:
        paths = [Path(p) for p in source]
    return sorted(paths, key=lambda p: str(p))


def extract_images(
    source: str | Path | list,
    cfg: ExtractorConfig,
    encoder: Encoder,
    out: str | Path,
    manifest_out: str | Path,
) -> int:
    """Encode images into a container plus a row-order manifest."""
    paths = collect_images(source)
    images, kept = [], []
    for path in paths:
        try:
            with Image.open(path) as img:
                images.append(img.convert("RGB").copy())
            kept.append(path)
        except (UnidentifiedImageError, OSError) as exc:
            if not cfg.skip_bad_images:
                raise ImageDecodeError(f"cannot decode {path}: {exc}") from exc
            log.warning("skipping undecodable image %s (%s)", path, exc)
    if not kept:
        raise ImageDecodeError("no decodable images found")
    write_embeddings(encoder.encode_images(images), out)
    manifest = {
        "model_id": cfg.model_id,
        "rows": [str(p) for p in kept],
        "skipped": len(paths) - len(kept),
    }
    try:
        with open(manifest_out, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2)
            f.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {manifest_out}: {exc}") from exc
    return len(kept)


def _read_index_lemmas(index_path: Path) -> list[str]:
    lemmas = []
    for line in index_path.read_text(encoding="utf-8").splitlines():
        if not line or line.startswith(" "):
            continue  # license header lines are indented
        lemmas.append(line.split(" ", 1)[0].replace("_", " "))
    return lemmas


def export_wordnet_candidates(dict_dir: str | Path, out: str | Path) -> int:
    """Emit noun and adjective lemmas, one per line, from a WordNet dict dir.

    Other parts of speech mostly shadow a noun/adjective form or name
    no concrete concept, so only index.noun and index.adj are read.
    Returns the emitted count.
    """
    root = Path(dict_dir)
    noun_index = root / "index.noun"
    adj_index = root / "index.adj"
    if not noun_index.is_file() or not adj_index.is_file():
        raise DatabaseMissing(
            f"{root} does not contain index.noun and index.adj"
        )
    lemmas = _read_index_lemmas(noun_index) + _read_index_lemmas(adj_index)
    if not lemmas:
        raise DatabaseMissing(f"{root}: index files contain no lemmas")
    write_labels(lemmas, out)
    return len(lemmas)
