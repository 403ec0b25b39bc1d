"""Pluggable text/image encoders.

``ClipEncoder`` wraps a CLIP checkpoint through transformers and is
the production path. ``HashEncoder`` derives deterministic pseudo
embeddings from SHA-256 digests; it has no semantics but exercises the
full extraction pipeline offline (tests, format checks, dry runs).
"""

from __future__ import annotations

import hashlib
from typing import Protocol, Sequence

import numpy as np

from .errors import EncodeError, ModelLoadError


class Encoder(Protocol):
    dims: int

    def encode_text(self, texts: Sequence[str]) -> np.ndarray: ...

    def encode_images(self, images: Sequence) -> np.ndarray: ...


class HashEncoder:
    """Deterministic stand-in encoder (unit rows from content digests)."""

    def __init__(self, dims: int = 64):
        self.dims = dims

    def _vector(self, payload: bytes) -> np.ndarray:
        # Expand the digest into enough bytes, then center to [-0.5, 0.5].
        blocks = []
        counter = 0
        while sum(len(b) for b in blocks) < 4 * self.dims:
            blocks.append(hashlib.sha256(payload + counter.to_bytes(4, "little")).digest())
            counter += 1
        raw = b"".join(blocks)[: 4 * self.dims]
        ints = np.frombuffer(raw, dtype="<u4").astype(np.float64)
        return ints / 2**32 - 0.5

    def encode_text(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self._vector(t.encode("utf-8")) for t in texts])

    def encode_images(self, images: Sequence) -> np.ndarray:
        return np.stack([self._vector(img.tobytes()) for img in images])


class ClipEncoder:
    """CLIP text/image towers loaded lazily from a checkpoint id."""

    def __init__(self, model_id: str, device: str = "cpu", batch_size: int = 32):
        self.model_id = model_id
        self.device = device
        self.batch_size = batch_size
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ModelLoadError(f"clip backend unavailable: {exc}") from exc
        try:
            self._torch = torch
            self._model = CLIPModel.from_pretrained(model_id).to(device).eval()
            self._processor = CLIPProcessor.from_pretrained(model_id)
        except Exception as exc:
            raise ModelLoadError(f"cannot load {model_id}: {exc}") from exc
        self.dims = int(self._model.config.projection_dim)

    def _batched(self, items, encode_one_batch):
        chunks = []
        for lo in range(0, len(items), self.batch_size):
            chunks.append(encode_one_batch(items[lo : lo + self.batch_size]))
        return np.concatenate(chunks, axis=0)

    def encode_text(self, texts: Sequence[str]) -> np.ndarray:
        torch = self._torch

        def run(batch):
            inputs = self._processor(
                text=list(batch), return_tensors="pt", padding=True, truncation=True
            ).to(self.device)
            with torch.no_grad():
                feats = self._model.get_text_features(**inputs)
            return feats.cpu().numpy().astype(np.float64)

        try:
            return self._batched(list(texts), run)
        except Exception as exc:
            raise EncodeError(f"text encoding failed: {exc}") from exc

    def encode_images(self, images: Sequence) -> np.ndarray:
        torch = self._torch

        def run(batch):
            inputs = self._processor(images=list(batch), return_tensors="pt").to(
                self.device
            )
            with torch.no_grad():
                feats = self._model.get_image_features(**inputs)
            return feats.cpu().numpy().astype(np.float64)

        try:
            return self._batched(list(images), run)
        except Exception as exc:
            raise EncodeError(f"image encoding failed: {exc}") from exc


def build_encoder(name: str, model_id: str, device: str, batch_size: int, dims: int) -> Encoder:
    if name == "clip":
        return ClipEncoder(model_id, device=device, batch_size=batch_size)
    if name == "hash":
        return HashEncoder(dims=dims)
    raise ModelLoadError(f"unknown encoder {name!r}")
