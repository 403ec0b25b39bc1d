"""Bridge from vision-language models to negood matrix containers."""

from .encoders import ClipEncoder, HashEncoder, build_encoder
from .extract import (
    ExtractorConfig,
    collect_images,
    export_wordnet_candidates,
    extract_images,
    extract_text,
)

__version__ = "0.1.0"

__all__ = [
    "ClipEncoder",
    "HashEncoder",
    "build_encoder",
    "ExtractorConfig",
    "collect_images",
    "export_wordnet_candidates",
    "extract_images",
    "extract_text",
    "__version__",
]
