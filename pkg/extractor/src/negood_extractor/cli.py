"""CLI: text, images, and wordnet subcommands."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .encoders import build_encoder
from .errors import ExtractorError, IoFailure
from .extract import ExtractorConfig, export_wordnet_candidates, extract_images, extract_text


def _add_encoder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--encoder", choices=["clip", "hash"], default="clip",
                   help="embedding backend")
    p.add_argument("--model-id", default="openai/clip-vit-base-patch16",
                   help="checkpoint id for the clip backend")
    p.add_argument("--hash-dims", type=int, default=64,
                   help="embedding width for the hash backend")
    p.add_argument("--device", default="cpu")
    p.add_argument("--batch-size", type=int, default=32)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="negood-extract",
        description="Produce negood containers from a vision-language model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("text", help="encode prompted labels",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--labels", required=True, help="label file, one per line")
    p.add_argument("--template", default="The nice <label>.",
                   help="prompt template with one <label> placeholder")
    p.add_argument("--out", required=True, help="embeddings container path")
    _add_encoder_flags(p)

    p = sub.add_parser("images", help="encode an image directory",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--dir", required=True, help="directory scanned recursively")
    p.add_argument("--out", required=True, help="embeddings container path")
    p.add_argument("--manifest", required=True, help="row-order manifest path")
    p.add_argument("--skip-bad", action="store_true",
                   help="skip undecodable images instead of aborting")
    _add_encoder_flags(p)

    p = sub.add_parser("wordnet", help="export noun/adjective lemmas",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--dict", required=True, help="WordNet dict directory")
    p.add_argument("--out", required=True, help="label file path")

    return parser


def _read_labels(path: str) -> list[str]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return [line for line in lines if line]


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "wordnet":
            count = export_wordnet_candidates(args.dict, args.out)
            print(f"exported {count} candidate labels -> {args.out}")
            return 0
        cfg = ExtractorConfig(
            model_id=args.model_id,
            prompt_template=getattr(args, "template", "The nice <label>."),
            batch_size=args.batch_size,
            device=args.device,
            skip_bad_images=getattr(args, "skip_bad", False),
        )
        encoder = build_encoder(
            args.encoder, args.model_id, args.device, args.batch_size, args.hash_dims
        )
        if args.command == "text":
            count = extract_text(_read_labels(args.labels), cfg, encoder, args.out)
            print(f"encoded {count} labels -> {args.out}")
        else:
            count = extract_images(args.dir, cfg, encoder, args.out, args.manifest)
            print(f"encoded {count} images -> {args.out}")
        return 0
    except ExtractorError as exc:
        print(f"error-code: {exc.code}", file=sys.stderr)
        print(str(exc), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error-code: io-failure\n{exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
