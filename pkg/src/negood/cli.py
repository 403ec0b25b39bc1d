"""Command-line pipeline: mine, score, eval, theory, synth, sweep, report.

Every subcommand is a pure function of its flags and input files, so
reruns produce byte-identical outputs. Flag values take precedence
over an optional JSON config file (--config), which takes precedence
over built-in defaults. Exit codes: 0 success, 2 validation error,
3 I/O error, 4 internal error; failures print a machine-greppable
``error-code:`` line on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .containers import (
    FORMAT_VERSION,
    MatrixContainer,
    MatrixKind,
    load_labels,
    load_matrix,
    save_matrix,
)
from .errors import BadLambda, IoFailure, ToolkitError, ValidationError
from .metrics import evaluate
from .mining import MiningConfig, dedup_candidates, load_selection, mine, save_selection
from .report import render_sweep, render_theory
from .scoring import ScoreConfig, ScoreVariant, score_batch
from .synth import SynthSpec, generate, spec_from_json, write_outputs
from .theory import TheoryParams, fpr_closed_form, fpr_derivative_in_m, monte_carlo_fpr

_VARIANT_CHOICES = [v.value for v in ScoreVariant]


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from exc


def _write_text(path: str | Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _write_scores_csv(path: str | Path, scores: np.ndarray) -> None:
    lines = ["sample_index,score\n"]
    lines += [f"{i},{_fmt(s)}\n" for i, s in enumerate(scores)]
    _write_text(path, "".join(lines))


def _read_scores_csv(path: str | Path) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != "sample_index,score":
        raise ValidationError(f"{path}: expected a 'sample_index,score' CSV header")
    if len(lines) == 1:
        raise ValidationError(f"{path}: no score rows")
    try:
        return np.array([float(ln.split(",")[1]) for ln in lines[1:]], dtype=np.float64)
    except (IndexError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed score row: {exc}") from exc


def _read_mask(path: str | Path) -> np.ndarray:
    try:
        lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln]
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not lines or any(ln not in ("0", "1") for ln in lines):
        raise ValidationError(f"{path}: mask file must hold one 0/1 per line")
    return np.array([ln == "1" for ln in lines], dtype=bool)


def cmd_mine(args) -> int:
    id_emb = load_matrix(args.id_emb)
    cand_emb = load_matrix(args.cand_emb)
    cand_labels = load_labels(args.cand_labels)
    cfg = MiningConfig(eta=args.eta, m=args.m, block_rows=args.block_rows)
    sel = mine(id_emb, cand_emb, cand_labels, cfg, threads=args.threads)
    provenance = {
        "id_emb": _sha256(args.id_emb),
        "cand_emb": _sha256(args.cand_emb),
        "cand_labels": _sha256(args.cand_labels),
    }
    save_selection(sel, cfg, args.out, provenance)
    print(f"selected {len(sel)} negatives -> {args.out}")
    return 0


def _assemble_similarities(args) -> tuple[MatrixContainer, int]:
    if args.sims is not None:
        if args.k is None:
            raise ValidationError("--sims requires --k (ID column count)")
        sims = load_matrix(args.sims)
        if sims.kind != MatrixKind.SIMILARITIES:
            raise ValidationError(f"{args.sims} is not a similarities container")
        return sims, args.k
    if args.images is None or args.id_emb is None:
        raise ValidationError("provide either --sims/--k or --images/--id-emb")
    from .containers import cosine_matrix

    images = load_matrix(args.images)
    id_emb = load_matrix(args.id_emb)
    if args.neg_emb is not None:
        neg_emb = load_matrix(args.neg_emb)
    elif args.selection is not None and args.cand_emb is not None:
        if args.cand_labels is None:
            raise ValidationError("--selection needs --cand-emb and --cand-labels")
        sel, _ = load_selection(args.selection)
        cand_emb = load_matrix(args.cand_emb)
        cand_labels = load_labels(args.cand_labels)
        unique, index_map = dedup_candidates(cand_labels)
        if any(i < 0 or i >= len(index_map) for i in sel.indices):
            raise ValidationError("selection indices exceed candidate list")
        rows = [index_map[i] for i in sel.indices]
        for sel_lab, idx in zip(sel.labels, sel.indices):
            if unique[idx] != sel_lab:
                raise ValidationError(
                    f"selection label {sel_lab!r} does not match candidates"
                )
        neg_emb = MatrixContainer(cand_emb.kind, cand_emb.data[np.asarray(rows)])
    else:
        raise ValidationError("provide --neg-emb or --selection with --cand-emb")
    sim_id = cosine_matrix(images, id_emb, threads=args.threads)
    sim_neg = cosine_matrix(images, neg_emb, threads=args.threads)
    stacked = np.hstack([sim_id.data, sim_neg.data])
    return MatrixContainer(MatrixKind.SIMILARITIES, stacked), id_emb.rows


def cmd_score(args) -> int:
    sims, k = _assemble_similarities(args)
    cfg = ScoreConfig(
        variant=args.variant,
        tau=args.tau,
        n_groups=args.n_groups,
        alpha=args.alpha,
        beta=args.beta,
        shuffle_seed=args.shuffle_seed,
    )
    batch = score_batch(sims, k, cfg, threads=args.threads)
    _write_scores_csv(args.out, batch.scores)
    print(f"scored {len(batch)} samples ({batch.m_effective} negatives used) -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    if args.scores is not None:
        if args.mask is None:
            raise ValidationError("--scores requires --mask")
        scores = _read_scores_csv(args.scores)
        mask = _read_mask(args.mask)
        if len(mask) != len(scores):
            raise ValidationError(
                f"mask has {len(mask)} rows but scores {len(scores)}"
            )
        id_scores, ood_scores = scores[mask], scores[~mask]
    elif args.id_scores is not None and args.ood_scores is not None:
        id_scores = _read_scores_csv(args.id_scores)
        ood_scores = _read_scores_csv(args.ood_scores)
    else:
        raise ValidationError("provide --id-scores/--ood-scores or --scores/--mask")
    if not 0.0 < args.tpr <= 1.0:
        raise BadLambda(f"--tpr must be in (0, 1], got {args.tpr}")
    result = evaluate(id_scores, ood_scores, args.tpr)
    text = json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out:
        _write_text(args.out, text)
    return 0


def cmd_theory(args) -> int:
    header = "m,p1,p2,lambda,fpr_closed,dfpr_dm,fpr_mc,mc_stderr\n"
    lines = [header]
    for m in args.m:
        tp = TheoryParams(m=m, p1=args.p1, p2=args.p2, lam=args.tpr)
        closed = fpr_closed_form(tp)
        deriv = fpr_derivative_in_m(tp)
        if args.mc_samples > 0:
            fpr_mc, stderr = monte_carlo_fpr(tp, args.mc_samples, args.mc_samples, args.seed)
            mc_cols = f"{_fmt(fpr_mc)},{_fmt(stderr)}"
        else:
            mc_cols = ","
        lines.append(
            f"{m},{_fmt(args.p1)},{_fmt(args.p2)},{_fmt(args.tpr)},"
            f"{_fmt(closed)},{_fmt(deriv)},{mc_cols}\n"
        )
    table = "".join(lines)
    sys.stdout.write(table)
    if args.out:
        _write_text(args.out, table)
    return 0


def cmd_synth(args) -> int:
    spec = spec_from_json(args.spec)
    paths = write_outputs(spec, args.out_dir)
    print(f"wrote {paths['similarities']} and manifest")
    return 0


def cmd_sweep(args) -> int:
    header = (
        "variant,m,tau,n_groups,k,n_id,n_ood,p1,p2,mu_pos,mu_neg,sigma,seed,"
        "lambda,auroc,fpr,threshold\n"
    )
    lines = [header]
    for variant in args.variants:
        for m in args.m_grid:
            for tau in args.tau_grid:
                for n_groups in args.ng_grid:
                    spec = SynthSpec(
                        k=args.k, m=m, n_id=args.n_id, n_ood=args.n_ood,
                        p1=args.p1, p2=args.p2, mu_pos=args.mu_pos,
                        mu_neg=args.mu_neg, sigma=args.sigma, seed=args.seed,
                    )
                    sims, id_mask, _ = generate(spec)
                    cfg = ScoreConfig(
                        variant=variant, tau=tau, n_groups=n_groups,
                        alpha=args.alpha, beta=args.beta,
                    )
                    batch = score_batch(sims, args.k, cfg, threads=args.threads)
                    met = evaluate(
                        batch.scores[id_mask], batch.scores[~id_mask], args.tpr
                    )
                    lines.append(
                        f"{variant},{m},{_fmt(tau)},{n_groups},{args.k},"
                        f"{args.n_id},{args.n_ood},{_fmt(args.p1)},{_fmt(args.p2)},"
                        f"{_fmt(args.mu_pos)},{_fmt(args.mu_neg)},{_fmt(args.sigma)},"
                        f"{args.seed},{_fmt(args.tpr)},{_fmt(met.auroc)},"
                        f"{_fmt(met.fpr_at_lambda)},{_fmt(met.threshold)}\n"
                    )
    table = "".join(lines)
    _write_text(args.out, table)
    print(f"wrote {len(lines) - 1} sweep rows -> {args.out}")
    return 0


def cmd_report(args) -> int:
    written: list[str] = []
    if args.sweep is None and args.theory is None:
        raise ValidationError("provide --sweep and/or --theory tables to render")
    if args.sweep is not None:
        written += render_sweep(args.sweep, args.out_dir)
    if args.theory is not None:
        written += render_theory(args.theory, args.out_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="negood",
        description="Zero-shot OOD detection with mined negative labels.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"negood {__version__} (container-format {FORMAT_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    def subparser(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(
            name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter
        )
        p.add_argument("--config", default=None, help="JSON file with flag defaults")
        p.add_argument(
            "--threads", type=int, default=os.cpu_count() or 1,
            help="worker thread cap (outputs are thread-count invariant)",
        )
        registry[name] = p
        return p

    p = subparser("mine", "select negative labels far from the ID label space")
    p.add_argument("--id-emb", required=True, help="ID label embeddings container")
    p.add_argument("--cand-emb", required=True, help="candidate embeddings container")
    p.add_argument("--cand-labels", required=True, help="candidate label file")
    p.add_argument("--eta", type=float, default=0.05, help="distance percentile level")
    p.add_argument("--m", type=int, default=10000, help="negatives to select")
    p.add_argument("--block-rows", type=int, default=1024, help="candidate rows per block")
    p.add_argument("--out", required=True, help="selection JSON path")

    p = subparser("score", "compute detection scores over the extended label space")
    p.add_argument("--sims", default=None, help="precomputed similarities container")
    p.add_argument("--k", type=int, default=None, help="ID column count for --sims")
    p.add_argument("--images", default=None, help="image embeddings container")
    p.add_argument("--id-emb", default=None, help="ID label embeddings container")
    p.add_argument("--neg-emb", default=None, help="negative embeddings container")
    p.add_argument("--selection", default=None, help="selection JSON (with --cand-emb)")
    p.add_argument("--cand-emb", default=None, help="candidate embeddings container")
    p.add_argument("--cand-labels", default=None, help="candidate label file")
    p.add_argument("--variant", choices=_VARIANT_CHOICES, default="sum-softmax")
    p.add_argument("--tau", type=float, default=0.01, help="softmax temperature")
    p.add_argument("--n-groups", type=int, default=100, help="negative label groups")
    p.add_argument("--alpha", type=float, default=0.1, help="linear-combination weight")
    p.add_argument("--beta", type=float, default=0.25, help="binarization threshold")
    p.add_argument("--shuffle-seed", type=int, default=None,
                   help="shuffle negatives before grouping (default: rank order)")
    p.add_argument("--out", required=True, help="scores CSV path")

    p = subparser("eval", "AUROC and FPR at a TPR target from score files")
    p.add_argument("--id-scores", default=None, help="ID scores CSV")
    p.add_argument("--ood-scores", default=None, help="OOD scores CSV")
    p.add_argument("--scores", default=None, help="combined scores CSV (with --mask)")
    p.add_argument("--mask", default=None, help="0/1 per line, 1 marks ID rows")
    p.add_argument("--tpr", type=float, default=0.95, help="TPR target")
    p.add_argument("--out", default=None, help="also write metrics JSON here")

    p = subparser("theory", "closed-form and simulated FPR for the count model")
    p.add_argument("--m", type=_int_list, default=[10000], help="comma list of M values")
    p.add_argument("--p1", type=float, required=True, help="ID match probability")
    p.add_argument("--p2", type=float, required=True, help="OOD match probability")
    p.add_argument("--tpr", type=float, default=0.95, help="TPR target")
    p.add_argument("--mc-samples", type=int, default=100000,
                   help="Monte Carlo samples per side (0 disables)")
    p.add_argument("--seed", type=int, default=0, help="simulation seed")
    p.add_argument("--out", default=None, help="also write the table here")

    p = subparser("synth", "generate a synthetic similarity matrix from a spec")
    p.add_argument("--spec", required=True, help="SynthSpec JSON file")
    p.add_argument("--out-dir", required=True, help="output directory")

    p = subparser("sweep", "grid of synth+score+eval cells, one CSV row each")
    p.add_argument("--variants", type=lambda s: [ScoreVariant(v) for v in s.split(",") if v],
                   default=[ScoreVariant.SUM_SOFTMAX], help="comma list of variants")
    p.add_argument("--m-grid", type=_int_list, default=[100, 500, 2000])
    p.add_argument("--tau-grid", type=_float_list, default=[0.01])
    p.add_argument("--ng-grid", type=_int_list, default=[1])
    p.add_argument("--k", type=int, default=100, help="ID label count")
    p.add_argument("--n-id", type=int, default=4000)
    p.add_argument("--n-ood", type=int, default=4000)
    p.add_argument("--p1", type=float, default=0.05)
    p.add_argument("--p2", type=float, default=0.15)
    p.add_argument("--mu-pos", type=float, default=0.3)
    p.add_argument("--mu-neg", type=float, default=0.1)
    p.add_argument("--sigma", type=float, default=0.02)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tpr", type=float, default=0.95)
    p.add_argument("--out", required=True, help="sweep CSV path")

    p = subparser("report", "render figures from sweep/theory tables")
    p.add_argument("--sweep", default=None, help="sweep CSV to plot")
    p.add_argument("--theory", default=None, help="theory CSV to plot")
    p.add_argument("--out-dir", required=True, help="directory for figures")

    return parser, registry


_COMMANDS = {
    "mine": cmd_mine,
    "score": cmd_score,
    "eval": cmd_eval,
    "theory": cmd_theory,
    "synth": cmd_synth,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            print(f"error-code: io-failure\n{exc}", file=sys.stderr)
            return 3
        except json.JSONDecodeError as exc:
            print(f"error-code: validation\nbad config JSON: {exc}", file=sys.stderr)
            return 2
        # Config fills defaults; explicit flags still win on the re-parse.
        registry[args.command].set_defaults(
            **{k.replace("-", "_"): v for k, v in overrides.items()}
        )
        args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ToolkitError as exc:
        print(f"error-code: {exc.code}", file=sys.stderr)
        print(str(exc), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error-code: io-failure\n{exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error-code: internal\n{exc!r}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
