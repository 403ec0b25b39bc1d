"""Figure rendering for sweep and theory tables.

Reads the delimited outputs produced by the CLI and renders matplotlib
figures next to them. PNG metadata is stripped so reruns are
byte-identical.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import IoFailure, ValidationError

_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}


def _read_csv(path: str | Path) -> list[dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return rows


def render_sweep(csv_path: str | Path, out_dir: str | Path) -> list[str]:
    """FPR and AUROC versus negative-label count, one line per config.

    Emits sweep_fpr.png, sweep_auroc.png, and report_summary.csv (the
    best cell per variant) into ``out_dir``.
    """
    rows = _read_csv(csv_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    series: dict[tuple, list[tuple[int, float, float]]] = {}
    for r in rows:
        key = (r["variant"], r["tau"], r["n_groups"])
        series.setdefault(key, []).append(
            (int(r["m"]), float(r["fpr"]), float(r["auroc"]))
        )

    written = []
    for metric, column, ylabel in (("fpr", 1, "FPR at TPR target"), ("auroc", 2, "AUROC")):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for key in sorted(series):
            pts = sorted(series[key])
            label = f"{key[0]} tau={key[1]} groups={key[2]}"
            ax.plot([p[0] for p in pts], [p[column] for p in pts], marker="o", label=label)
        ax.set_xscale("log")
        ax.set_xlabel("negative labels (M)")
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out / f"sweep_{metric}.png"
        fig.savefig(path, **_SAVE_KW)
        plt.close(fig)
        written.append(str(path))

    summary = out / "report_summary.csv"
    best: dict[str, dict[str, str]] = {}
    for r in rows:
        cur = best.get(r["variant"])
        if cur is None or float(r["auroc"]) > float(cur["auroc"]):
            best[r["variant"]] = r
    with open(summary, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["variant", "m", "tau", "n_groups", "auroc", "fpr"])
        for variant in sorted(best):
            r = best[variant]
            writer.writerow([r["variant"], r["m"], r["tau"], r["n_groups"], r["auroc"], r["fpr"]])
    written.append(str(summary))
    return written


def render_theory(csv_path: str | Path, out_dir: str | Path) -> list[str]:
    """Closed-form FPR curve with Monte Carlo overlay."""
    rows = _read_csv(csv_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    ms = [int(r["m"]) for r in rows]
    closed = [float(r["fpr_closed"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ms, closed, marker="o", label="closed form")
    if rows and rows[0].get("fpr_mc", "") != "":
        mc = [float(r["fpr_mc"]) for r in rows]
        err = [float(r["mc_stderr"]) for r in rows]
        ax.errorbar(ms, mc, yerr=err, fmt="x", capsize=3, label="simulated")
    ax.set_xscale("log")
    ax.set_xlabel("negative labels (M)")
    ax.set_ylabel("FPR at TPR target")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out / "theory_fpr.png"
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return [str(path)]
