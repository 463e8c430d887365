"""Delimited and graphical report outputs for eval and bench runs."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .presenteval import ALL_DIMENSIONS, QUESTIONS_PER_DOC

_DIM_LABELS = {
    "video_narrative_coherence": "Video\nNarr. Coh.",
    "video_visual_appeal": "Video\nVisual",
    "video_comprehension_difficulty": "Video\nComp.",
    "audio_narrative_coherence": "Audio\nNarr. Coh.",
    "audio_appeal": "Audio\nAppeal",
    "audio_comprehension_difficulty": "Audio\nComp.",
}


def write_eval_outputs(report: dict, out_dir: str | Path) -> None:
    """report.csv plus a per-dimension score figure for one evaluated deck."""
    out_dir = Path(out_dir)
    fig_dir = out_dir / "figures"
    fig_dir.mkdir(exist_ok=True)

    with open(out_dir / "report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        if report.get("quiz"):
            writer.writerow(["quiz_accuracy", f"{report['quiz']['accuracy']:.2f}"])
            writer.writerow(["quiz_correct",
                             f"{report['quiz']['correct_count']}/{QUESTIONS_PER_DOC}"])
        for dim in ALL_DIMENSIONS:
            if dim in report.get("scores", {}):
                writer.writerow([dim, report["scores"][dim]["value"]])
        for key in ("video_mean", "audio_mean"):
            if report.get(key) is not None:
                writer.writerow([key, f"{report[key]:.2f}"])

    dims = [d for d in ALL_DIMENSIONS if d in report.get("scores", {})]
    if dims:
        values = [report["scores"][d]["value"] for d in dims]
        fig, ax = plt.subplots(figsize=(9, 4.5))
        colors = ["#2e6ebe" if d.startswith("video") else "#3d9970" for d in dims]
        ax.bar([_DIM_LABELS[d] for d in dims], values, color=colors)
        ax.set_ylim(0, 5)
        ax.set_ylabel("score (1-5)")
        ax.set_title("Subjective scores by dimension")
        for mean_key, style in (("video_mean", "#2e6ebe"), ("audio_mean", "#3d9970")):
            if report.get(mean_key) is not None:
                ax.axhline(report[mean_key], color=style, linestyle="--", linewidth=1)
        fig.tight_layout()
        fig.savefig(fig_dir / "scores.png", dpi=120)
        plt.close(fig)


def write_suite_outputs(suite: dict, out_dir: str | Path) -> None:
    """suite_report.csv plus accuracy and mean-score figures across pairs."""
    out_dir = Path(out_dir)
    fig_dir = out_dir / "figures"
    fig_dir.mkdir(exist_ok=True)

    rows = suite["pairs"]
    agg = suite["aggregate"]
    with open(out_dir / "suite_report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair", "document", "status", "accuracy",
                         "video_mean", "audio_mean"])
        for r in rows:
            writer.writerow([r["pair"], r["document"], r["status"],
                             r.get("accuracy", ""), r.get("video_mean", ""),
                             r.get("audio_mean", "")])
        writer.writerow(["aggregate", "", f"{agg['ok_count']}/{agg['pair_count']} ok",
                         agg.get("accuracy", ""), agg.get("video_mean", ""),
                         agg.get("audio_mean", "")])

    ok = [r for r in rows if r["status"] == "ok"]
    if not ok:
        return
    labels = [f"pair {r['pair']}" for r in ok]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
    ax1.bar(labels, [r["accuracy"] for r in ok], color="#2e6ebe")
    if agg.get("accuracy") is not None:
        ax1.axhline(agg["accuracy"], color="black", linestyle="--", linewidth=1,
                    label=f"aggregate {agg['accuracy']:.2f}")
        ax1.legend()
    ax1.set_ylim(0, 1)
    ax1.set_ylabel("quiz accuracy")
    ax1.set_title("Quiz accuracy per pair")

    width = 0.38
    x = range(len(ok))
    ax2.bar([i - width / 2 for i in x], [r["video_mean"] for r in ok],
            width, color="#2e6ebe", label="video mean")
    ax2.bar([i + width / 2 for i in x], [r["audio_mean"] for r in ok],
            width, color="#3d9970", label="audio mean")
    ax2.set_xticks(list(x), labels)
    ax2.set_ylim(0, 5)
    ax2.set_ylabel("mean score (1-5)")
    ax2.set_title("Subjective means per pair")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(fig_dir / "suite_scores.png", dpi=120)
    plt.close(fig)
