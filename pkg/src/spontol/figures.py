"""Report figures rendered next to the delimited eval output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evalharness import EvalReport


def render_eval_figures(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Write comparisons.png and accuracy.png for an evaluation report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trials = [t.index for t in report.trials]
    written = []

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(
        trials,
        [t.mean_comparisons for t in report.trials],
        marker="o",
        label="spontol (schema-level scorings)",
    )
    ax.plot(
        trials,
        [t.baseline_comparisons for t in report.trials],
        linestyle="--",
        color="gray",
        label="baseline (linear scan)",
    )
    ax.set_xlabel("trial")
    ax.set_ylabel("mean comparisons per test story")
    ax.set_ylim(bottom=0)
    ax.legend()
    fig.tight_layout()
    target = out / "comparisons.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    written.append(target)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(trials, [t.accuracy for t in report.trials], marker="o", color="tab:green")
    ax.axhline(report.accuracy_mean, linestyle=":", color="black", label="mean")
    ax.set_xlabel("trial")
    ax.set_ylabel(f"recall of baseline top-{report.params.k}")
    ax.set_ylim(0, 1.05)
    ax.legend()
    fig.tight_layout()
    target = out / "accuracy.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    written.append(target)
    return written
