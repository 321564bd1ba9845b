"""Matplotlib rendering of decision plots and report figures to files."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .explain import DecisionPlotData
from .metrics import METRIC_NAMES, MetricReport

ATTACK_COLOR = "#d62728"  # red lines: predicted attack
NORMAL_COLOR = "#7d3c98"  # purple lines: predicted no-attack
BASE_COLOR = "#999999"

METRIC_LABELS = {"bac": "BAC", "f1": "F1", "g_mean": "G-Mean"}

# Stable ids and no embedded date keep the SVG output reproducible.
matplotlib.rcParams["svg.hashsalt"] = "opms"

_SAVE_KWARGS = {"metadata": {"Date": None}}


def render_decision_plot(dpd: DecisionPlotData, path: str | Path, title: str = "") -> None:
    """One polyline per sample from the base value through every feature."""
    names = dpd.feature_names
    d = len(names)
    base = dpd.display_base()
    cumulative = dpd.display_cumulative()
    fig, ax = plt.subplots(figsize=(6.0, max(3.0, 0.28 * d + 1.2)))
    ax.axvline(base, color=BASE_COLOR, linewidth=1.2, zorder=1)
    ys = list(range(d + 1))
    for i in range(cumulative.shape[0]):
        color = ATTACK_COLOR if dpd.predicted[i] == 1 else NORMAL_COLOR
        xs = [base] + cumulative[i].tolist()
        ax.plot(xs, ys, color=color, linewidth=0.9, alpha=0.75, zorder=2)
    ax.set_yticks(range(1, d + 1))
    ax.set_yticklabels(names, fontsize=7)
    ax.set_ylim(0, d)
    ax.set_xlabel("attack probability")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def decision_plot_csv(dpd: DecisionPlotData, path: str | Path) -> None:
    """Trajectories in display space: one row per sample, one column per step."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["sample", "predicted", "transform", "base"] + list(dpd.feature_names)
        )
        display = dpd.display_cumulative()
        base = dpd.display_base()
        for i in range(display.shape[0]):
            writer.writerow(
                [i, int(dpd.predicted[i]), dpd.display_transform, repr(base)]
                + [repr(float(v)) for v in display[i]]
            )


def render_metric_comparison(
    clean: MetricReport, noised: MetricReport, path: str | Path, title: str = ""
) -> None:
    """Clean-vs-noised bars per metric for one detector configuration."""
    labels = [METRIC_LABELS[m] for m in METRIC_NAMES]
    clean_means = [clean.summary(m).mean for m in METRIC_NAMES]
    noised_means = [noised.summary(m).mean for m in METRIC_NAMES]
    x = range(len(labels))
    width = 0.38
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.bar([i - width / 2 for i in x], clean_means, width, label="original", color="#4c72b0")
    ax.bar([i + width / 2 for i in x], noised_means, width, label="noised", color="#dd8452")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.legend(loc="lower right", fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def render_inference_times(
    timings: Mapping[str, Mapping[str, float]], path: str | Path, title: str = ""
) -> None:
    """Grouped bars of median per-sample latency, full vs selected features.

    `timings` maps a configuration label (e.g. "mlp/aggregated") to
    {"full": ns, "selected": ns}.
    """
    labels = sorted(timings)
    full = [timings[k].get("full", 0.0) / 1e3 for k in labels]
    selected = [timings[k].get("selected", 0.0) / 1e3 for k in labels]
    x = range(len(labels))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(labels)), 3.4))
    ax.bar([i - width / 2 for i in x], full, width, label="full features", color="#4c72b0")
    ax.bar(
        [i + width / 2 for i in x], selected, width, label="after selection", color="#55a868"
    )
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("inference time [µs/sample]")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
