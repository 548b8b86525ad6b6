"""Matplotlib figures for the report commands.

All figures go through :func:`save`, which strips the volatile metadata so
the same inputs always produce the same file bytes.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .durations import MS_PER_DAY  # noqa: E402

STYLE = {
    "figure.figsize": (7, 4),
    "figure.dpi": 100,
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "procmine",
}


def save(fig, path):
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "png"
    if fmt == "png":
        metadata = {"Software": None}
    elif fmt == "svg":
        metadata = {"Date": None, "Creator": None}
    elif fmt == "pdf":
        metadata = {"CreationDate": None, "ModDate": None, "Producer": None, "Creator": None}
    else:
        metadata = None
    fig.savefig(path, format=fmt, metadata=metadata, bbox_inches="tight")
    plt.close(fig)


def case_duration_histogram(durations_ms, path, bins=30):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        days = [d / MS_PER_DAY for d in durations_ms]
        ax.hist(days, bins=bins, color="#4C72B0", edgecolor="white")
        if days:
            mean = sum(days) / len(days)
            ax.axvline(mean, color="#C44E52", linestyle="--", label=f"mean {mean:.1f} d")
            ax.legend(frameon=False)
        ax.set_xlabel("case duration (days)")
        ax.set_ylabel("cases")
        save(fig, path)


def involvement_bars(rows, path):
    """Horizontal bars of event share per resource, largest on top."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        names = [r.resource for r in rows][::-1]
        pcts = [float(r.coverage_pct) for r in rows][::-1]
        bars = ax.barh(names, pcts, color="#55A868")
        for bar, pct in zip(bars, pcts):
            ax.text(bar.get_width(), bar.get_y() + bar.get_height() / 2, f" {pct:.2f}%", va="center", fontsize=8)
        ax.set_xlabel("coverage (% of events)")
        save(fig, path)


def cohort_bars(report, path):
    """Mean and median stage time for both cohorts, in days."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        labels = ["mean", "median"]
        width = 0.35
        for offset, label, stats, color in (
            (-width / 2, report.label_a, report.stage_stats_a, "#4C72B0"),
            (width / 2, report.label_b, report.stage_stats_b, "#DD8452"),
        ):
            values = [0.0, 0.0] if stats is None else [stats.mean / MS_PER_DAY, stats.median / MS_PER_DAY]
            ax.bar([i + offset for i in range(2)], values, width, label=label, color=color)
        ax.set_xticks(range(2))
        ax.set_xticklabels(labels)
        ax.set_ylabel("stage time (days)")
        ax.legend(frameon=False)
        save(fig, path)


def edge_frequency_bars(graph, path, top=15):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7, max(2.5, 0.3 * min(top, len(graph.edges)) + 1)))
        edges = sorted(graph.edges.values(), key=lambda e: (-e.pair_frequency, e.source, e.target))[:top][::-1]
        ax.barh([f"{e.source} -> {e.target}" for e in edges], [e.pair_frequency for e in edges], color="#8172B3")
        ax.set_xlabel("directly-follows occurrences")
        ax.tick_params(axis="y", labelsize=7)
        save(fig, path)
