"""Figures for the analysis and evaluation reports (written to files, never shown)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .corpus import RELATIONS, AnalysisReport  # noqa: E402
from .metrics import ERROR_KINDS, ErrorBreakdown  # noqa: E402

_STYLE = {"font.size": 9, "axes.spines.top": False, "axes.spines.right": False,
          "savefig.dpi": 120, "figure.figsize": (6.0, 3.2)}


def _bars(ax, labels, values, ylabel, color="0.35"):
    xs = range(len(labels))
    ax.bar(xs, values, color=color, width=0.7)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=45 if len(labels) > 6 else 0, ha="right" if len(labels) > 6 else "center")
    ax.set_ylabel(ylabel)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_analysis(report: AnalysisReport, out_dir) -> list[Path]:
    """Document-length and quadruple-count histograms plus cross-sentence ratios."""
    out_dir = Path(out_dir)
    written = []
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        h = report.doc_length_histogram
        _bars(ax, list(h), list(h.values()), "documents")
        ax.set_xlabel("document length (tokens)")
        written.append(_save(fig, out_dir / "doc_length.png"))

        fig, ax = plt.subplots()
        h = report.quad_count_histogram
        _bars(ax, list(h), list(h.values()), "documents")
        ax.set_xlabel("quadruples per document")
        written.append(_save(fig, out_dir / "quad_count.png"))

        fig, ax = plt.subplots(figsize=(4.0, 3.2))
        _bars(ax, list(RELATIONS), [report.cross_sentence_ratio[r] for r in RELATIONS],
              "cross-sentence share")
        ax.set_ylim(0, 1)
        written.append(_save(fig, out_dir / "cross_sentence.png"))
    return written


def plot_errors(breakdown: ErrorBreakdown, path) -> Path:
    rates = breakdown.rates
    colors = ["0.25"] * 3 + ["0.5"] * 3 + ["0.75"] * 2
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        _bars(ax, list(ERROR_KINDS), [100 * rates[k] for k in ERROR_KINDS], "% of gold quadruples",
              color=colors)
        ax.set_xlabel("error type")
        return _save(fig, path)


def plot_training(records: list, path) -> Path:
    """Per-epoch training loss and dev quadruple F1."""
    epochs = [r["epoch"] for r in records]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(epochs, [r["loss"] for r in records], color="0.2", label="train loss")
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        if records and "dev" in records[0]:
            ax2 = ax.twinx()
            ax2.plot(epochs, [r["dev"]["quadruple"]["F1"] for r in records], color="tab:red",
                     label="dev quadruple F1")
            ax2.set_ylabel("dev F1")
            ax2.set_ylim(0, 1)
        return _save(fig, path)
