"""Render graph statistics to figure files and delimited output.

Each distribution in a stats report becomes one PNG bar chart plus a
CSV with the same numbers, written side by side so the figures are
always reproducible from the delimited data.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .graph import StatsReport


def _write_csv(path: Path, header: tuple[str, str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _bar_chart(path: Path, labels, values, title: str, xlabel: str, ylabel: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(values)), values, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels([str(l) for l in labels], rotation=45, ha="right", fontsize=8)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_stats_report(stats: StatsReport, out_dir: str | Path) -> list[Path]:
    """Write the PNG + CSV pairs for each distribution; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    grounding = sorted(stats.grounding_per_concept.items())
    csv_path = out / "grounding_per_concept.csv"
    _write_csv(csv_path, ("triplets_per_concept", "concepts"), grounding)
    written.append(csv_path)
    if grounding:
        png_path = out / "grounding_per_concept.png"
        _bar_chart(
            png_path,
            [k for k, _ in grounding],
            [v for _, v in grounding],
            "Multimodal data per concept",
            "triplets touching the concept",
            "concepts",
        )
        written.append(png_path)

    lengths = sorted(stats.description_word_lengths.items())
    csv_path = out / "description_word_lengths.csv"
    _write_csv(csv_path, ("words", "descriptions"), lengths)
    written.append(csv_path)
    if lengths:
        png_path = out / "description_word_lengths.png"
        _bar_chart(
            png_path,
            [k for k, _ in lengths],
            [v for _, v in lengths],
            "Description length distribution",
            "words per description",
            "descriptions",
        )
        written.append(png_path)

    categories = sorted(stats.category_counts.items())
    csv_path = out / "category_counts.csv"
    _write_csv(csv_path, ("category", "triplets"), categories)
    written.append(csv_path)
    if categories:
        png_path = out / "category_counts.png"
        _bar_chart(
            png_path,
            [k for k, _ in categories],
            [v for _, v in categories],
            "Category distribution",
            "category",
            "triplets",
        )
        written.append(png_path)

    return written
