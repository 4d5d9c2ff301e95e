"""Deterministic CSV tables, plot-data files and rendered figures.

Floats are written with 17 significant digits and LF line endings so
repeated runs produce byte-identical tables; figures carry fixed
metadata for the same reason.
"""

from __future__ import annotations

import csv
import io

__all__ = [
    "fmt_value",
    "write_csv",
    "read_csv",
    "emit_plot_data",
    "render_figure",
]


def fmt_value(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_value(x) for x in row])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def read_csv(path):
    """Load a table back; numeric cells become floats, booleans booleans."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for raw in reader:
            row = []
            for cell in raw:
                if cell == "true":
                    row.append(True)
                elif cell == "false":
                    row.append(False)
                else:
                    try:
                        row.append(float(cell))
                    except ValueError:
                        row.append(cell)
            rows.append(row)
    return header, rows


def emit_plot_data(xs, ys, path):
    """Two-column plain-text series readable by any plotting tool."""
    lines = [f"{fmt_value(float(x))} {fmt_value(float(y))}" for x, y in zip(xs, ys)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


_FIGURE_METADATA = {"Software": "nevlab"}


def render_figure(path, series, xlabel, ylabel, title=None, logx=False, logy=False):
    """Render line series {label: (xs, ys)} to a PNG next to the data."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    for label, (xs, ys) in series.items():
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata=_FIGURE_METADATA)
    plt.close(fig)


def render_bar_figure(path, labels, groups, ylabel, title=None):
    """Grouped bar chart: groups = {series label: [values per label]}."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    x = np.arange(len(labels))
    width = 0.8 / max(1, len(groups))
    for i, (label, vals) in enumerate(groups.items()):
        ax.bar(x + i * width, vals, width, label=label)
    ax.set_xticks(x + 0.4 - width / 2)
    ax.set_xticklabels(labels, rotation=20, fontsize=8)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata=_FIGURE_METADATA)
    plt.close(fig)
