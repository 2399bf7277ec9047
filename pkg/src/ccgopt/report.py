"""Render solver and optimizer traces to figure files.

The CLI emits delimited traces; this module turns them into the two
standard diagnostic figures: duality gap / potential against iteration
for an equilibrium run, and social cost against outer iteration for a
leader-optimization run.  Figures are written next to the CSVs.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def read_trace_csv(path) -> dict[str, list[float]]:
    """Load a trace CSV, skipping `#` comment stamps; empty cells become
    NaN so column lengths stay aligned."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh
                                      if not line.startswith("#")) if r]
    header, body = rows[0], rows[1:]
    columns = {name: [] for name in header}
    for row in body:
        for name, cell in zip(header, row):
            columns[name].append(float(cell) if cell != "" else float("nan"))
    return columns


def render_equilibrium_trace(csv_path, out_path, title=None) -> None:
    cols = read_trace_csv(csv_path)
    t = cols["t"]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(t, cols["potential"], label="potential", color="tab:blue")
    gaps = cols.get("fw_gap", [])
    if gaps and any(g == g and g > 0 for g in gaps):
        gap_ax = ax.twinx()
        gap_ax.plot(t, gaps, label="duality gap", color="tab:red", alpha=0.7)
        gap_ax.set_yscale("log")
        gap_ax.set_ylabel("duality gap")
        gap_ax.legend(loc="upper right")
    ax.set_xlabel("iteration")
    ax.set_ylabel("potential")
    ax.legend(loc="center right")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_stackelberg_trace(csv_path, out_path, title=None) -> None:
    cols = read_trace_csv(csv_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(cols["k"], cols["F"], marker="o", markersize=3,
            color="tab:blue", label="social cost")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("social cost")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
