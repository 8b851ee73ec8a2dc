"""Render result figures next to the CSV outputs.

Each renderer takes the same row dicts the CSV writers consume, so a figure
is always a view of exactly the data that was written to disk.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_RULE_STYLE = {
    "glrt-ac": dict(color="#1f77b4", marker="o"),
    "noise-ac": dict(color="#2ca02c", marker="s"),
    "glrt-qc": dict(color="#d62728", marker="^"),
    "noise-qc": dict(color="#9467bd", marker="v"),
    "ia": dict(color="#7f7f7f", marker="x"),
}


def _style(label):
    return _RULE_STYLE.get(label, dict(color="black", marker="."))


def render_roc(rows, path, title=None):
    """ROC curves, one line per rule label, from `pf`/`pd`/`rule` rows."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    labels = []
    for row in rows:
        if row["rule"] not in labels:
            labels.append(row["rule"])
    for label in labels:
        pf = [r["pf"] for r in rows if r["rule"] == label]
        pd = [r["pd"] for r in rows if r["rule"] == label]
        ax.plot(pf, pd, label=label, markevery=max(1, len(pf) // 12),
                markersize=4, linewidth=1.2, **_style(label))
    ax.plot([0, 1], [0, 1], linestyle=":", color="lightgray", linewidth=0.8)
    ax.set_xlabel("probability of false alarm")
    ax.set_ylabel("probability of detection")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right", fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep(rows, path, title=None):
    """Detection rate against censoring rate from `beta`/`pd_at_alpha` rows."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    labels = []
    for row in rows:
        if row["rule"] not in labels:
            labels.append(row["rule"])
    for label in labels:
        beta = [r["beta"] for r in rows if r["rule"] == label]
        pd = [r["pd_at_alpha"] for r in rows if r["rule"] == label]
        ax.plot(beta, pd, label=label, markersize=4, linewidth=1.2,
                **_style(label))
    ax.set_xlabel("censoring rate")
    ax.set_ylabel("probability of detection at the false-alarm budget")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_cf(rows, path, title=None):
    """Characteristic-function magnitudes from `upsilon`/`magnitude` rows."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    labels = []
    for row in rows:
        if row["series"] not in labels:
            labels.append(row["series"])
    for label in labels:
        ups = [r["upsilon"] for r in rows if r["series"] == label]
        mag = [r["magnitude"] for r in rows if r["series"] == label]
        ax.plot(ups, mag, label=label, linewidth=1.2)
    ax.set_xlabel("frequency")
    ax.set_ylabel("characteristic function magnitude")
    ax.set_yscale("log")
    ax.set_ylim(1e-12, 1.5)
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=9)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
