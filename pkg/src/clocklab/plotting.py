"""Figure rendering for the report-producing CLI paths.

Import order matters: the Agg backend is selected before pyplot so the
CLI works headless. Figures are written next to the delimited output
files and share their basename.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

plt.rcParams.update(
    {
        "figure.figsize": (6.4, 4.4),
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 10,
    }
)


def _group_rows(rows):
    groups = {}
    for row in rows:
        groups.setdefault((row["family"], row["n"]), []).append(row)
    for key in groups:
        groups[key].sort(key=lambda r: r["L"])
    return groups


def save_gap_scan_figure(rows, path, title="spectral gap against circuit length"):
    """Log-log gap curves per (family, n), with a 1/L^2 guide line."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to plot")
    fig, ax = plt.subplots()
    guide_anchor = None
    for (family, n), group in sorted(_group_rows(rows).items()):
        ls = [r["L"] for r in group]
        gaps = [r["gap"] for r in group]
        ax.loglog(ls, gaps, marker="o", label=f"{family} n={n}")
        if guide_anchor is None and gaps[0] > 0:
            guide_anchor = (ls[0], gaps[0])
        if "amplified_gap" in group[0]:
            ax.loglog(
                ls,
                [r["amplified_gap"] for r in group],
                marker="s",
                linestyle="--",
                label=f"{family} n={n} amplified",
            )
    if guide_anchor is not None:
        l0, g0 = guide_anchor
        ls = sorted({r["L"] for r in rows})
        ax.loglog(
            ls,
            [g0 * (l0 / l) ** 2 for l in ls],
            color="gray",
            linestyle=":",
            label="1/L^2 guide",
        )
    ax.set_xlabel("circuit length L")
    ax.set_ylabel("spectral gap")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_ledger_figure(entries, path, fit=None):
    """Oracle count against evolution time on log-log axes."""
    entries = list(entries)
    if not entries:
        raise ValueError("no ledger entries to plot")
    fig, ax = plt.subplots()
    ts = [e.t for e in entries]
    counts = [e.oracle_count for e in entries]
    ax.loglog(ts, counts, marker="o", label="measured")
    if fit is not None:
        import numpy as np

        grid = np.geomspace(min(ts), max(ts), 64)
        ax.loglog(
            grid,
            np.exp(fit.intercept) * grid**fit.gamma,
            linestyle="--",
            label=f"fit: t^{fit.gamma:.2f}",
        )
    ax.set_xlabel("evolution time t")
    ax.set_ylabel("oracle calls")
    ax.set_title("query cost of Trotterized evolution")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_theorem_figure(report, path):
    """Measured gaps against the anchored inverse-square lower bound."""
    import numpy as np

    fig, ax = plt.subplots()
    ls = [row.length for row in report.rows]
    gaps = [row.gap for row in report.rows]
    bounds = [row.lower_bound for row in report.rows]
    ax.loglog(ls, gaps, marker="o", label="measured gap")
    ax.loglog(ls, bounds, linestyle=":", color="gray", label="anchored c2/L^2")
    grid = np.geomspace(min(ls), max(ls), 64)
    ax.loglog(
        grid,
        np.exp(report.fit.intercept) * grid**report.fit.slope,
        linestyle="--",
        label=f"fit: L^{report.fit.slope:.2f}",
    )
    verdict = "consistent" if report.consistent else "inconsistent"
    ax.set_xlabel("circuit length L")
    ax.set_ylabel("spectral gap")
    ax.set_title(f"inverse-square scaling check: {verdict}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
