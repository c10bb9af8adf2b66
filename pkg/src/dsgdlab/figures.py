"""Matplotlib rendering of the report tables, written next to the CSVs.

The CSV files remain the canonical data interface; these figures are the
quick-look companions. All rendering uses the Agg backend so the CLI works
headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_GRAPH_COLORS = {
    "identity": "tab:blue",
    "ring": "tab:orange",
    "lazy": "tab:green",
    "complete": "tab:red",
}


def _color(name: str):
    return _GRAPH_COLORS.get(name)


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_topology(rows: list[dict], path: Path) -> None:
    """Bar chart of spectral gap and C_W per graph."""
    names = [r["graph"] for r in rows]
    x = range(len(names))
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    width = 0.38
    ax.bar([i - width / 2 for i in x], [r["spectral_gap"] for r in rows], width,
           label="spectral gap 1 - |lambda_2|")
    ax.bar([i + width / 2 for i in x], [r["cw_limit"] for r in rows], width,
           label="C_W mixing series")
    ax.set_xticks(list(x), names)
    ax.set_ylabel("value")
    ax.set_title("Gossip graph diagnostics")
    ax.legend(frameon=False)
    _save(fig, path)


def render_bounds(rows: list[dict], path: Path) -> None:
    """Horizontal bars of bound values, grouped by graph."""
    labels = [f"{r['graph']}: {r['bound_name']}" for r in rows]
    values = [r["value"] for r in rows]
    colors = [_color(r["graph"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7.2, 0.4 * len(rows) + 1.6))
    ax.barh(range(len(rows)), values, color=colors)
    ax.set_yticks(range(len(rows)), labels, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("bound value")
    ax.set_title("Generalization bounds")
    _save(fig, path)


def render_stability(rows: list[dict], path: Path) -> None:
    """Stability estimates with 3-sigma error bars, grouped by mode."""
    modes = sorted({r["mode"] for r in rows})
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for k, mode in enumerate(modes):
        sub = [r for r in rows if r["mode"] == mode]
        xs = [i + 0.15 * k for i in range(len(sub))]
        ax.errorbar(xs, [r["epsilon_hat"] for r in sub],
                    yerr=[3.0 * r["stderr"] for r in sub],
                    fmt="o", capsize=3, label=mode)
        ax.set_xticks(range(len(sub)), [r["graph"] for r in sub])
    ax.set_ylabel("stability estimate")
    ax.set_title("Monte Carlo stability (3-sigma bars)")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def render_genexp(summaries: dict[str, tuple], path: Path) -> None:
    """Generalization-error curves per graph (|mean signed gap| against t)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, (abs_mean, stderr) in summaries.items():
        t = range(len(abs_mean))
        ax.plot(t, abs_mean, label=name, color=_color(name))
        ax.fill_between(t, abs_mean - stderr, abs_mean + stderr,
                        alpha=0.2, color=_color(name), linewidth=0)
    ax.set_xlabel("iteration t")
    ax.set_ylabel("|mean test - train gap|")
    ax.set_title("Empirical generalization error")
    ax.legend(frameon=False)
    _save(fig, path)
