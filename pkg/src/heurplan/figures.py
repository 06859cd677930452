"""PNG figures for metrics logs and benchmark tables.

Uses the non-interactive backend so rendering works headless; files are
written via a temp name so readers never observe partial images.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


def _save(fig, out) -> None:
    out = Path(out)
    tmp = out.with_name(out.name + ".tmp")
    fig.savefig(tmp, dpi=120, format="png")
    plt.close(fig)
    tmp.replace(out)


def learning_curve(rows: list[dict], out) -> None:
    """Training loss per step, with the periodic evaluation MAE overlaid on
    its own axis when the log contains any."""
    if not rows:
        raise ValueError("empty metrics log")
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot([r["step"] for r in rows], [r["loss"] for r in rows], lw=1.0, color="tab:blue")
    ax.set_xlabel("step")
    ax.set_ylabel("training loss", color="tab:blue")
    if all(r["loss"] > 0 for r in rows):
        ax.set_yscale("log")
    evals = [(r["step"], r["eval_mae"]) for r in rows if r["eval_mae"] is not None]
    if evals:
        ax2 = ax.twinx()
        ax2.plot(*zip(*evals), marker="o", ms=3, lw=1.0, color="tab:orange")
        ax2.set_ylabel("evaluation MAE", color="tab:orange")
    ax.set_title("learning curve")
    fig.tight_layout()
    _save(fig, out)


def bench_chart(rows, out) -> None:
    """Mean search cost per heuristic configuration, grouped by environment
    kind. Failed groups (no solved instance) are drawn at zero height."""
    rows = list(rows)
    if not rows:
        raise ValueError("no benchmark rows")
    kinds = sorted({r.kind for r in rows})
    configs = list(dict.fromkeys(f"{r.heuristic} / {r.planner}" for r in rows))
    cost = {(r.kind, f"{r.heuristic} / {r.planner}"): r.mean_search_cost for r in rows}

    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(kinds), 4.2))
    width = 0.8 / len(configs)
    for j, cfg in enumerate(configs):
        xs = [i + j * width for i in range(len(kinds))]
        ys = [cost.get((k, cfg), math.nan) for k in kinds]
        ys = [0.0 if not math.isfinite(y) else y for y in ys]
        ax.bar(xs, ys, width=width, label=cfg)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(kinds))])
    ax.set_xticklabels(kinds, rotation=15, ha="right")
    ax.set_ylabel("mean search cost (vertices expanded)")
    if any(r.mean_search_cost > 0 for r in rows if math.isfinite(r.mean_search_cost)):
        ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out)
