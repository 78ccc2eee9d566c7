"""Render summary CSVs as convergence figures.

One figure holds two panels: best safe objective value (log axis) and the
cumulative unsafe-evaluation count (linear axis), each with a median line
and a shaded interquartile band per input series.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .runner import SUMMARY_SCHEMA

LOG_FLOOR = 1e-10


class SummarySchemaError(Exception):
    """Input file does not carry the expected summary schema."""


def read_summary(path: str | Path) -> dict:
    """Load one summary CSV; returns axis, bands, and the series label."""
    path = Path(path)
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise SummarySchemaError(f"{path}: missing schema line")
        try:
            meta = json.loads(first.lstrip("#").strip())
        except json.JSONDecodeError as exc:
            raise SummarySchemaError(f"{path}: unreadable schema line") from exc
        if meta.get("schema") != SUMMARY_SCHEMA:
            raise SummarySchemaError(
                f"{path}: schema {meta.get('schema')!r}, expected {SUMMARY_SCHEMA!r}")
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise SummarySchemaError(f"{path}: no data rows")
    required = {"evals", "best_safe_f_q1", "best_safe_f_med", "best_safe_f_q3",
                "unsafe_q1", "unsafe_med", "unsafe_q3"}
    missing = required - set(rows[0])
    if missing:
        raise SummarySchemaError(f"{path}: missing columns {sorted(missing)}")

    def col(name):
        return np.array([float(r[name]) for r in rows])

    return {
        "label": meta.get("label", path.stem),
        "evals": col("evals"),
        "best": (col("best_safe_f_q1"), col("best_safe_f_med"), col("best_safe_f_q3")),
        "unsafe": (col("unsafe_q1"), col("unsafe_med"), col("unsafe_q3")),
    }


def render(summary_paths, out_path: str | Path, mode: str = "compare",
           title: str | None = None) -> Path:
    """Draw the two-panel comparison figure from one or more summaries."""
    if mode not in ("compare", "sweep"):
        raise ValueError(f"unknown mode {mode!r}")
    series = [read_summary(p) for p in summary_paths]

    fig, (ax_f, ax_u) = plt.subplots(1, 2, figsize=(10, 4))
    for s in series:
        q1, med, q3 = (np.maximum(v, LOG_FLOOR) for v in s["best"])
        line, = ax_f.plot(s["evals"], med, label=s["label"])
        ax_f.fill_between(s["evals"], q1, q3, alpha=0.2, color=line.get_color())
        u1, umed, u3 = s["unsafe"]
        ax_u.plot(s["evals"], umed, label=s["label"], color=line.get_color())
        ax_u.fill_between(s["evals"], u1, u3, alpha=0.2, color=line.get_color())

    ax_f.set_yscale("log")
    ax_f.set_xlabel("evaluations")
    ax_f.set_ylabel("best safe evaluation value")
    ax_u.set_xlabel("evaluations")
    ax_u.set_ylabel("unsafe evaluations")
    ax_u.legend(fontsize=8, title="sweep" if mode == "sweep" else None)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
