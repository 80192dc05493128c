"""Figure rendering for experiment reports.

Each report kind that carries a curve or comparison gets a single-axes PNG
saved next to the delimited output. Rendering is routed through the Agg
backend so it works headless.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiments import ExperimentReport

__all__ = ["save_report_figure"]

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


def _far_figure(report: ExperimentReport, ax) -> None:
    rows = report.tables["far_curve"]
    hs = [r["h"] for r in rows]
    emp = [r["empirical_period"] for r in rows]
    bound = [r["bound_period"] for r in rows]
    finite = [(h, p) for h, p in zip(hs, emp) if math.isfinite(p)]
    inf_h = [h for h, p in zip(hs, emp) if not math.isfinite(p)]
    if finite:
        ax.semilogy([h for h, _ in finite], [p for _, p in finite], "o", label="empirical period")
    top = max([p for _, p in finite], default=1.0)
    if inf_h:
        ax.semilogy(inf_h, [top * 10] * len(inf_h), "^", label="no alarms (period > stream)")
    ax.semilogy(hs, bound, "--", label="derived lower bound")
    ax.set_xlabel("threshold h")
    ax.set_ylabel("false-alarm period")
    ax.set_title(f"False-alarm period vs threshold (omega0={report.metrics['omega0']:.4g})")
    ax.legend()


def _spd_figure(report: ExperimentReport, ax) -> None:
    for table, label, marker in (("spd_curve", "detector", "o-"), ("random_curve", "random guess", "s--")):
        rows = report.tables.get(table, ())
        if not rows:
            continue
        ax.plot([r["nadd"] for r in rows], [r["precision"] for r in rows], marker, label=label)
    spd = report.metrics.get("spd")
    rand = report.metrics.get("spd_random_guess")
    parts = []
    if spd is not None:
        parts.append(f"area={spd:.3f}")
    if rand is not None:
        parts.append(f"random={rand:.3f}")
    ax.set_xlabel("normalized detection delay")
    ax.set_ylabel("alarm precision")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("Precision vs normalized delay" + (f" ({', '.join(parts)})" if parts else ""))
    ax.legend()


def _flaw_figure(report: ExperimentReport, ax) -> None:
    metrics = report.metrics
    names = ["analytic adjusted F1", "Monte-Carlo adjusted F1", "Monte-Carlo instance F1"]
    values = [metrics["analytic_f1"], metrics["mc_adjusted_f1"], metrics["mc_instance_f1"]]
    bars = ax.bar(names, values, color=["#4878d0", "#6acc64", "#d65f5f"])
    for bar, value in zip(bars, values):
        ax.text(bar.get_x() + bar.get_width() / 2, value, f"{value:.3f}", ha="center", va="bottom")
    ax.set_ylim(0, 1.1)
    ax.set_ylabel("F1")
    p = report.config.get("p")
    ax.set_title(f"Random guessing at p={p}: adjusted vs instance F1")
    ax.tick_params(axis="x", labelrotation=10)


_RENDERERS = {
    "far": _far_figure,
    "spd": _spd_figure,
    "eval": _spd_figure,
    "flaw": _flaw_figure,
}


def save_report_figure(report: ExperimentReport, path) -> Path | None:
    """Render the report's figure; returns the path, or None when kind has none."""
    renderer = _RENDERERS.get(report.kind)
    if renderer is None:
        return None
    if report.kind in ("spd", "eval") and not report.tables.get("spd_curve"):
        return None
    out = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        renderer(report, ax)
        fig.tight_layout()
        fig.savefig(out, dpi=150)
        plt.close(fig)
    return out
