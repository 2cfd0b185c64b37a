"""Figures written next to the delimited reports.

Only the object-oriented matplotlib API is used (no pyplot state), so figures
render identically under any backend and from worker threads.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .evaluation import METHODS, SummaryStats

COLORS = {
    "t_s": "black",
    "rt": "tab:blue",
    "ph": "tab:green",
    "semg": "tab:pink",
    "kin": "tab:purple",
}
LABELS = {"kin": "Kinematics", "semg": "sEMG", "rt": "Real-Time", "ph": "Post Hoc"}


def _new_figure(nrows=1, height_per_row=2.4, width=8.0):
    fig = Figure(figsize=(width, height_per_row * nrows), dpi=100)
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, 1, sharex=nrows > 1, squeeze=False)[:, 0]
    return fig, axes


def _vline(ax, t, key, label):
    if t is not None:
        ax.axvline(t, color=COLORS[key], ls="--", lw=1.2, label=label)


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # Fixed metadata keeps repeated renders byte-identical.
    fig.savefig(path, metadata={"Software": None})
    return path


def plot_session(path, t_s=None, trace=None, semg_env=None, elevation=None,
                 t_e=None, t_k=None, title=None):
    """Stacked panels for one session: strain, transform, sEMG RMS, elevation.

    Panels whose data is ``None`` are left out.
    """
    panels = [p for p, d in (("strain", trace), ("pt", trace),
                             ("semg", semg_env), ("kin", elevation)) if d is not None]
    if not panels:
        raise ValueError("nothing to plot")
    fig, axes = _new_figure(len(panels))
    for ax, kind in zip(axes, panels):
        if kind == "strain":
            ax.plot(trace.rnorm.timestamps, trace.rnorm.values, lw=0.8, color="0.3")
            ax.set_ylabel("R_norm")
            _vline(ax, trace.result.t1, "rt", "t_r")
        elif kind == "pt":
            tr = trace.transformed
            ax.plot(tr.timestamps, tr.values, lw=0.8, color="0.3")
            if trace.peaks:
                ax.plot([p.time for p in trace.peaks], [p.value for p in trace.peaks],
                        "o", ms=4, mfc="none", color="tab:orange", label="top peaks")
            for c in trace.clusters:
                ax.axvspan(c.member_times[0] - 0.2, c.member_times[-1] + 0.2,
                           color="tab:green", alpha=0.15)
            ax.set_ylabel("transform")
            _vline(ax, trace.result.t_p, "ph", "t_p")
        elif kind == "semg":
            ax.plot(semg_env.timestamps, semg_env.values, lw=0.8, color="0.3")
            ax.set_ylabel("sEMG RMS (V)")
            _vline(ax, t_e, "semg", "t_e")
        else:
            ax.plot(elevation.timestamps, elevation.values, lw=0.8, color="0.3")
            ax.set_ylabel("elevation (deg)")
            _vline(ax, t_k, "kin", "t_k")
        _vline(ax, t_s, "t_s", "t_s")
        ax.legend(loc="upper left", fontsize=7, frameon=False)
    axes[-1].set_xlabel("time (s)")
    if title:
        axes[0].set_title(title)
    return _save(fig, path)


def plot_summary(summary: SummaryStats, path, title="Time difference to declared fatigue"):
    """Grouped bars of the Avr1/Avr2 means with their standard deviations."""
    fig, (ax,) = _new_figure(1, height_per_row=3.2, width=6.0)
    x = np.arange(len(METHODS))
    width = 0.38
    for k, (label, mean_key, std_key) in enumerate(
        (("Avr1", "avr1_mean", "avr1_std"), ("Avr2", "avr2_mean", "avr2_std"))
    ):
        means = [getattr(summary[m], mean_key) or 0.0 for m in METHODS]
        stds = [getattr(summary[m], std_key) or 0.0 for m in METHODS]
        ax.bar(x + (k - 0.5) * width, means, width, yerr=stds, capsize=3, label=label,
               color=["0.55", "0.8"][k], edgecolor="black", lw=0.6)
    ax.set_xticks(x)
    ax.set_xticklabels([LABELS[m] for m in METHODS])
    ax.set_ylabel("|t_s - t| (s)")
    ax.set_title(title, fontsize=10)
    ax.legend(frameon=False)
    return _save(fig, path)
