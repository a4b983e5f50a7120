"""Report figures rendered next to the delimited outputs.

PNG output is kept byte-deterministic (fixed dpi, no timestamp metadata)
so repeated runs with the same seed produce identical files.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE_KW = {"dpi": 130, "metadata": {"Date": None}}


def _save(fig, path):
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_report_figures(report, out_dir) -> list:
    """Deviation figures for the object estimate and the two regrasps."""
    out = Path(out_dir)
    written = []
    panels = [
        ("object_deviation.png", "obj_dp_mm", "obj_dw_deg",
         "object estimate vs injected truth"),
        ("grasp_deviation.png", ("g2_dp_mm", "g3_dp_mm"),
         ("g2_dw_deg", "g3_dw_deg"), "conformed vs planned grasp poses"),
    ]
    rows = report.rows
    if not rows:
        return written

    placements = list(dict.fromkeys(r.placement for r in rows))
    colors = plt.cm.tab10(np.linspace(0, 1, 10))

    def scatter(ax, field_names, unit):
        if isinstance(field_names, str):
            field_names = (field_names,)
        for fi, field in enumerate(field_names):
            for pi, name in enumerate(placements):
                vals = np.array([getattr(r, field) for r in rows
                                 if r.placement == name])
                for ax_idx in range(3):
                    x = ax_idx + fi * 3.5 + (pi - len(placements) / 2) * 0.18
                    label = name if (ax_idx == 0 and fi == 0) else None
                    ax.plot(np.full(len(vals), x), vals[:, ax_idx], ".",
                            color=colors[pi % 10], markersize=3, label=label)
        ticks, labels = [], []
        for fi, field in enumerate(field_names):
            stem = field.split("_")[0]
            for ax_idx, ax_name in enumerate("xyz"):
                ticks.append(ax_idx + fi * 3.5)
                labels.append(f"{stem} {ax_name}")
        ax.set_xticks(ticks)
        ax.set_xticklabels(labels)
        ax.set_ylabel(unit)
        ax.grid(True, alpha=0.3)
        ax.axhline(0.0, color="k", linewidth=0.6)

    for fname, dp_fields, dw_fields, title in panels:
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
        scatter(ax1, dp_fields, "position difference (mm)")
        scatter(ax2, dw_fields, "rotation-vector difference (deg)")
        ax1.legend(loc="best", fontsize=7)
        fig.suptitle(title, fontsize=10)
        fig.tight_layout()
        path = out / fname
        _save(fig, path)
        written.append(path)
    return written


def render_trace_figure(trace, path, title="reaction wrench") -> None:
    """Force/torque trace of one conformance run."""
    trace = np.asarray(trace, dtype=float)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    t = trace[:, 0]
    for i, name in enumerate("xyz"):
        ax1.plot(t, trace[:, 1 + i], label=f"f{name}")
        ax2.plot(t, trace[:, 4 + i], label=f"t{name}")
    ax1.set_ylabel("force (N)")
    ax2.set_ylabel("torque (N m)")
    ax2.set_xlabel("time (s)")
    for ax in (ax1, ax2):
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7)
    fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    _save(fig, path)
