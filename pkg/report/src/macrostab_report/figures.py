"""Render experiment CSV tables into figures.

All figures use a fixed size and carry no timestamps, so rendering the
same CSV twice produces byte-identical image files.  Each renderer
returns the annotation strings it drew, which lets callers check that
the displayed numbers match what the CSV implies.
"""

from __future__ import annotations

import json
import os
from collections import defaultdict
from typing import Dict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from macrostab_report.schemas import (
    PRIMARY_HEADERS,
    SECONDARY_HEADERS,
    FigureKind,
    FigureSpec,
    read_table,
)

FIGSIZE = (6.4, 4.8)


def render(spec: FigureSpec) -> Dict[str, str]:
    rows = read_table(spec.inputs[0], PRIMARY_HEADERS[spec.kind])
    fig, ax = plt.subplots(figsize=FIGSIZE)
    try:
        if spec.kind is FigureKind.SCALING:
            annotations = _render_scaling(ax, rows)
        elif spec.kind is FigureKind.CLUSTER:
            annotations = _render_cluster(ax, rows)
        elif spec.kind is FigureKind.PURITY:
            extra = None
            if len(spec.inputs) > 1:
                extra = read_table(spec.inputs[1], SECONDARY_HEADERS[spec.kind])
            annotations = _render_purity(ax, rows, extra)
        elif spec.kind is FigureKind.LM_HEATMAP:
            annotations = _render_lm_heatmap(fig, ax, rows)
        else:
            annotations = _render_cascade_hist(ax, rows)
        footer = _provenance(spec.inputs[0])
        if footer:
            fig.text(0.99, 0.01, footer, ha="right", va="bottom", fontsize=6,
                     color="0.4")
        fig.savefig(spec.output, dpi=120, metadata={"Software": "macrostab-report"})
    finally:
        plt.close(fig)
    return annotations


def _provenance(first_input: str) -> str:
    manifest = os.path.join(os.path.dirname(first_input) or ".", "manifest.json")
    if not os.path.exists(manifest):
        return ""
    try:
        with open(manifest) as fh:
            data = json.load(fh)
    except (OSError, ValueError):
        return ""
    return f"{manifest} (master_seed={data.get('master_seed', '?')})"


def fit_exponent(volumes, values):
    """Log-log least squares slope through (V, value) points."""
    v = np.asarray(volumes, dtype=float)
    y = np.asarray(values, dtype=float)
    slope, _ = np.polyfit(np.log(v), np.log(y), 1)
    return float(slope)


def _render_scaling(ax, rows) -> Dict[str, str]:
    peaks: Dict[float, float] = defaultdict(float)
    for row in rows:
        peaks[row[0]] = max(peaks[row[0]], row[2])
    volumes = sorted(peaks)
    values = [peaks[v] for v in volumes]
    exponent = fit_exponent(volumes, values)
    label = f"p = {exponent:.2f}"
    ax.loglog(volumes, values, "o-", label="peak fluctuation")
    ref = values[0] * (np.asarray(volumes) / volumes[0]) ** exponent
    ax.loglog(volumes, ref, "--", color="0.5", label=label)
    ax.annotate(label, xy=(0.05, 0.9), xycoords="axes fraction")
    ax.set_xlabel("V")
    ax.set_ylabel("max fluctuation")
    ax.legend(loc="lower right")
    return {"exponent": label}


def _render_cluster(ax, rows) -> Dict[str, str]:
    by_eps: Dict[float, list] = defaultdict(list)
    for eps, v, omega in rows:
        by_eps[eps].append((v, omega))
    for eps in sorted(by_eps):
        series = sorted(by_eps[eps])
        ax.plot([v for v, _ in series], [o for _, o in series], "o-",
                label=f"eps = {eps:g}")
    ax.set_xlabel("V")
    ax.set_ylabel("correlated region size")
    ax.legend()
    return {"epsilons": ",".join(f"{e:g}" for e in sorted(by_eps))}


def _render_purity(ax, rows, extra) -> Dict[str, str]:
    data = np.asarray(rows)
    t, purity, stderr = data[:, 0], data[:, 1], data[:, 2]
    y = -0.5 * np.log(purity)
    yerr = stderr / (2.0 * purity)
    ax.errorbar(t, y, yerr=yerr, fmt="o", ms=3, label="-1/2 ln purity")
    slope, intercept = np.polyfit(t, y, 1)
    label = f"fit = {slope:.3f}"
    ax.plot(t, slope * t + intercept, "-", label=label)
    annotations = {"fit": label}
    if extra is not None:
        gamma_formula = extra[0][0]
        formula_label = f"formula = {gamma_formula:.3f}"
        ax.plot(t, gamma_formula * t, "--", color="0.5", label=formula_label)
        annotations["formula"] = formula_label
    ax.annotate(label, xy=(0.05, 0.9), xycoords="axes fraction")
    ax.set_xlabel("t")
    ax.set_ylabel("-1/2 ln purity")
    ax.legend(loc="lower right")
    return annotations


def _render_lm_heatmap(fig, ax, rows) -> Dict[str, str]:
    n = int(max(max(r[0], r[1]) for r in rows)) + 1
    grid = np.full((n, n), np.nan)
    for x, y, dev in rows:
        grid[int(x), int(y)] = dev
    image = ax.imshow(grid, origin="lower", vmin=0.0, vmax=max(1e-12, np.nanmax(grid)),
                      cmap="viridis")
    fig.colorbar(image, ax=ax, label="deviation")
    worst = float(np.nanmax(grid))
    label = f"max = {worst:.3f}"
    ax.set_title(label)
    ax.set_xlabel("second site")
    ax.set_ylabel("first site")
    return {"max": label}


def _render_cascade_hist(ax, rows) -> Dict[str, str]:
    counts = [int(r[2]) for r in rows]
    top = max(counts)
    ax.hist(counts, bins=np.arange(-0.5, top + 1.5, 1.0), edgecolor="black")
    median = float(np.median(counts))
    label = f"median = {median:g}"
    ax.axvline(median, color="C1", label=label)
    ax.set_xlabel("measurements until collapse")
    ax.set_ylabel("runs")
    ax.legend()
    return {"median": label}
