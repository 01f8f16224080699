"""PNG figures written next to the JSON reports (Agg backend, no display)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import cpmap as cm  # noqa: E402
from .certificates import Verdict  # noqa: E402
from .cpmap import CpMap  # noqa: E402


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def suite_figures(results, out_dir: str) -> list[str]:
    """Pass-rate bars and a residual histogram for a suite run."""
    os.makedirs(out_dir, exist_ok=True)
    if not results:
        return []
    names = [r.name for r in results]
    rates = [r.passed / r.cases if r.cases else 1.0 for r in results]
    fig, ax = plt.subplots(figsize=(7, 0.28 * len(names) + 1.2))
    colors = ["tab:green" if r.ok else "tab:red" for r in results]
    ax.barh(range(len(names)), rates, color=colors)
    ax.set_yticks(range(len(names)), names, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlim(0, 1)
    ax.set_xlabel("fraction of instances passing")
    paths = [_save(fig, os.path.join(out_dir, "suite_pass_rate.png"))]

    fig, ax = plt.subplots(figsize=(7, 4))
    modules = sorted({r.module for r in results})
    series, labels = [], []
    for module in modules:
        vals = [v for r in results if r.module == module for v in r.residuals
                if v is not None and np.isfinite(v) and v > 0]
        if vals:
            series.append(np.log10(vals))
            labels.append(module)
    if series:
        ax.hist(series, bins=40, stacked=True, label=labels)
        ax.legend(fontsize=7)
    ax.set_xlabel("log10 residual")
    ax.set_ylabel("instances")
    paths.append(_save(fig, os.path.join(out_dir, "suite_residuals.png")))
    return paths


def verdict_figure(phi: CpMap, verdict: Verdict, out_dir: str) -> list[str]:
    """Choi spectra of the map, overlaid with those of the flagged witness term when there is one."""
    os.makedirs(out_dir, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    offset = 0
    for i, w in enumerate(cm.choi_spectra(phi)):
        xs = np.arange(offset, offset + w.size)
        ax.plot(xs, w[::-1], "o", color="tab:blue", label="map" if i == 0 else None)
        offset += w.size + 1
    if verdict.witness is not None:
        flagged = verdict.witness.terms[verdict.witness.nonequiv_index][1]
        offset = 0
        for i, w in enumerate(cm.choi_spectra(flagged)):
            xs = np.arange(offset, offset + w.size)
            ax.plot(xs, w[::-1], "x", color="tab:red", label="flagged term" if i == 0 else None)
            offset += w.size + 1
    ax.set_title(f"Choi spectra by block: {verdict.kind}")
    ax.set_xlabel("eigenvalue index (blocks separated)")
    ax.legend(fontsize=8)
    return [_save(fig, os.path.join(out_dir, "choi_spectra.png"))]
