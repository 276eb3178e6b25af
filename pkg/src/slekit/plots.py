"""Static SVG plots for the diagnostic reports.

Matplotlib with the Agg backend only; every figure is written as a
standalone SVG. The SVG date metadata is stripped and the id hash salt
is pinned so that identical inputs give byte-identical files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "slekit"

import matplotlib.pyplot as plt
import numpy as np

_SAVE = {"format": "svg", "metadata": {"Date": None}}


def _finish(fig, path):
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def plot_psd(path, psd, fit=None) -> None:
    """Log-log PSD with the fitted power law overlaid."""
    fig, ax = plt.subplots(figsize=(5, 4))
    pos = psd.powers > 0
    ax.loglog(psd.frequencies[pos], psd.powers[pos], ".", ms=3,
              label="Welch PSD")
    if not pos.any():
        ax.set_xscale("linear")
        ax.set_yscale("linear")
    if fit is not None:
        lo, hi = fit.fit_range
        f = np.geomspace(max(lo, psd.frequencies[0]),
                         min(hi, psd.frequencies[-1]), 64)
        ax.loglog(f, np.exp(fit.intercept - fit.beta * np.log(f)), "-",
                  label=f"beta = {fit.beta:.3f}")
    ax.set_xlabel("frequency (1/s)")
    ax.set_ylabel("power density")
    ax.legend(loc="lower left")
    _finish(fig, path)


def plot_qq(path, qq) -> None:
    """Normal Q-Q scatter with the 45-degree reference line."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(qq.theoretical, qq.empirical, ".", ms=3)
    lim = [qq.theoretical[0], qq.theoretical[-1]]
    ax.plot(lim, lim, "-", lw=1, label="reference")
    ax.set_xlabel("normal quantiles")
    ax.set_ylabel("standardized sample quantiles")
    ax.legend(loc="upper left")
    _finish(fig, path)


def plot_histograms(path, report) -> None:
    """Side-by-side D and kappa histograms over all report entries."""
    fig, (ax_d, ax_k) = plt.subplots(1, 2, figsize=(8, 3.5))
    for ax, hist, name in ((ax_d, report.d_histogram, "D"),
                           (ax_k, report.kappa_histogram, "kappa")):
        edges = np.asarray(hist.get("bin_edges", [0.0, 1.0]))
        counts = np.asarray(hist.get("counts", [0]))
        ax.stairs(counts, edges, fill=True)
        ax.set_xlabel(name)
        ax.set_ylabel("windows")
    fig.tight_layout()
    _finish(fig, path)


def plot_hill(path, results) -> None:
    """Hill plateau plot: tail exponent against threshold order."""
    fig, ax = plt.subplots(figsize=(5, 4))
    if results:
        ax.plot([r.n0 for r in results], [r.alpha_hat for r in results], ".-", ms=4)
    ax.set_xlabel("threshold order n0")
    ax.set_ylabel("tail exponent estimate")
    _finish(fig, path)
