"""Figure styling and reproducible SVG output.

Figures are written with a fixed SVG hash salt and without a creation date
so that rerunning a stage reproduces the files byte for byte.
"""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.dpi": 100,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.0,
    "svg.hashsalt": "rominvert",
    "svg.fonttype": "path",
    "path.simplify": False,
}

APPROACH_COLORS = {"nonoverlapping": "#c44e52", "sliding": "#4c72b0", "exact": "#55a868"}


@contextmanager
def figure_style():
    with matplotlib.rc_context(STYLE):
        yield


def save_svg(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def reconstruction_figure(times, truth: dict, noisy: dict, recon: dict, approach: str, path):
    """Ground truth, noisy data and surrogate reconstruction, one panel per rate."""
    rates = list(truth)
    ncol = 2 if len(rates) > 1 else 1
    nrow = -(-len(rates) // ncol)
    with figure_style():
        fig, axes = plt.subplots(nrow, ncol, figsize=(7.0, 2.4 * nrow), squeeze=False)
        for ax, q in zip(axes.flat, rates):
            if q in noisy:
                ax.plot(times, noisy[q], ".", ms=2, color="0.6", label="noisy data")
            ax.plot(times, truth[q], "k-", label="ground truth")
            ax.plot(times, recon[q], "-", color=APPROACH_COLORS.get(approach, "C0"),
                    label=f"{approach} reconstruction")
            ax.set_title(f"q = {q:g} MSCF/day")
            ax.set_xlabel("time (days)")
            ax.set_ylabel("displacement (m)")
        for ax in list(axes.flat)[len(rates):]:
            ax.set_visible(False)
        axes.flat[0].legend(loc="upper left", frameon=False)
        fig.tight_layout()
        return save_svg(fig, path)


def inversion_figure(chains: dict, q_true: float, approach: str, burn_in_fraction: float, path):
    """Trace and post-burn-in histogram for each sample count, one row per count."""
    counts = sorted(chains)
    color = APPROACH_COLORS.get(approach, "C0")
    with figure_style():
        fig, axes = plt.subplots(len(counts), 2, figsize=(7.0, 2.0 * len(counts)), squeeze=False)
        for row, n in zip(axes, counts):
            samples = chains[n]
            burn = int(-(-burn_in_fraction * len(samples) // 1))
            row[0].plot(range(1, len(samples) + 1), samples, "-", color=color, lw=0.6)
            row[0].axvline(burn, color="0.5", ls=":", lw=0.8)
            row[0].axhline(q_true, color="k", ls="--", lw=0.8)
            row[0].set_ylabel("q (MSCF/day)")
            row[0].set_title(f"trace, n = {n}")
            row[1].hist(samples[burn:], bins=40, color=color, alpha=0.8)
            row[1].axvline(q_true, color="k", ls="--", lw=0.8, label="ground truth")
            row[1].set_title(f"posterior, n = {n}")
            row[1].set_xlabel("q (MSCF/day)")
        axes[0, 1].legend(frameon=False)
        axes[-1, 0].set_xlabel("iteration")
        fig.suptitle(f"{approach}: q_true = {q_true:g} MSCF/day")
        fig.tight_layout()
        return save_svg(fig, path)


def error_summary_figure(errors: dict, path):
    """Relative error of the posterior mean against sample count, per approach and rate.

    ``errors`` maps approach -> rate -> {n: relative error}.
    """
    with figure_style():
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        markers = "osd^v<>"
        for approach, by_rate in errors.items():
            for k, (q, by_n) in enumerate(by_rate.items()):
                ns = sorted(by_n)
                ax.plot(ns, [by_n[n] for n in ns], marker=markers[k % len(markers)], ms=3,
                        color=APPROACH_COLORS.get(approach, "C0"),
                        label=f"{approach}, q={q:g}")
        ax.set_xscale("log")
        ax.set_yscale("symlog", linthresh=1e-3)
        ax.set_xlabel("number of samples")
        ax.set_ylabel("relative error of posterior mean")
        ax.legend(frameon=False, ncol=2)
        fig.tight_layout()
        return save_svg(fig, path)
