"""Static figure rendering (SVG) for barcodes, Betti curves, signals and
training traces.  Uses the Agg backend; nothing interactive."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["plot_barcode", "plot_betti", "plot_signal", "plot_loss_trace"]


def _save(fig, path):
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_barcode(barcode, path, title="Persistence barcode"):
    fig, ax = plt.subplots(figsize=(6, 3))
    for row, interval in enumerate(barcode.intervals):
        color = "tab:red" if interval.essential else "tab:blue"
        ax.hlines(row, interval.birth, interval.death, color=color, lw=2)
        if interval.birth == interval.death:
            ax.plot(interval.birth, row, ".", color=color, ms=6)
    ax.set_xlabel("threshold")
    ax.set_ylabel("interval")
    ax.set_title(f"{title} ({barcode.filtration_kind})")
    fig.tight_layout()
    _save(fig, path)


def plot_betti(curve, path, title="Betti curve"):
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.step(curve.grid, curve.counts, where="post", color="tab:blue")
    ax.set_xlabel("threshold")
    ax.set_ylabel("components")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def plot_signal(signal, path, title="Signal", annotations=None):
    fig, ax = plt.subplots(figsize=(8, 3))
    t = np.arange(len(signal)) / signal.sample_rate_hz
    ax.plot(t, signal.samples, lw=0.8, color="tab:blue")
    if annotations is not None:
        idx = np.asarray(list(annotations), dtype=np.int64)
        ax.plot(t[idx], signal.samples[idx], "r.", ms=5)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("amplitude")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def plot_loss_trace(trace, path, title="Training loss"):
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.semilogy(np.arange(len(trace)), trace, color="tab:blue")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
