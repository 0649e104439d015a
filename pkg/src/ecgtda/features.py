"""Handcrafted per-window features: DFT magnitudes, PQRST fiducials,
amplitude statistics, and a PCA projection.

Every path is total: degenerate windows (flat, or fiducial search ranges
clipped away) yield zero blocks plus a flag instead of NaNs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import kurtosis, skew

from .errors import InvalidInputError

__all__ = [
    "N_DFT",
    "N_PCA",
    "FIDUCIAL_NAMES",
    "dft_features",
    "fiducial_features",
    "stat_features",
    "PcaModel",
    "pca_fit",
    "pca_project",
    "feature_layout",
    "feature_vector",
]

N_DFT = 50
N_PCA = 10
ENTROPY_BINS = 50
FIDUCIAL_NAMES = ("P", "Q", "R", "S", "T")

# fiducial search ranges relative to the R peak, in milliseconds
_Q_RANGE_MS = (-60.0, 0.0)
_S_RANGE_MS = (0.0, 60.0)
_P_RANGE_MS = (-250.0, -80.0)
_T_RANGE_MS = (80.0, 400.0)


def dft_features(window) -> np.ndarray:
    """Magnitudes of DFT bins 0..49 (no taper)."""
    window = np.asarray(window, dtype=np.float64)
    if window.size < 2 * N_DFT:
        raise InvalidInputError(f"window must have >= {2 * N_DFT} samples")
    return np.abs(np.fft.rfft(window)[:N_DFT])


def _argext(window, r_index, range_ms, rate_hz, mode):
    lo = r_index + int(round(range_ms[0] * rate_hz / 1000.0))
    hi = r_index + int(round(range_ms[1] * rate_hz / 1000.0))
    lo, hi = max(lo, 0), min(hi, window.size)
    if hi - lo < 1:
        return None
    segment = window[lo:hi]
    offset = np.argmin(segment) if mode == "min" else np.argmax(segment)
    return lo + int(offset)


def fiducial_features(window, center_peak_index, sample_rate_hz):
    """PQRST block: 5 amplitudes, 4 intervals (ms), 10 amplitude deltas.

    R is the given center peak; Q/S are minima in +/-60 ms flanks, P is
    the maximum in [-250, -80] ms, T the maximum in [80, 400] ms, all
    clipped to the window.  Returns (block of 19 values, degenerate
    flag); any unplaceable fiducial degenerates the whole block to
    zeros.
    """
    window = np.asarray(window, dtype=np.float64)
    if not 0 <= center_peak_index < window.size:
        raise InvalidInputError("center peak index outside window")
    if not sample_rate_hz > 0:
        raise InvalidInputError("sample_rate_hz must be positive")
    positions = {
        "R": int(center_peak_index),
        "Q": _argext(window, center_peak_index, _Q_RANGE_MS, sample_rate_hz, "min"),
        "S": _argext(window, center_peak_index, _S_RANGE_MS, sample_rate_hz, "min"),
        "P": _argext(window, center_peak_index, _P_RANGE_MS, sample_rate_hz, "max"),
        "T": _argext(window, center_peak_index, _T_RANGE_MS, sample_rate_hz, "max"),
    }
    if any(pos is None for pos in positions.values()):
        return np.zeros(19), True
    ms = 1000.0 / sample_rate_hz
    amps = np.array([window[positions[name]] for name in FIDUCIAL_NAMES])
    intervals = np.array(
        [
            (positions["R"] - positions["P"]) * ms,  # PR
            (positions["S"] - positions["Q"]) * ms,  # QRS
            (positions["T"] - positions["Q"]) * ms,  # QT
            (positions["T"] - positions["S"]) * ms,  # ST
        ]
    )
    deltas = np.array(
        [amps[i] - amps[j] for i in range(5) for j in range(i + 1, 5)]
    )
    return np.concatenate([amps, intervals, deltas]), False


def stat_features(window):
    """min, max, mean, population std, excess kurtosis, skewness,
    histogram entropy (50 bins, natural log), mean-crossing count.

    Returns (block of 8 values, degenerate flag); flat windows zero the
    shape statistics.
    """
    window = np.asarray(window, dtype=np.float64)
    lo, hi = window.min(), window.max()
    mean = window.mean()
    std = window.std()
    if hi == lo:
        return np.array([lo, hi, mean, 0.0, 0.0, 0.0, 0.0, 0.0]), True
    if std == 0.0:  # spread too small for float squares: shape stats undefined
        kurt, skw, degenerate = 0.0, 0.0, True
    else:
        # standardize first so higher moments cannot under/overflow
        z = (window - mean) / std
        kurt, skw, degenerate = float(kurtosis(z)), float(skew(z)), False
    counts, _ = np.histogram(window, bins=ENTROPY_BINS, range=(lo, hi))
    p = counts[counts > 0] / window.size
    entropy = float(-(p * np.log(p)).sum())
    centered = window - mean
    crossings = int(np.sum(np.signbit(centered[1:]) != np.signbit(centered[:-1])))
    return np.array([lo, hi, mean, std, kurt, skw, entropy, crossings]), degenerate


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    axes: np.ndarray  # (n_components, width), orthonormal rows
    explained_variance: np.ndarray

    def __post_init__(self):
        gram = self.axes @ self.axes.T
        if not np.allclose(gram, np.eye(self.axes.shape[0]), atol=1e-8):
            raise InvalidInputError("principal axes must be orthonormal")


def pca_fit(windows, n_components: int = N_PCA) -> PcaModel:
    """Top principal axes by SVD of the centered window matrix.

    Deterministic: each axis's largest-magnitude entry is made positive.
    """
    data = np.asarray(windows, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < n_components + 1:
        raise InvalidInputError(
            f"need at least {n_components + 1} windows to fit {n_components} axes"
        )
    mean = data.mean(axis=0)
    centered = data - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    axes = vt[:n_components]
    flips = np.sign(axes[np.arange(n_components), np.abs(axes).argmax(axis=1)])
    flips[flips == 0] = 1.0
    axes = axes * flips[:, None]
    variance = singular[:n_components] ** 2 / data.shape[0]
    return PcaModel(mean, axes, variance)


def pca_project(model: PcaModel, window) -> np.ndarray:
    window = np.asarray(window, dtype=np.float64)
    if window.shape[-1] != model.mean.size:
        raise InvalidInputError("window width does not match the fitted model")
    return (window - model.mean) @ model.axes.T


def feature_layout() -> dict:
    """Ordered {block name: (offset, length)} for the combined vector."""
    blocks = [("dft", N_DFT), ("fiducial", 19), ("stats", 8), ("pca", N_PCA)]
    layout = {}
    offset = 0
    for name, length in blocks:
        layout[name] = (offset, length)
        offset += length
    return layout


def feature_vector(window, center_peak_index, sample_rate_hz, pca_model):
    """Concatenated 87-value feature block for one window.

    Returns (vector, degenerate flag).
    """
    fid, fid_flag = fiducial_features(window, center_peak_index, sample_rate_hz)
    stats, stats_flag = stat_features(window)
    vec = np.concatenate(
        [dft_features(window), fid, stats, pca_project(pca_model, window)]
    )
    return vec, fid_flag or stats_flag
