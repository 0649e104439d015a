"""Slice annotated records into fixed-length windows of k consecutive beats.

Window boundaries are the midpoints to the neighboring beats, so spans
track the local rhythm while the interpolated output length stays fixed.
The window label comes from the central beat of the group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .wfdb import AnnotatedRecord

__all__ = ["BeatWindow", "slice_windows", "standardize_length", "DEFAULT_K", "DEFAULT_W"]

DEFAULT_K = 3
DEFAULT_W = 400


@dataclass(frozen=True)
class BeatWindow:
    patient_id: str
    samples: np.ndarray  # exactly W amplitudes
    label: str
    beat_count: int
    center_beat_index: int  # index into the record's beat sequence
    raw_span: tuple  # (start_sample, end_sample) before standardization
    center_position: float = 0.5  # R-peak location as a fraction of the window

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if self.samples.ndim != 1:
            raise InvalidInputError("window samples must be 1D")


def standardize_length(raw, w: int) -> np.ndarray:
    """Linearly interpolate a slice onto exactly w evenly spaced samples."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size < 2:
        raise InvalidInputError("cannot standardize fewer than 2 samples")
    if w < 2:
        raise InvalidInputError("target length must be >= 2")
    if raw.size == w:
        return raw.copy()
    positions = np.linspace(0.0, raw.size - 1.0, w)
    return np.interp(positions, np.arange(raw.size), raw)


def slice_windows(
    record: AnnotatedRecord,
    k: int = DEFAULT_K,
    w: int = DEFAULT_W,
    stride_beats: int = 1,
) -> list:
    """Windows of k consecutive beats, spanning midpoint-to-midpoint.

    For beats b_i..b_{i+k-1} the window runs from midpoint(b_{i-1}, b_i)
    to midpoint(b_{i+k-1}, b_{i+k}); groups missing a neighbor on either
    side are skipped, so a record needs at least k + 2 beats to yield
    any windows.  The label is the symbol of beat i + k // 2.
    """
    if k < 1 or stride_beats < 1:
        raise InvalidInputError("k and stride_beats must be >= 1")
    if w < 8:
        raise InvalidInputError("window length must be >= 8")
    indices = record.beat_indices
    symbols = record.beat_symbols
    x = record.signal.samples
    windows = []
    for i in range(1, len(indices) - k, stride_beats):
        start = (indices[i - 1] + indices[i]) // 2
        end = (indices[i + k - 1] + indices[i + k]) // 2
        if end - start < 2:
            continue
        center = i + k // 2
        raw = x[start:end]
        windows.append(
            BeatWindow(
                patient_id=record.patient_id,
                samples=standardize_length(raw, w),
                label=symbols[center],
                beat_count=k,
                center_beat_index=center,
                raw_span=(int(start), int(end)),
                center_position=float((indices[center] - start) / (end - start)),
            )
        )
    return windows
