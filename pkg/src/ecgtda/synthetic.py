"""Synthetic ECG fixtures: parametric PQRST beat trains and labeled
multi-patient records.

Used by the test suite and the CLI demo paths; morphology parameters are
per-class so labels carry real signal differences without any real data.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .tda import Signal
from .wfdb import AnnotatedRecord

__all__ = ["BEAT_MORPHOLOGIES", "beat_waveform", "beat_train", "synthetic_record"]

# per-class morphology: gaussian (amplitude, center offset s, width s) per wave
BEAT_MORPHOLOGIES = {
    "N": {
        "P": (0.15, -0.18, 0.025),
        "Q": (-0.15, -0.035, 0.010),
        "R": (1.00, 0.0, 0.012),
        "S": (-0.25, 0.035, 0.010),
        "T": (0.35, 0.25, 0.045),
    },
    # ventricular: wide dominant R, absent P, inverted T
    "V": {
        "P": (0.0, -0.18, 0.025),
        "Q": (-0.05, -0.060, 0.020),
        "R": (1.35, 0.0, 0.040),
        "S": (-0.45, 0.070, 0.025),
        "T": (-0.40, 0.28, 0.055),
    },
    # atrial premature: peaked P, smaller R
    "A": {
        "P": (0.30, -0.15, 0.018),
        "Q": (-0.10, -0.035, 0.010),
        "R": (0.75, 0.0, 0.012),
        "S": (-0.20, 0.035, 0.010),
        "T": (0.25, 0.24, 0.045),
    },
    # bundle-branch-like: notched wide QRS, flat T
    "L": {
        "P": (0.12, -0.18, 0.025),
        "Q": (-0.30, -0.050, 0.018),
        "R": (0.90, 0.0, 0.030),
        "S": (-0.35, 0.055, 0.018),
        "T": (0.12, 0.27, 0.060),
    },
}


def beat_waveform(t, r_time, label="N", scale=1.0):
    """Additive gaussian PQRST bump train for one beat centered at r_time."""
    morph = BEAT_MORPHOLOGIES[label]
    wave = np.zeros_like(t)
    for amp, offset, width in morph.values():
        if amp:
            wave += amp * np.exp(-0.5 * ((t - r_time - offset) / width) ** 2)
    return scale * wave


def beat_train(
    labels,
    fs=360.0,
    rr_s=0.8,
    rr_jitter=0.03,
    amp_jitter=0.05,
    noise=0.0,
    drift_hz=0.0,
    drift_amp=0.0,
    seed=0,
    lead_s=0.5,
):
    """Signal + R-peak annotations for a sequence of labeled beats.

    Returns (Signal, ((sample_index, label), ...)).  RR intervals and
    beat amplitudes get seeded multiplicative jitter; optional white
    noise and sinusoidal baseline drift are added on top.
    """
    labels = list(labels)
    if not labels:
        raise InvalidInputError("need at least one beat label")
    rng = np.random.default_rng(seed)
    rr = rr_s * (1.0 + rr_jitter * rng.standard_normal(len(labels)))
    r_times = lead_s + np.concatenate(([0.0], np.cumsum(rr[:-1])))
    duration = r_times[-1] + lead_s
    t = np.arange(int(round(duration * fs))) / fs
    x = np.zeros_like(t)
    for r_time, label in zip(r_times, labels):
        scale = 1.0 + amp_jitter * rng.standard_normal()
        x += beat_waveform(t, r_time, label, scale)
    if noise:
        x += noise * rng.standard_normal(t.size)
    if drift_amp:
        x += drift_amp * np.sin(2 * np.pi * drift_hz * t + rng.uniform(0, 2 * np.pi))
    annotations = tuple(
        (int(round(r_time * fs)), label) for r_time, label in zip(r_times, labels)
    )
    return Signal(x, fs), annotations


def synthetic_record(
    patient_id,
    labels,
    fs=360.0,
    seed=0,
    noise=0.01,
    drift_hz=0.3,
    drift_amp=0.2,
    **kwargs,
) -> AnnotatedRecord:
    """A fully annotated synthetic patient record."""
    signal, annotations = beat_train(
        labels,
        fs=fs,
        noise=noise,
        drift_hz=drift_hz,
        drift_amp=drift_amp,
        seed=seed,
        **kwargs,
    )
    return AnnotatedRecord(str(patient_id), signal, annotations, fs)
