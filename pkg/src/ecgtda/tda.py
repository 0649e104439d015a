"""0-dimensional persistence of 1D signals and Betti curve vectorization.

A signal is read as the piecewise-linear interpolation of its samples.
Sweeping a threshold upward, connected components of the sublevel set are
born at local minima and die when they merge into an older component
(elder rule).  The surviving component's bar is closed at the global
maximum so every endpoint stays finite.
"""

from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidInputError

__all__ = [
    "Signal",
    "PersistenceInterval",
    "PersistenceBarcode",
    "BettiCurve",
    "sublevel_barcode",
    "superlevel_barcode",
    "betti_curve",
    "betti_pair",
    "barcode_to_csv",
    "barcode_to_json",
    "betti_to_csv",
    "betti_to_json",
]

DEFAULT_BINS = 100


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled real-valued series."""

    samples: np.ndarray
    sample_rate_hz: float = 1.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size < 1:
            raise InvalidInputError("signal must be a non-empty 1D array")
        if not np.all(np.isfinite(samples)):
            raise InvalidInputError("signal contains non-finite samples")
        if not self.sample_rate_hz > 0:
            raise InvalidInputError("sample_rate_hz must be positive")

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True, order=True)
class PersistenceInterval:
    birth: float
    death: float
    essential: bool = False

    def __post_init__(self):
        if self.birth > self.death:
            raise InvalidInputError("interval birth must not exceed death")


@dataclass(frozen=True)
class PersistenceBarcode:
    """Multiset of persistence intervals, stored columnar for speed."""

    births: np.ndarray
    deaths: np.ndarray
    essential_flags: np.ndarray
    filtration_kind: str = "sublevel"

    def __post_init__(self):
        object.__setattr__(self, "births", np.asarray(self.births, dtype=np.float64))
        object.__setattr__(self, "deaths", np.asarray(self.deaths, dtype=np.float64))
        object.__setattr__(
            self, "essential_flags", np.asarray(self.essential_flags, dtype=bool)
        )
        if not (self.births.shape == self.deaths.shape == self.essential_flags.shape):
            raise InvalidInputError("barcode columns must have equal length")
        if np.any(self.births > self.deaths):
            raise InvalidInputError("interval birth must not exceed death")
        if self.filtration_kind not in ("sublevel", "superlevel"):
            raise InvalidInputError(f"unknown filtration kind {self.filtration_kind!r}")

    @classmethod
    def from_intervals(cls, intervals, filtration_kind="sublevel"):
        ivs = list(intervals)
        return cls(
            np.array([iv.birth for iv in ivs]),
            np.array([iv.death for iv in ivs]),
            np.array([iv.essential for iv in ivs]),
            filtration_kind,
        )

    @property
    def intervals(self) -> tuple[PersistenceInterval, ...]:
        return tuple(
            PersistenceInterval(float(b), float(d), bool(e))
            for b, d, e in zip(self.births, self.deaths, self.essential_flags)
        )

    def __len__(self):
        return self.births.size

    @property
    def span(self) -> tuple[float, float]:
        """(min birth, max death) over all intervals."""
        return float(self.births.min()), float(self.deaths.max())


@dataclass(frozen=True)
class BettiCurve:
    grid: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=np.float64))
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64))
        if self.grid.shape != self.counts.shape:
            raise InvalidInputError("grid and counts must have equal length")


@njit(cache=True)
def _scan_pairs(x, stack, births, deaths):
    """Single streaming pass: collapse plateaus, detect extrema, pair.

    Components of the sublevel filtration are born at local minima and die
    at the saddles (interior local maxima) merging them.  A saddle can be
    resolved as soon as the next saddle is at least as high: it is then
    the lowest unresolved saddle in its neighborhood, so its merge
    commutes with every other pending merge.  A monotone stack of
    alternating (min, saddle) values performs these resolutions left to
    right; the stack minima are exactly the birth values of the open
    components.  Each merge kills the component with the larger birth
    value, ties going to the left (smaller index) component, and pairs of
    zero persistence are dropped.  Boundary maxima are skipped: they only
    ever get absorbed.

    Scratch arrays (stack of size >= n + 1, births/deaths of size
    >= n // 2 + 1) are caller-provided so repeat calls reuse pages.
    Returns (n_pairs, global_min, global_max); the essential interval
    (global_min, global_max) is not included in the pairs.
    """
    n = x.size
    gmin = x[0]
    gmax = x[0]
    top = -1
    n_pairs = 0
    prev = x[0]
    trend = 0
    for i in range(1, n):
        v = x[i]
        if v == prev:
            continue
        if v > gmax:
            gmax = v
        elif v < gmin:
            gmin = v
        if v > prev:
            if trend <= 0:
                top += 1
                stack[top] = prev
            trend = 1
        else:
            if trend > 0:
                # prev is a saddle unless it is the very first extremum
                s = prev
                while top >= 2 and stack[top - 1] <= s:
                    m_left = stack[top - 2]
                    m_right = stack[top]
                    if m_left <= m_right:
                        dying = m_right
                        survivor = m_left
                    else:
                        dying = m_left
                        survivor = m_right
                    if dying != stack[top - 1]:
                        births[n_pairs] = dying
                        deaths[n_pairs] = stack[top - 1]
                        n_pairs += 1
                    top -= 2
                    stack[top] = survivor
                top += 1
                stack[top] = s
            trend = -1
        prev = v
    if trend == -1:
        # signal ends descending: the final sample is a boundary minimum;
        # an ascending end is a boundary maximum and is never pushed
        top += 1
        stack[top] = prev
    while top >= 2:
        m_left = stack[top - 2]
        m_right = stack[top]
        if m_left <= m_right:
            dying = m_right
            survivor = m_left
        else:
            dying = m_left
            survivor = m_right
        if dying != stack[top - 1]:
            births[n_pairs] = dying
            deaths[n_pairs] = stack[top - 1]
            n_pairs += 1
        top -= 2
        stack[top] = survivor
    return n_pairs, gmin, gmax


_scratch = threading.local()


def _scratch_buffers(n):
    """Per-thread reusable scratch for the pairing sweep."""
    buffers = getattr(_scratch, "buffers", None)
    if buffers is None or buffers[0].size < n + 1:
        buffers = (
            np.empty(n + 1, dtype=np.float64),
            np.empty(n // 2 + 1, dtype=np.float64),
            np.empty(n // 2 + 1, dtype=np.float64),
        )
        _scratch.buffers = buffers
    return buffers


def sublevel_barcode(signal: Signal) -> PersistenceBarcode:
    """Barcode of the sublevel filtration of the piecewise-linear signal.

    Runs in a single streaming pass, comfortably inside the O(n log n)
    bound.
    """
    stack, pair_births, pair_deaths = _scratch_buffers(signal.samples.size)
    n_pairs, global_min, global_max = _scan_pairs(
        signal.samples, stack, pair_births, pair_deaths
    )
    births = pair_births[:n_pairs]
    deaths = pair_deaths[:n_pairs]
    # essential component first; the rest keeps pairing (death) order
    births = np.append(global_min, births)
    deaths = np.append(global_max, deaths)
    essential = np.zeros(births.size, dtype=bool)
    essential[0] = True
    return PersistenceBarcode(births, deaths, essential, "sublevel")


def superlevel_barcode(signal: Signal) -> PersistenceBarcode:
    """Barcode of the upper-level filtration, stored in negated coordinates.

    Equals the sublevel barcode of the negated signal; intervals keep the
    negated units so that birth <= death holds.
    """
    negated = Signal(-signal.samples, signal.sample_rate_hz)
    base = sublevel_barcode(negated)
    return PersistenceBarcode(
        base.births, base.deaths, base.essential_flags, "superlevel"
    )


def betti_curve(barcode: PersistenceBarcode, bins: int = DEFAULT_BINS) -> BettiCurve:
    """Discretized count of intervals containing each grid threshold.

    The grid spans [min birth, max death].  Non-essential intervals count
    on [birth, death); the essential interval counts on [birth, death] so
    the terminal grid point keeps count >= 1.
    """
    if len(barcode) == 0:
        raise InvalidInputError("cannot discretize an empty barcode")
    if bins < 2:
        raise InvalidInputError("bins must be at least 2")
    lo, hi = barcode.span
    if lo == hi:
        # flat window: one zero-length bar, counted everywhere
        grid = np.full(bins, lo)
        return BettiCurve(grid, np.ones(bins, dtype=np.int64))
    grid = np.linspace(lo, hi, bins)
    ess = barcode.essential_flags
    births = np.sort(barcode.births[~ess])
    deaths = np.sort(barcode.deaths[~ess])
    counts = np.searchsorted(births, grid, side="right") - np.searchsorted(
        deaths, grid, side="right"
    )
    for b, d in zip(barcode.births[ess], barcode.deaths[ess]):
        counts += (b <= grid) & (grid <= d)
    return BettiCurve(grid, counts)


def betti_pair(signal: Signal, bins: int = DEFAULT_BINS) -> tuple[BettiCurve, BettiCurve]:
    """Betti curves of the signal and of its negation (sub/upper levels)."""
    sub = betti_curve(sublevel_barcode(signal), bins)
    sup = betti_curve(superlevel_barcode(signal), bins)
    return sub, sup


def barcode_to_csv(barcode: PersistenceBarcode, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["birth", "death", "essential"])
        for iv in barcode.intervals:
            writer.writerow([repr(iv.birth), repr(iv.death), str(iv.essential).lower()])


def barcode_to_json(barcode: PersistenceBarcode) -> str:
    return json.dumps(
        {
            "filtration_kind": barcode.filtration_kind,
            "intervals": [
                {"birth": iv.birth, "death": iv.death, "essential": iv.essential}
                for iv in barcode.intervals
            ],
        }
    )


def betti_to_csv(curve: BettiCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "count"])
        for alpha, count in zip(curve.grid, curve.counts):
            writer.writerow([repr(float(alpha)), int(count)])


def betti_to_json(curve: BettiCurve) -> str:
    return json.dumps(
        {"grid": curve.grid.tolist(), "counts": curve.counts.tolist()}
    )
