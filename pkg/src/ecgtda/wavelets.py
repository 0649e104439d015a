"""Daubechies wavelet transforms for baseline estimation.

Filter coefficients are derived at import time by spectral factorization
of the Daubechies product polynomial (minimal-phase root selection), so
no coefficient tables are carried around.  The transform itself is the
periodized orthogonal DWT: analysis rows are orthonormal, synthesis is
the exact adjoint, giving perfect reconstruction for even lengths.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import InvalidInputError

__all__ = ["daubechies_filters", "dwt_step", "idwt_step", "wavedec", "waverec", "max_levels"]


@lru_cache(maxsize=None)
def daubechies_filters(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Scaling and wavelet filters of the db-`order` family (2*order taps).

    Built from the binomial product polynomial: its roots in y are mapped
    to z-plane root pairs (r, 1/r), the minimal-phase half is kept, and
    the result is combined with the (1+z)^order factor and normalized to
    sum sqrt(2).  Returns (lo, hi) with hi the quadrature mirror of lo.
    """
    if order < 1:
        raise InvalidInputError("wavelet order must be >= 1")
    if order == 1:  # Haar, no factorization needed
        lo = np.array([1.0, 1.0]) / np.sqrt(2.0)
    else:
        n = order
        # P(y) = sum_k C(n-1+k, k) y^k, y = (2 - z - 1/z) / 4
        coeffs_y = [1.0]
        c = 1.0
        for k in range(1, n):
            c = c * (n - 1 + k) / k
            coeffs_y.append(c)
        # build z^(n-1) * P(y(z)) as a polynomial in z: term k is
        # (y*z)^k placed at offset n-1-k
        y_poly = np.array([-0.25, 0.5, -0.25])  # y(z) * z, ascending in z
        q = np.zeros(2 * n - 1)
        q[n - 1] = coeffs_y[0]
        term = np.array([1.0])
        for k in range(1, n):
            term = np.convolve(term, y_poly)
            q[n - 1 - k : n + k] += coeffs_y[k] * term
        roots = np.roots(q[::-1])
        inside = roots[np.abs(roots) < 1.0]
        h = np.real(np.poly(np.concatenate((inside, -np.ones(n)))))
        lo = h[::-1] * np.sqrt(2.0) / h.sum()
    hi = lo[::-1].copy()
    hi[1::2] *= -1.0
    return lo, hi


def max_levels(length: int, order: int) -> int:
    """Deepest decomposition keeping every level longer than the filter."""
    flen = 2 * order
    levels = 0
    while length >= flen and length % 2 == 0:
        length //= 2
        levels += 1
        if length < flen:
            break
    return levels


def _gather(x: np.ndarray, flen: int) -> np.ndarray:
    half = x.size // 2
    idx = (2 * np.arange(half)[:, None] + np.arange(flen)[None, :]) % x.size
    return x[idx]


def dwt_step(x: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """One periodized analysis step; x must have even length."""
    if x.size % 2:
        raise InvalidInputError("periodized DWT step needs an even length")
    window = _gather(x, lo.size)
    return window @ lo, window @ hi


def idwt_step(ca: np.ndarray, cd: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Adjoint of dwt_step; exact inverse for orthonormal filters."""
    length = 2 * ca.size
    idx = (2 * np.arange(ca.size)[:, None] + np.arange(lo.size)[None, :]) % length
    out = np.zeros(length)
    np.add.at(out, idx, ca[:, None] * lo[None, :] + cd[:, None] * hi[None, :])
    return out


def wavedec(x: np.ndarray, order: int, levels: int):
    """Multi-level decomposition; returns (approx, [detail_1..detail_L]).

    detail_1 is the finest band.  x length must be divisible by 2**levels.
    """
    lo, hi = daubechies_filters(order)
    details = []
    approx = x
    for _ in range(levels):
        approx, detail = dwt_step(approx, lo, hi)
        details.append(detail)
    return approx, details


def waverec(approx: np.ndarray, details, order: int) -> np.ndarray:
    lo, hi = daubechies_filters(order)
    x = approx
    for detail in reversed(details):
        x = idwt_step(x, detail, lo, hi)
    return x
