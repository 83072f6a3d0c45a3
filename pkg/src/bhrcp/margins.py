"""Temporally-varying Gumbel margins via local probability-weighted moments.

Each observation gets a location/scale pair fitted on a sliding window
(clamped at the series ends so every window holds exactly ``window`` points),
and series are mapped to standard Gumbel scale by ``(r - mu) / sigma``.  The
shape parameter is fixed at zero throughout: only the Gumbel member of the
GEV family is fitted here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

_EULER_GAMMA = 0.5772156649015329
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class GumbelMargin:
    """Location/scale of a Gumbel marginal (shape fixed at zero)."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)) or self.sigma <= 0.0:
            raise DataError(f"invalid Gumbel margin (mu={self.mu!r}, sigma={self.sigma!r})")


class MarginProfile:
    """Per-time-index Gumbel margins aligned to a series."""

    __slots__ = ("mus", "sigmas", "window")

    def __init__(self, mus, sigmas, window: int):
        mus = np.asarray(mus, dtype=np.float64)
        sigmas = np.asarray(sigmas, dtype=np.float64)
        if mus.shape != sigmas.shape or mus.ndim != 1:
            raise DataError("margin profile arrays must be 1-D and equal length")
        if not np.isfinite(mus).all() or not np.isfinite(sigmas).all() or (sigmas <= 0).any():
            raise DataError("margin profile contains invalid entries")
        self.mus = mus
        self.sigmas = sigmas
        self.window = int(window)

    def __len__(self) -> int:
        return self.mus.shape[0]

    def entry(self, t: int) -> GumbelMargin:
        return GumbelMargin(float(self.mus[t]), float(self.sigmas[t]))


def _pwm_moments(sorted_rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # b0 = mean; b1 = sum_j ((j-1)/(m-1)) x_(j) / m with 1-based j
    m = sorted_rows.shape[-1]
    weights = np.arange(m, dtype=np.float64) / (m - 1.0)
    b0 = sorted_rows.mean(axis=-1)
    b1 = (sorted_rows * weights).sum(axis=-1) / m
    return b0, b1


def gumbel_pwm_fit(sample) -> GumbelMargin:
    """Fit a Gumbel distribution by probability-weighted moments.

    Uses the unbiased plotting positions (j-1)/(m-1) on the order statistics;
    the estimators are ``sigma = (2 b1 - b0) / ln 2`` and
    ``mu = b0 - gamma * sigma``.  Affine-equivariant by construction.
    """
    arr = np.asarray(sample, dtype=np.float64)
    if arr.ndim != 1:
        raise DataError("sample must be one-dimensional")
    if arr.shape[0] < 5:
        raise DataError(f"need at least 5 observations, got {arr.shape[0]}")
    if not np.isfinite(arr).all():
        raise DataError("sample contains non-finite values")
    b0, b1 = _pwm_moments(np.sort(arr))
    sigma = (2.0 * b1 - b0) / _LN2
    if sigma <= 0.0:
        raise DataError("degenerate sample: zero dispersion")
    return GumbelMargin(float(b0 - _EULER_GAMMA * sigma), float(sigma))


def _window_starts(n: int, window: int) -> np.ndarray:
    # symmetric window, clamped at the edges so length stays constant
    centers = np.arange(n)
    return np.clip(centers - window // 2, 0, n - window)


def local_pwm_fit(series, window: int) -> MarginProfile:
    """Fit Gumbel margins on a sliding window around each observation.

    Entry ``t`` equals :func:`gumbel_pwm_fit` applied to the ``window``
    observations centered at ``t`` (clamped to the first/last ``window``
    points near the series boundaries).
    """
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 1:
        raise DataError("series must be one-dimensional")
    window = int(window)
    if window < 5:
        raise DataError(f"window must be at least 5, got {window}")
    n = arr.shape[0]
    if n < window:
        raise DataError(f"series length {n} shorter than window {window}")
    if not np.isfinite(arr).all():
        raise DataError("series contains non-finite values")

    views = np.lib.stride_tricks.sliding_window_view(arr, window)
    srt = np.sort(views, axis=1)
    b0, b1 = _pwm_moments(srt)
    sig_by_start = (2.0 * b1 - b0) / _LN2

    starts = _window_starts(n, window)
    sigmas = sig_by_start[starts]
    if (sigmas <= 0.0).any():
        t_bad = int(np.argmax(sigmas <= 0.0))
        raise DataError(f"degenerate window (zero dispersion) at index {t_bad}")
    mus = b0[starts] - _EULER_GAMMA * sigmas
    return MarginProfile(mus, sigmas, window)


def to_standard_gumbel(series, profile: MarginProfile) -> np.ndarray:
    """Location-scale transform to standard Gumbel margins: (r_t - mu_t) / sigma_t."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != len(profile):
        raise DataError(
            f"series length {arr.shape[0] if arr.ndim == 1 else arr.shape} does not match "
            f"profile length {len(profile)}"
        )
    return (arr - profile.mus) / profile.sigmas
