"""Empirical tail-dependence diagnostics.

Two families of estimators, reported distinctly:

* threshold-based ``chi_hat(u)``: conditional joint-exceedance frequencies at
  a quantile level ``u`` (upper or lower tail);
* madogram-based ``chi_hat``: the rank madogram ``nu = E|F(A) - G(B)|/2``
  mapped through ``chi = 2 - (1 + 2 nu) / (1 - 2 nu)``, applied either at a
  temporal lag within one series or across the two components at equal times.

All ranks are scaled by ``1/(T+1)`` so the empirical CDF never touches 0 or 1.
A permutation bootstrap of the cross-component madogram chi provides a test
of extremal independence between components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .bhr import BivariateSeries
from .errors import DataError
from .rng import RandomStream


@dataclass(frozen=True)
class ChiEstimate:
    """Threshold-based tail-dependence estimate at quantile level u."""

    u: float
    chi_hat: float
    n_exceed: int  # joint exceedances entering the numerator


@dataclass(frozen=True)
class IndependenceTest:
    """Outcome of the permutation bootstrap independence test."""

    critical_value: float
    observed_chi: float
    reject: bool
    alpha: float
    n_boot: int


def _unit_ranks(values: np.ndarray) -> np.ndarray:
    return rankdata(values, method="average") / (values.shape[0] + 1.0)


def _check_pairs(pairs: BivariateSeries, min_len: int = 20) -> None:
    if len(pairs) < min_len:
        raise DataError(f"need at least {min_len} pairs, got {len(pairs)}")


def empirical_chi_upper(pairs: BivariateSeries, u: float) -> ChiEstimate:
    """P(second component extreme | first extreme) at upper quantile level u."""
    _check_pairs(pairs)
    if not (0.0 < u < 1.0):
        raise DataError(f"quantile level must be in (0, 1), got {u!r}")
    fx = _unit_ranks(pairs.x)
    fy = _unit_ranks(pairs.y)
    cond = fx > u
    n_cond = int(cond.sum())
    if n_cond == 0:
        raise DataError(f"no marginal exceedances at level u={u}")
    joint = int((cond & (fy > u)).sum())
    chi = min(1.0, max(0.0, joint / n_cond))
    return ChiEstimate(u=float(u), chi_hat=chi, n_exceed=joint)


def empirical_chi_lower(pairs: BivariateSeries, u: float) -> ChiEstimate:
    """Mirror of :func:`empirical_chi_upper` with < comparisons near u = 0."""
    _check_pairs(pairs)
    if not (0.0 < u < 1.0):
        raise DataError(f"quantile level must be in (0, 1), got {u!r}")
    fx = _unit_ranks(pairs.x)
    fy = _unit_ranks(pairs.y)
    cond = fx < u
    n_cond = int(cond.sum())
    if n_cond == 0:
        raise DataError(f"no marginal exceedances at level u={u}")
    joint = int((cond & (fy < u)).sum())
    chi = min(1.0, max(0.0, joint / n_cond))
    return ChiEstimate(u=float(u), chi_hat=chi, n_exceed=joint)


def f_madogram(series, lag: int) -> float:
    """Rank madogram nu_h = mean |F(z_{t+h}) - F(z_t)| / 2 at temporal lag h.

    For an i.i.d. series the population value is 1/6; values near 0 indicate
    strong serial extremal dependence at that lag.
    """
    arr = np.asarray(series, dtype=np.float64)
    lag = int(lag)
    if lag < 1:
        raise DataError(f"lag must be >= 1, got {lag}")
    if arr.ndim != 1 or arr.shape[0] <= lag + 10:
        raise DataError(f"series too short ({arr.shape[0] if arr.ndim == 1 else '?'}) for lag {lag}")
    f = _unit_ranks(arr)
    return float(np.mean(np.abs(f[lag:] - f[:-lag])) / 2.0)


def chi_from_madogram(nu: float) -> float:
    """Map a madogram value to the chi scale: chi = 2 - (1 + 2 nu)/(1 - 2 nu)."""
    nu = float(nu)
    if not (0.0 <= nu < 0.5):
        raise DataError(f"madogram must lie in [0, 0.5), got {nu!r}")
    return 2.0 - (1.0 + 2.0 * nu) / (1.0 - 2.0 * nu)


def lagged_chi(series, lag: int) -> float:
    """Serial chi-measure at a temporal lag, via the madogram."""
    return chi_from_madogram(f_madogram(series, lag))


def cross_madogram_chi(pairs: BivariateSeries) -> float:
    """Madogram-based chi between the two components at equal times.

    Uses nu = mean |F_X(x_t) - F_Y(y_t)| / 2 on each component's own ranks.
    This is the estimator behind the reported single-number dependence
    summaries; compare with the threshold-based chi_hat(u), which it need not
    match at finite T.
    """
    _check_pairs(pairs)
    fx = _unit_ranks(pairs.x)
    fy = _unit_ranks(pairs.y)
    nu = float(np.mean(np.abs(fx - fy)) / 2.0)
    return chi_from_madogram(nu)


def independence_bootstrap_test(
    pairs: BivariateSeries, B: int, alpha: float, stream: RandomStream
) -> IndependenceTest:
    """Permutation bootstrap test of extremal independence between components.

    The second component is randomly permuted B times; the critical value is
    the (1 - alpha) quantile of the permuted cross-madogram chi values and the
    null is rejected when the observed chi exceeds it.
    """
    _check_pairs(pairs)
    B = int(B)
    if B < 200:
        raise DataError(f"need at least 200 bootstrap replicates, got {B}")
    if not (0.0 < alpha < 1.0):
        raise DataError(f"alpha must be in (0, 1), got {alpha!r}")
    fx = _unit_ranks(pairs.x)
    fy = _unit_ranks(pairs.y)
    observed = chi_from_madogram(float(np.mean(np.abs(fx - fy)) / 2.0))
    g = stream.generator
    chis = np.empty(B)
    for b in range(B):
        perm = g.permutation(fy.shape[0])
        nu = float(np.mean(np.abs(fx - fy[perm])) / 2.0)
        chis[b] = chi_from_madogram(nu)
    critical = float(np.percentile(chis, 100.0 * (1.0 - alpha)))
    return IndependenceTest(
        critical_value=critical,
        observed_chi=observed,
        reject=bool(observed > critical),
        alpha=float(alpha),
        n_boot=B,
    )
