"""Single-changepoint tests for the dependence parameter of bivariate
Husler-Reiss data.

Two statistics are computed from the same scan over candidate split points
tau in the trimmed range (tau0, T - tau0), tau0 = 2 * floor(ln T):

* the trimmed likelihood-ratio maximum  Z = max_tau LR(tau)  with
  LR(tau) = -2 [loglik(no change) - loglik(split at tau)];
* the penalized statistic  S = max_tau [LR(tau) - (2 tau / T - 1)^2 * ln T],
  whose location penalty vanishes mid-series and grows toward the trimmed
  edges.  S <= Z on every dataset, so its critical values sit below the
  likelihood-ratio ones.

The split-count convention is 1-based: tau counts the observations before the
change, so the pre-change segment is ``series[:tau]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .bhr import BivariateSeries
from .errors import DataError, NumericalError
from .params import DependenceParam, as_lambda

LR_NEGATIVE_TOL = 1e-6

METHOD_LRT = "LRT"
METHOD_MIC = "MIC"


@dataclass(frozen=True)
class LikelihoodValue:
    """Outcome of one bounded maximum-likelihood fit."""

    loglik: float
    lambda_at_optimum: DependenceParam
    converged: bool
    iterations: int

    @property
    def at_boundary(self) -> bool:
        return self.lambda_at_optimum.at_upper_bound or self.lambda_at_optimum.at_lower_bound


@dataclass(frozen=True)
class TauProfile:
    """A statistic evaluated at every candidate split count."""

    taus: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.taus.shape != self.values.shape:
            raise DataError("profile arrays must align")

    def __len__(self):
        return self.taus.shape[0]


@dataclass(frozen=True)
class ChangepointResult:
    """A detected changepoint with its test statistic and segment fits."""

    statistic: float
    tau_hat: int
    lambda_null: DependenceParam
    lambda_pre: DependenceParam
    lambda_post: DependenceParam
    profile: TauProfile
    method: str


def trim_bound(T: int) -> int:
    """Excluded margin at both series ends: 2 * floor(ln T)."""
    T = int(T)
    if T < 2:
        raise DataError(f"need at least 2 observations, got {T}")
    return 2 * int(math.floor(math.log(T)))


def loglik_h0(data: BivariateSeries, lam) -> float:
    """Log likelihood of a common dependence parameter for the whole series."""
    return float(kernels.bhr_loglik(data.x, data.y, as_lambda(lam)))


def loglik_ha(data: BivariateSeries, tau: int, lam1, lamT) -> float:
    """Log likelihood with parameter ``lam1`` before the split and ``lamT`` after.

    ``tau`` is the 1-based count of pre-split observations, 1 <= tau < T.
    """
    T = len(data)
    tau = int(tau)
    if not (1 <= tau < T):
        raise DataError(f"split count must satisfy 1 <= tau < T={T}, got {tau}")
    pre = float(kernels.bhr_loglik(data.x[:tau], data.y[:tau], as_lambda(lam1)))
    post = float(kernels.bhr_loglik(data.x[tau:], data.y[tau:], as_lambda(lamT)))
    return pre + post


def _fit(x: np.ndarray, y: np.ndarray) -> LikelihoodValue:
    lam, ll, nfev, conv = kernels.mle(x, y)
    return LikelihoodValue(
        loglik=float(ll),
        lambda_at_optimum=DependenceParam(float(lam)),
        converged=bool(conv),
        iterations=int(nfev),
    )


def mle_h0(data: BivariateSeries) -> LikelihoodValue:
    """Bounded maximum-likelihood fit of a single dependence parameter."""
    if len(data) < 2:
        raise DataError("need at least 2 observations to fit")
    return _fit(data.x, data.y)


def mle_ha(data: BivariateSeries, tau: int) -> tuple[LikelihoodValue, LikelihoodValue]:
    """Independent fits of the two segments split at ``tau`` (both need >= 2 points)."""
    T = len(data)
    tau = int(tau)
    if tau < 2 or T - tau < 2:
        raise DataError(f"both segments need >= 2 points; got tau={tau}, T={T}")
    pre = _fit(data.x[:tau], data.y[:tau])
    post = _fit(data.x[tau:], data.y[tau:])
    return pre, post


@dataclass(frozen=True)
class ChangepointScan:
    """Raw per-tau segment fits shared by both test statistics."""

    taus: np.ndarray
    lam0: float
    ll0: float
    lam1: np.ndarray
    ll1: np.ndarray
    lamT: np.ndarray
    llT: np.ndarray
    T: int

    @property
    def lr(self) -> np.ndarray:
        lr = -2.0 * (self.ll0 - (self.ll1 + self.llT))
        if float(lr.min()) < -LR_NEGATIVE_TOL:
            raise NumericalError(
                f"likelihood ratio fell below -{LR_NEGATIVE_TOL} at tau="
                f"{int(self.taus[int(np.argmin(lr))])}; segment fit failed"
            )
        return np.maximum(lr, 0.0)

    @property
    def location_penalty(self) -> np.ndarray:
        return (2.0 * self.taus / self.T - 1.0) ** 2 * math.log(self.T)


def scan_series(data: BivariateSeries) -> ChangepointScan:
    """Run the trimmed split scan once; both statistics derive from it."""
    T = len(data)
    tau0 = trim_bound(T)
    if T < 2 * tau0 + 2:
        raise DataError(f"series too short for trimmed testing: T={T}, trim={tau0}")
    raw = kernels.changepoint_scan(data.x, data.y, tau0)
    if not raw["conv0"] or not (raw["conv1"].all() and raw["convT"].all()):
        raise NumericalError("a segment fit failed to converge")
    return ChangepointScan(
        taus=raw["taus"],
        lam0=float(raw["lam0"]),
        ll0=float(raw["ll0"]),
        lam1=raw["lam1"],
        ll1=raw["ll1"],
        lamT=raw["lamT"],
        llT=raw["llT"],
        T=T,
    )


def lr_profile(data: BivariateSeries) -> TauProfile:
    """LR(tau) = -2 [loglik(no change) - loglik(split)] over the trimmed range."""
    scan = scan_series(data)
    return TauProfile(taus=scan.taus, values=scan.lr)


def _lrt_from_scan(scan: ChangepointScan) -> ChangepointResult:
    lr = scan.lr
    idx = int(np.argmax(lr))  # first maximum: smallest qualifying tau
    return ChangepointResult(
        statistic=float(lr[idx]),
        tau_hat=int(scan.taus[idx]),
        lambda_null=DependenceParam(scan.lam0),
        lambda_pre=DependenceParam(float(scan.lam1[idx])),
        lambda_post=DependenceParam(float(scan.lamT[idx])),
        profile=TauProfile(taus=scan.taus, values=lr),
        method=METHOD_LRT,
    )


def _mic_from_scan(scan: ChangepointScan) -> ChangepointResult:
    penalized = scan.lr - scan.location_penalty
    idx = int(np.argmax(penalized))
    log_t = math.log(scan.T)
    mic_values = -2.0 * (scan.ll1 + scan.llT) + 2.0 * log_t + scan.location_penalty
    return ChangepointResult(
        statistic=float(penalized[idx]),
        tau_hat=int(scan.taus[idx]),
        lambda_null=DependenceParam(scan.lam0),
        lambda_pre=DependenceParam(float(scan.lam1[idx])),
        lambda_post=DependenceParam(float(scan.lamT[idx])),
        profile=TauProfile(taus=scan.taus, values=mic_values),
        method=METHOD_MIC,
    )


def mic_null(data: BivariateSeries) -> float:
    """Penalized fit criterion of the no-change model: -2 loglik + ln T."""
    fit = mle_h0(data)
    return -2.0 * fit.loglik + math.log(len(data))


def mic_profile(data: BivariateSeries) -> TauProfile:
    """Penalized criterion of the split model over the trimmed range.

    MIC(tau) = -2 loglik(split) + [2 + (2 tau/T - 1)^2] ln T.
    """
    scan = scan_series(data)
    log_t = math.log(scan.T)
    values = -2.0 * (scan.ll1 + scan.llT) + 2.0 * log_t + scan.location_penalty
    return TauProfile(taus=scan.taus, values=values)


def lrt_statistic(data: BivariateSeries) -> ChangepointResult:
    """Trimmed likelihood-ratio test: statistic, split estimate, segment fits."""
    return _lrt_from_scan(scan_series(data))


def mic_statistic(data: BivariateSeries) -> ChangepointResult:
    """Penalized changepoint test: S = max_tau [LR(tau) - (2 tau/T - 1)^2 ln T].

    The estimated split minimizes MIC(tau), equivalently maximizes the
    penalized likelihood ratio; ties break to the smallest tau.
    """
    return _mic_from_scan(scan_series(data))


def detect(data: BivariateSeries) -> tuple[ChangepointResult, ChangepointResult]:
    """Run one scan and report both test results (LRT, MIC)."""
    scan = scan_series(data)
    return _lrt_from_scan(scan), _mic_from_scan(scan)


def statistics_only(data: BivariateSeries) -> tuple[float, float, int, int]:
    """Fast path for Monte Carlo: (Z, S, tau_lrt, tau_mic) without result objects."""
    scan = scan_series(data)
    lr = scan.lr
    pen = scan.location_penalty
    i_lrt = int(np.argmax(lr))
    penalized = lr - pen
    i_mic = int(np.argmax(penalized))
    return (
        float(lr[i_lrt]),
        float(penalized[i_mic]),
        int(scan.taus[i_lrt]),
        int(scan.taus[i_mic]),
    )
