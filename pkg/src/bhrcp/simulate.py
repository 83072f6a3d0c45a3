"""Reproducible parallel Monte Carlo: critical values, power, changepoint
estimator consistency, and parametric-bootstrap p-values.

Every replicate draws from its own counter-based substream, so results are
bitwise identical for a given (config, seed) regardless of worker count or
scheduling.  Replicates whose segment fits fail to converge are dropped and
counted; more than 0.1% failures aborts the run.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bhr import BivariateSeries, sample_bhr
from .changepoint import METHOD_LRT, METHOD_MIC, detect, statistics_only, trim_bound
from .errors import DataError, NumericalError
from .params import as_lambda
from .rng import RandomStream

MAX_FAILURE_FRACTION = 1e-3
_SE_BOOT_RESAMPLES = 500


@dataclass(frozen=True)
class SimulationConfig:
    """Settings for one Monte Carlo run at a single (T, lambda) design point.

    ``lambda1`` is the pre-change (and null) parameter; ``lambdaT`` the
    post-change one.  ``beta`` places the true changepoint at floor(beta * T).
    """

    B: int
    seed: int
    T: int
    lambda1: float
    lambdaT: float | None = None
    beta: float = 0.5
    alphas: tuple[float, ...] = (0.01, 0.05, 0.1)
    deltas: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self):
        if self.B < 100:
            raise DataError(f"need at least 100 replicates, got {self.B}")
        if not (0.0 < self.beta < 1.0):
            raise DataError(f"beta must be in (0, 1), got {self.beta}")
        if any(not (0.0 < a < 1.0) for a in self.alphas):
            raise DataError(f"alphas must lie in (0, 1), got {self.alphas}")
        if self.T < 2 * trim_bound(self.T) + 2:
            raise DataError(f"T={self.T} too short for the trimmed statistics")
        as_lambda(self.lambda1)
        if self.lambdaT is not None:
            as_lambda(self.lambdaT)

    @property
    def tau_true(self) -> int:
        return int(math.floor(self.beta * self.T))


@dataclass(frozen=True)
class CriticalValueEntry:
    method: str
    T: int
    lam: float
    alpha: float
    cutoff: float
    se: float
    B: int
    seed: int


class CriticalValueTable:
    """Cutoffs keyed by (method, T, lambda, alpha), with Monte Carlo errors."""

    def __init__(self, entries):
        self.entries: list[CriticalValueEntry] = list(entries)
        self._index = {
            (e.method, e.T, e.lam, e.alpha): e for e in self.entries
        }
        if len(self._index) != len(self.entries):
            raise DataError("duplicate critical-value entries")
        for e in self.entries:
            if e.se <= 0.0:
                raise DataError(f"standard error must be positive: {e}")

    def lookup(self, method: str, T: int, lam, alpha: float) -> CriticalValueEntry:
        key = (method, int(T), float(as_lambda(lam)), float(alpha))
        try:
            return self._index[key]
        except KeyError:
            raise DataError(f"no critical value for {key}") from None

    def extend(self, other: "CriticalValueTable") -> "CriticalValueTable":
        return CriticalValueTable(self.entries + other.entries)

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        return isinstance(other, CriticalValueTable) and self.entries == other.entries

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "T", "lambda", "alpha", "cutoff", "se", "B", "seed"])
            for e in self.entries:
                w.writerow([e.method, e.T, repr(e.lam), repr(e.alpha),
                            repr(e.cutoff), repr(e.se), e.B, e.seed])

    @classmethod
    def from_csv(cls, path) -> "CriticalValueTable":
        entries = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                entries.append(CriticalValueEntry(
                    method=row["method"], T=int(row["T"]), lam=float(row["lambda"]),
                    alpha=float(row["alpha"]), cutoff=float(row["cutoff"]),
                    se=float(row["se"]), B=int(row["B"]), seed=int(row["seed"]),
                ))
        return cls(entries)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"entries": [asdict(e) for e in self.entries]}, fh, indent=2)

    @classmethod
    def from_json(cls, path) -> "CriticalValueTable":
        with open(path) as fh:
            payload = json.load(fh)
        return cls(CriticalValueEntry(**e) for e in payload["entries"])


@dataclass(frozen=True)
class PowerResult:
    config: SimulationConfig
    powers: dict  # method -> {alpha: rejection frequency}
    n_valid: int


@dataclass(frozen=True)
class ConsistencyResult:
    config: SimulationConfig
    inclusion: dict  # method -> {delta: P(|tau_hat - tau| <= delta)}
    bias: dict  # method -> mean(tau_hat - tau)
    mse: dict  # method -> mean squared error
    n_valid: int


@dataclass(frozen=True)
class BootstrapPValues:
    p_lrt: float
    p_mic: float
    observed_lrt: object
    observed_mic: object
    n_valid: int
    B: int


def _simulate_one(stream: RandomStream, T: int, lam1: float,
                  lamT: float | None, tau_true: int | None) -> BivariateSeries:
    if tau_true is None or lamT is None or lamT == lam1:
        return sample_bhr(lam1, T, stream)
    pre = sample_bhr(lam1, tau_true, stream)
    post = sample_bhr(lamT, T - tau_true, stream)
    return BivariateSeries(np.concatenate([pre.x, post.x]),
                           np.concatenate([pre.y, post.y]))


def _stats_chunk(args):
    stream, b_indices, T, lam1, lamT, tau_true = args
    out = []
    for b in b_indices:
        sub = stream.substream(b)
        try:
            data = _simulate_one(sub, T, lam1, lamT, tau_true)
            z, s, tau_l, tau_m = statistics_only(data)
            out.append((b, z, s, tau_l, tau_m, True))
        except NumericalError:
            out.append((b, math.nan, math.nan, -1, -1, False))
    return out


def _run_replicates(stream, B, T, lam1, lamT, tau_true, workers):
    """Dispatch B replicates; returns (z, s, tau_lrt, tau_mic, ok) arrays."""
    workers = resolve_workers(workers)
    indices = np.arange(B)
    if workers <= 1:
        results = _stats_chunk((stream, indices, T, lam1, lamT, tau_true))
    else:
        n_chunks = min(B, workers * 8)
        chunks = [(stream, idx, T, lam1, lamT, tau_true)
                  for idx in np.array_split(indices, n_chunks)]
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_stats_chunk, chunks):
                results.extend(part)
    z = np.empty(B)
    s = np.empty(B)
    tau_l = np.empty(B, dtype=np.int64)
    tau_m = np.empty(B, dtype=np.int64)
    ok = np.zeros(B, dtype=bool)
    for b, zb, sb, tlb, tmb, okb in results:
        z[b], s[b], tau_l[b], tau_m[b], ok[b] = zb, sb, tlb, tmb, okb
    n_failed = int(B - ok.sum())
    if n_failed > MAX_FAILURE_FRACTION * B:
        raise NumericalError(f"{n_failed}/{B} replicates failed to converge")
    return z, s, tau_l, tau_m, ok


def resolve_workers(workers) -> int:
    if workers is None:
        return os.cpu_count() or 1
    return max(1, int(workers))


def _percentile_se(values: np.ndarray, q: float, stream: RandomStream) -> float:
    g = stream.generator
    n = values.shape[0]
    boots = np.empty(_SE_BOOT_RESAMPLES)
    for j in range(_SE_BOOT_RESAMPLES):
        boots[j] = np.percentile(values[g.integers(0, n, n)], q)
    return float(boots.std(ddof=1))


def simulate_critical_values(cfg: SimulationConfig, workers=1) -> CriticalValueTable:
    """Monte Carlo critical values under no change at ``cfg.lambda1``.

    Cutoffs are the empirical 100(1 - alpha) percentiles of the two statistics
    across B replicates; their standard errors come from a nonparametric
    bootstrap over the replicate statistics.
    """
    stream = RandomStream(cfg.seed)
    lam = as_lambda(cfg.lambda1)
    z, s, _, _, ok = _run_replicates(stream, cfg.B, cfg.T, lam, None, None, workers)
    z, s = z[ok], s[ok]
    se_stream = stream.substream(cfg.B)
    entries = []
    for j, (method, values) in enumerate(((METHOD_LRT, z), (METHOD_MIC, s))):
        for i, alpha in enumerate(cfg.alphas):
            q = 100.0 * (1.0 - alpha)
            cutoff = float(np.percentile(values, q))
            se = _percentile_se(values, q, se_stream.substream(j * len(cfg.alphas) + i))
            entries.append(CriticalValueEntry(
                method=method, T=cfg.T, lam=lam, alpha=float(alpha),
                cutoff=cutoff, se=se, B=int(ok.sum()), seed=cfg.seed,
            ))
    return CriticalValueTable(entries)


def simulate_null_statistics(cfg: SimulationConfig, workers=1):
    """Raw (Z, S) statistic samples under the null; for size calibration."""
    stream = RandomStream(cfg.seed)
    z, s, _, _, ok = _run_replicates(
        stream, cfg.B, cfg.T, as_lambda(cfg.lambda1), None, None, workers)
    return z[ok], s[ok]


def simulate_power(cfg: SimulationConfig, table: CriticalValueTable, workers=1) -> PowerResult:
    """Empirical rejection frequencies for a step lambda1 -> lambdaT at floor(beta T)."""
    if cfg.lambdaT is None:
        raise DataError("power simulation needs lambdaT")
    lam1 = as_lambda(cfg.lambda1)
    lamT = as_lambda(cfg.lambdaT)
    cutoffs = {
        (m, a): table.lookup(m, cfg.T, lam1, a).cutoff
        for m in (METHOD_LRT, METHOD_MIC) for a in cfg.alphas
    }
    stream = RandomStream(cfg.seed)
    z, s, _, _, ok = _run_replicates(stream, cfg.B, cfg.T, lam1, lamT, cfg.tau_true, workers)
    z, s = z[ok], s[ok]
    powers = {METHOD_LRT: {}, METHOD_MIC: {}}
    for a in cfg.alphas:
        powers[METHOD_LRT][float(a)] = float(np.mean(z >= cutoffs[(METHOD_LRT, a)]))
        powers[METHOD_MIC][float(a)] = float(np.mean(s >= cutoffs[(METHOD_MIC, a)]))
    return PowerResult(config=cfg, powers=powers, n_valid=int(ok.sum()))


def simulate_consistency(cfg: SimulationConfig, workers=1) -> ConsistencyResult:
    """Neighborhood-inclusion probabilities, bias, and MSE of the split estimators."""
    if cfg.lambdaT is None or as_lambda(cfg.lambdaT) == as_lambda(cfg.lambda1):
        raise DataError("consistency simulation needs lambdaT distinct from lambda1")
    stream = RandomStream(cfg.seed)
    tau_true = cfg.tau_true
    _, _, tau_l, tau_m, ok = _run_replicates(
        stream, cfg.B, cfg.T, as_lambda(cfg.lambda1), as_lambda(cfg.lambdaT),
        tau_true, workers)
    inclusion = {}
    bias = {}
    mse = {}
    for method, taus in ((METHOD_LRT, tau_l[ok]), (METHOD_MIC, tau_m[ok])):
        err = taus.astype(np.float64) - tau_true
        inclusion[method] = {
            int(d): float(np.mean(np.abs(err) <= d)) for d in cfg.deltas
        }
        bias[method] = float(err.mean())
        mse[method] = float(np.mean(err ** 2))
    return ConsistencyResult(config=cfg, inclusion=inclusion, bias=bias,
                             mse=mse, n_valid=int(ok.sum()))


def bootstrap_pvalue(data: BivariateSeries, B: int, stream: RandomStream,
                     workers=1) -> BootstrapPValues:
    """Parametric-bootstrap p-values for both tests on observed data.

    Fits the no-change parameter, simulates B null datasets at the fitted
    value, and reports the fraction of null statistics at or above the
    observed ones.
    """
    B = int(B)
    if B < 200:
        raise DataError(f"need at least 200 bootstrap replicates, got {B}")
    obs_lrt, obs_mic = detect(data)
    lam_null = obs_lrt.lambda_null.lam
    z, s, _, _, ok = _run_replicates(stream, B, len(data), lam_null, None, None, workers)
    z, s = z[ok], s[ok]
    n_valid = int(ok.sum())
    return BootstrapPValues(
        p_lrt=float(np.mean(z >= obs_lrt.statistic)),
        p_mic=float(np.mean(s >= obs_mic.statistic)),
        observed_lrt=obs_lrt,
        observed_mic=obs_mic,
        n_valid=n_valid,
        B=B,
    )
