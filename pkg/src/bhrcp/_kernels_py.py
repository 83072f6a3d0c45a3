"""Pure-NumPy numerical kernels: the fallback backend.

Mirrors the API of the compiled extension ``bhrcp._kernels``.  Everything here
is vectorized over observation arrays; the scalar optimizer and the
changepoint scan loop run in Python, so this backend is one to two orders of
magnitude slower than the compiled one on Monte Carlo workloads but
numerically equivalent (see tests/test_backend_parity.py).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

BACKEND = "python"

LOG_LAMBDA_LO = math.log(1e-3)
LOG_LAMBDA_HI = math.log(50.0)

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_GOLDEN_MEAN = 0.5 * (3.0 - math.sqrt(5.0))
_SQRT_EPS = math.sqrt(2.2e-16)

# Every fit is seeded from this fixed grid over log(lam): the likelihood is
# numerically flat below lam ~ 0.1 (independence plateau) and a local search
# started there can miss an interior optimum entirely, so the grid locates
# the global bump and a bounded Brent refinement polishes it.
GRID_K = 33
GRID_T = np.linspace(LOG_LAMBDA_LO, LOG_LAMBDA_HI, GRID_K)
_GRID_STEP = (LOG_LAMBDA_HI - LOG_LAMBDA_LO) / (GRID_K - 1)


def norm_cdf(z):
    return special.ndtr(z)


def norm_sf(z):
    return special.ndtr(np.negative(z))


def norm_logcdf(z):
    return special.log_ndtr(z)


def _ordered(x, y):
    return np.minimum(x, y), np.maximum(x, y)


def bhr_cdf(x, y, lam):
    """Joint CDF on standard Gumbel margins; coordinates may be +/-inf."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    lo, hi = _ordered(x, y)
    d = hi - lo
    a_lo = 1.0 / lam + 0.5 * lam * d
    a_hi = 1.0 / lam - 0.5 * lam * d
    with np.errstate(invalid="ignore", over="ignore"):
        w = np.exp(-lo) * norm_cdf(a_lo) + np.exp(-hi) * norm_cdf(a_hi)
        out = np.exp(-w)
    # both coordinates +inf: d = inf - inf poisons the general path
    out = np.where(lo == np.inf, 1.0, out)
    return out


def bhr_logpdf(x, y, lam):
    """Log density; symmetrized so swapped arguments share one code path."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    lo, hi = _ordered(x, y)
    d = hi - lo
    a_lo = 1.0 / lam + 0.5 * lam * d
    a_hi = 1.0 / lam - 0.5 * lam * d
    psi_lo = np.exp(-lo) * norm_cdf(a_lo)
    psi_hi = np.exp(-hi) * norm_cdf(a_hi)
    # bracket = (lam/2) * e^{-lo} * phi(a_lo) + Psi_lo * Psi_hi, in log space
    log_point_mass = math.log(0.5 * lam) - lo - 0.5 * a_lo * a_lo - _LOG_SQRT_2PI
    log_product = -lo + norm_logcdf(a_lo) - hi + norm_logcdf(a_hi)
    log_bracket = np.logaddexp(log_point_mass, log_product)
    return -(psi_lo + psi_hi) + log_bracket


def bhr_loglik(x, y, lam):
    return float(np.sum(bhr_logpdf(x, y, lam)))


def conditional_cdf(y, x, lam):
    """P(Y <= y | X = x) for the joint law on standard Gumbel margins."""
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    a = 1.0 / lam + 0.5 * lam * (y - x)
    at = 1.0 / lam + 0.5 * lam * (x - y)
    return norm_cdf(a) * np.exp(np.exp(-x) * norm_sf(a) - np.exp(-y) * norm_cdf(at))


def invert_conditional(u, x, lam, lo=-60.0, hi=60.0, tol=1e-10, maxiter=200):
    """Solve conditional_cdf(y, x, lam) = u for y by bracketed bisection/secant.

    Returns NaN entries where the root is not bracketed by [lo, hi] (callers
    treat that as a numerical failure; unreachable for uniforms strictly
    inside (0, 1)).
    """
    u = np.asarray(u, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    a = np.full(u.shape, lo, dtype=np.float64)
    b = np.full(u.shape, hi, dtype=np.float64)
    fa = conditional_cdf(a, x, lam) - u
    fb = conditional_cdf(b, x, lam) - u
    bad = (fa > 0.0) | (fb < 0.0)
    for k in range(maxiter):
        if np.all(b - a < tol):
            break
        denom = fb - fa
        safe = np.where(denom == 0.0, 1.0, denom)
        s = b - fb * (b - a) / safe
        mid = 0.5 * (a + b)
        # secant on even rounds when it lands strictly inside; bisection keeps
        # the bracket shrinking geometrically
        use_secant = (k % 2 == 0) & (denom != 0.0) & (s > a) & (s < b)
        c = np.where(use_secant, s, mid)
        fc = conditional_cdf(c, x, lam) - u
        take_left = fc < 0.0
        a = np.where(take_left, c, a)
        fa = np.where(take_left, fc, fa)
        b = np.where(take_left, b, c)
        fb = np.where(take_left, fb, fc)
    out = 0.5 * (a + b)
    return np.where(bad, np.nan, out)


def sample_given_uniforms(u1, u2, lam):
    """Map uniform pairs to a draw from the joint law by conditional inversion."""
    x = -np.log(-np.log(np.asarray(u1, dtype=np.float64)))
    y = invert_conditional(u2, x, lam)
    return x, y


def _neg_loglik_t(x, y, t):
    v = bhr_loglik(x, y, math.exp(t))
    if not math.isfinite(v):
        return 1e300
    return -v


def _brent_min(x, y, ta, tb, xatol, maxiter):
    """Bounded scalar minimization of -loglik over t = log(lam).

    Port of the classical golden-section + parabolic-interpolation scheme;
    both backends run the identical algorithm so optima agree to tolerance.
    """
    a, b = ta, tb
    fulc = a + _GOLDEN_MEAN * (b - a)
    nfc = xf = fulc
    rat = e = 0.0
    fx = _neg_loglik_t(x, y, xf)
    num = 1
    ffulc = fnfc = fx
    xm = 0.5 * (a + b)
    tol1 = _SQRT_EPS * abs(xf) + xatol / 3.0
    tol2 = 2.0 * tol1
    converged = True

    while abs(xf - xm) > (tol2 - 0.5 * (b - a)):
        golden = True
        if abs(e) > tol1:
            golden = False
            r = (xf - nfc) * (fx - ffulc)
            q = (xf - fulc) * (fx - fnfc)
            p = (xf - fulc) * q - (xf - nfc) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            r = e
            e = rat
            if (abs(p) < abs(0.5 * q * r)) and (p > q * (a - xf)) and (p < q * (b - xf)):
                rat = p / q
                xtrial = xf + rat
                if ((xtrial - a) < tol2) or ((b - xtrial) < tol2):
                    si = math.copysign(1.0, xm - xf) if xm != xf else 1.0
                    rat = tol1 * si
            else:
                golden = True
        if golden:
            e = (a - xf) if xf >= xm else (b - xf)
            rat = _GOLDEN_MEAN * e
        si = math.copysign(1.0, rat) if rat != 0.0 else 1.0
        xtrial = xf + si * max(abs(rat), tol1)
        fu = _neg_loglik_t(x, y, xtrial)
        num += 1
        if fu <= fx:
            if xtrial >= xf:
                a = xf
            else:
                b = xf
            fulc, ffulc = nfc, fnfc
            nfc, fnfc = xf, fx
            xf, fx = xtrial, fu
        else:
            if xtrial < xf:
                a = xtrial
            else:
                b = xtrial
            if (fu <= fnfc) or (nfc == xf):
                fulc, ffulc = nfc, fnfc
                nfc, fnfc = xtrial, fu
            elif (fu <= ffulc) or (fulc == xf) or (fulc == nfc):
                fulc, ffulc = xtrial, fu
        xm = 0.5 * (a + b)
        tol1 = _SQRT_EPS * abs(xf) + xatol / 3.0
        tol2 = 2.0 * tol1
        if num >= maxiter:
            converged = False
            break
    return xf, fx, num, converged


def _refine_around(x, y, t_center, xatol, maxiter):
    """Brent refinement inside one grid step either side of ``t_center``."""
    ta = max(LOG_LAMBDA_LO, t_center - _GRID_STEP)
    tb = min(LOG_LAMBDA_HI, t_center + _GRID_STEP)
    return _brent_min(x, y, ta, tb, xatol, maxiter)


def _refine_at(x, y, k_best, xatol, maxiter):
    return _refine_around(x, y, GRID_T[k_best], xatol, maxiter)


def mle(x, y, xatol=1e-8, maxiter=200):
    """Maximize the log likelihood over lam in [1e-3, 50].

    Returns
    -------
    (lam_hat, loglik, n_evals, converged)
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    grid_ll = np.array([bhr_loglik(x, y, math.exp(t)) for t in GRID_T])
    k = int(np.argmax(grid_ll))
    t, f, num, conv = _refine_at(x, y, k, xatol, maxiter)
    if grid_ll[k] > -f:  # keep the better of seed and refinement
        t, f = GRID_T[k], -grid_ll[k]
    return math.exp(t), -f, num + GRID_K, conv


def changepoint_scan(x, y, tau0, xatol=1e-8, maxiter=200):
    """Fit the no-change model plus every trimmed split of the series.

    For each split point tau in (tau0, T - tau0), exclusive, fits separate
    dependence parameters to observations [0, tau) and [tau, T).  Grid
    log likelihoods for every prefix and suffix come from one pass of
    cumulative sums per grid node, so seeding all segment fits costs
    O(GRID_K * T) total.

    Returns
    -------
    dict with keys ``taus`` (1-based split counts), ``lam0, ll0, conv0``
    (no-change fit) and per-tau arrays ``lam1, ll1, conv1, lamT, llT, convT``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    T = x.shape[0]
    lo_tau = int(tau0) + 1
    hi_tau = T - int(tau0) - 1
    if hi_tau < lo_tau:
        raise ValueError(f"trimmed split range is empty for T={T}, tau0={tau0}")
    taus = np.arange(lo_tau, hi_tau + 1, dtype=np.int64)
    n_tau = taus.shape[0]

    # prefix[k, t] = loglik of observations [0, t) at grid node k
    prefix = np.empty((GRID_K, T + 1))
    for k, t in enumerate(GRID_T):
        prefix[k, 0] = 0.0
        np.cumsum(bhr_logpdf(x, y, math.exp(t)), out=prefix[k, 1:])
    total = prefix[:, T]

    k0 = int(np.argmax(total))
    t0, f0, _, conv0 = _refine_at(x, y, k0, xatol, maxiter)
    if total[k0] > -f0:
        t0, f0 = GRID_T[k0], -total[k0]

    # segment log likelihoods at the pooled optimum: offering these as fit
    # candidates guarantees loglik(split) >= loglik(no change) even when an
    # interior bump ties with the flat plateau within optimizer resolution
    c0 = np.empty(T + 1)
    c0[0] = 0.0
    np.cumsum(bhr_logpdf(x, y, math.exp(t0)), out=c0[1:])

    def _segment_fit(seg_x, seg_y, grid_vals, ll_at_t0):
        k = int(np.argmax(grid_vals))
        t, f, _, c = _refine_at(seg_x, seg_y, k, xatol, maxiter)
        if grid_vals[k] > -f:
            t, f = GRID_T[k], -grid_vals[k]
        if ll_at_t0 > -f:
            t2, f2, _, c2 = _refine_around(seg_x, seg_y, t0, xatol, maxiter)
            if ll_at_t0 > -f2:
                t2, f2 = t0, -ll_at_t0
            if -f2 > -f:
                t, f, c = t2, f2, c2
        return t, f, c

    lam1 = np.empty(n_tau)
    ll1 = np.empty(n_tau)
    conv1 = np.empty(n_tau, dtype=bool)
    lamT = np.empty(n_tau)
    llT = np.empty(n_tau)
    convT = np.empty(n_tau, dtype=bool)
    for i, tau in enumerate(taus):
        t, f, c = _segment_fit(x[:tau], y[:tau], prefix[:, tau], c0[tau])
        lam1[i], ll1[i], conv1[i] = math.exp(t), -f, c
        t, f, c = _segment_fit(x[tau:], y[tau:], total - prefix[:, tau], c0[T] - c0[tau])
        lamT[i], llT[i], convT[i] = math.exp(t), -f, c

    return {
        "taus": taus,
        "lam0": math.exp(t0),
        "ll0": -f0,
        "conv0": bool(conv0),
        "lam1": lam1,
        "ll1": ll1,
        "conv1": conv1,
        "lamT": lamT,
        "llT": llT,
        "convT": convT,
    }
