# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical kernels: the hot paths behind likelihood evaluation,
maximum-likelihood fitting, the changepoint scan, and the sampler.

API-compatible with the pure-Python backend ``bhrcp._kernels_py``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, NAN, erfc, exp, fabs, isfinite, log, log1p, sqrt

cnp.import_array()

BACKEND = "ext"

cdef double _LOG_LAMBDA_LO = -6.907755278982137  # log(1e-3)
cdef double _LOG_LAMBDA_HI = 3.912023005428146   # log(50)
LOG_LAMBDA_LO = _LOG_LAMBDA_LO
LOG_LAMBDA_HI = _LOG_LAMBDA_HI

cdef double _SQRT1_2 = 0.7071067811865476
cdef double _LOG_SQRT_2PI = 0.9189385332046727
cdef double _GOLDEN_MEAN = 0.3819660112501051
cdef double _SQRT_EPS = 1.4832396974191326e-08  # sqrt(2.2e-16)
cdef double _BIG = 1e300

# Fixed seeding grid over log(lam); see the pure-Python twin for rationale
# (the likelihood has a flat near-independence plateau a local search can get
# stuck on).
DEF _GRID_K = 33
cdef double _GRID_STEP = (_LOG_LAMBDA_HI - _LOG_LAMBDA_LO) / (_GRID_K - 1)
cdef double[_GRID_K] _GRID_T
cdef int _gi
for _gi in range(_GRID_K):
    _GRID_T[_gi] = _LOG_LAMBDA_LO + _gi * _GRID_STEP
_GRID_T[_GRID_K - 1] = _LOG_LAMBDA_HI
GRID_K = _GRID_K
GRID_T = np.array([_GRID_T[i] for i in range(_GRID_K)])


cdef inline double _norm_cdf(double z) noexcept nogil:
    return 0.5 * erfc(-z * _SQRT1_2)


cdef inline double _norm_sf(double z) noexcept nogil:
    return 0.5 * erfc(z * _SQRT1_2)


cdef inline double _norm_logcdf(double z) noexcept nogil:
    # erfc underflows near z = -37.5; switch to the asymptotic tail expansion
    cdef double t
    if z > -37.5:
        return log(0.5 * erfc(-z * _SQRT1_2))
    t = 1.0 / (z * z)
    return (-0.5 * z * z - _LOG_SQRT_2PI - log(-z)
            + log1p(t * (-1.0 + t * (3.0 + t * (-15.0 + t * 105.0)))))


cdef inline double _logaddexp(double u, double v) noexcept nogil:
    if u == -INFINITY:
        return v
    if v == -INFINITY:
        return u
    if u > v:
        return u + log1p(exp(v - u))
    return v + log1p(exp(u - v))


cdef inline double _bhr_cdf_point(double x, double y, double lam) noexcept nogil:
    cdef double lo, hi, d, a_lo, a_hi, w
    if x != x or y != y:
        return NAN
    if x <= y:
        lo = x; hi = y
    else:
        lo = y; hi = x
    if lo == INFINITY:
        return 1.0
    d = hi - lo
    a_lo = 1.0 / lam + 0.5 * lam * d
    a_hi = 1.0 / lam - 0.5 * lam * d
    w = exp(-lo) * _norm_cdf(a_lo) + exp(-hi) * _norm_cdf(a_hi)
    return exp(-w)


cdef inline double _bhr_logpdf_point(double x, double y, double lam) noexcept nogil:
    cdef double lo, hi, d, a_lo, a_hi, psi_lo, psi_hi
    cdef double log_point_mass, log_product
    if x <= y:
        lo = x; hi = y
    else:
        lo = y; hi = x
    d = hi - lo
    a_lo = 1.0 / lam + 0.5 * lam * d
    a_hi = 1.0 / lam - 0.5 * lam * d
    psi_lo = exp(-lo) * _norm_cdf(a_lo)
    psi_hi = exp(-hi) * _norm_cdf(a_hi)
    log_point_mass = log(0.5 * lam) - lo - 0.5 * a_lo * a_lo - _LOG_SQRT_2PI
    log_product = -lo + _norm_logcdf(a_lo) - hi + _norm_logcdf(a_hi)
    return -(psi_lo + psi_hi) + _logaddexp(log_point_mass, log_product)


cdef inline double _cond_cdf_point(double y, double x, double lam) noexcept nogil:
    cdef double a = 1.0 / lam + 0.5 * lam * (y - x)
    cdef double at = 1.0 / lam + 0.5 * lam * (x - y)
    return _norm_cdf(a) * exp(exp(-x) * _norm_sf(a) - exp(-y) * _norm_cdf(at))


cdef double _cond_inv_point(double u, double x, double lam,
                            double lo, double hi, double tol, int maxiter) noexcept nogil:
    cdef double a = lo, b = hi, fa, fb, c, fc, denom, s, mid
    cdef int k
    fa = _cond_cdf_point(a, x, lam) - u
    fb = _cond_cdf_point(b, x, lam) - u
    if fa > 0.0 or fb < 0.0:
        return NAN
    for k in range(maxiter):
        if b - a < tol:
            break
        mid = 0.5 * (a + b)
        denom = fb - fa
        c = mid
        if (k % 2 == 0) and denom != 0.0:
            s = b - fb * (b - a) / denom
            if s > a and s < b:
                c = s
        fc = _cond_cdf_point(c, x, lam) - u
        if fc < 0.0:
            a = c
            fa = fc
        else:
            b = c
            fb = fc
    return 0.5 * (a + b)


cdef inline double _neg_loglik(const double* x, const double* y, Py_ssize_t n,
                               double t) noexcept nogil:
    cdef double lam = exp(t)
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        acc += _bhr_logpdf_point(x[i], y[i], lam)
    if not isfinite(acc):
        return _BIG
    return -acc


cdef inline double _sign(double v) noexcept nogil:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 1.0


cdef (double, double, int, bint) _brent_min(const double* x, const double* y, Py_ssize_t n,
                                            double ta, double tb,
                                            double xatol, int maxiter) noexcept nogil:
    # bounded golden-section search refined by parabolic steps
    cdef double a = ta, b = tb
    cdef double fulc = a + _GOLDEN_MEAN * (b - a)
    cdef double nfc = fulc, xf = fulc
    cdef double rat = 0.0, e = 0.0
    cdef double fx = _neg_loglik(x, y, n, xf)
    cdef int num = 1
    cdef double ffulc = fx, fnfc = fx
    cdef double xm = 0.5 * (a + b)
    cdef double tol1 = _SQRT_EPS * fabs(xf) + xatol / 3.0
    cdef double tol2 = 2.0 * tol1
    cdef bint converged = True
    cdef bint golden
    cdef double r, q, p, si, xtrial, fu

    while fabs(xf - xm) > (tol2 - 0.5 * (b - a)):
        golden = True
        if fabs(e) > tol1:
            golden = False
            r = (xf - nfc) * (fx - ffulc)
            q = (xf - fulc) * (fx - fnfc)
            p = (xf - fulc) * q - (xf - nfc) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = fabs(q)
            r = e
            e = rat
            if (fabs(p) < fabs(0.5 * q * r)) and (p > q * (a - xf)) and (p < q * (b - xf)):
                rat = p / q
                xtrial = xf + rat
                if ((xtrial - a) < tol2) or ((b - xtrial) < tol2):
                    si = _sign(xm - xf)
                    rat = tol1 * si
            else:
                golden = True
        if golden:
            if xf >= xm:
                e = a - xf
            else:
                e = b - xf
            rat = _GOLDEN_MEAN * e
        si = _sign(rat)
        xtrial = xf + si * max(fabs(rat), tol1)
        fu = _neg_loglik(x, y, n, xtrial)
        num += 1
        if fu <= fx:
            if xtrial >= xf:
                a = xf
            else:
                b = xf
            fulc = nfc; ffulc = fnfc
            nfc = xf; fnfc = fx
            xf = xtrial; fx = fu
        else:
            if xtrial < xf:
                a = xtrial
            else:
                b = xtrial
            if (fu <= fnfc) or (nfc == xf):
                fulc = nfc; ffulc = fnfc
                nfc = xtrial; fnfc = fu
            elif (fu <= ffulc) or (fulc == xf) or (fulc == nfc):
                fulc = xtrial; ffulc = fu
        xm = 0.5 * (a + b)
        tol1 = _SQRT_EPS * fabs(xf) + xatol / 3.0
        tol2 = 2.0 * tol1
        if num >= maxiter:
            converged = False
            break
    return xf, fx, num, converged


cdef (double, double, int, bint) _refine_around(const double* x, const double* y, Py_ssize_t n,
                                                double t_center, double xatol,
                                                int maxiter) noexcept nogil:
    cdef double ta = max(_LOG_LAMBDA_LO, t_center - _GRID_STEP)
    cdef double tb = min(_LOG_LAMBDA_HI, t_center + _GRID_STEP)
    return _brent_min(x, y, n, ta, tb, xatol, maxiter)


cdef (double, double, bint) _segment_fit(const double* x, const double* y, Py_ssize_t n,
                                         const double* grid_vals, Py_ssize_t stride,
                                         double t0, double ll_at_t0,
                                         double xatol, int maxiter) noexcept nogil:
    # grid_vals[k * stride] = segment loglik at grid node k; the pooled
    # optimum (t0, ll_at_t0) is offered as an extra candidate so a split
    # never scores below the no-change fit
    cdef int k, k_best = 0
    cdef double t, f, t2, f2
    cdef int num
    cdef bint c, c2
    for k in range(1, _GRID_K):
        if grid_vals[k * stride] > grid_vals[k_best * stride]:
            k_best = k
    t, f, num, c = _refine_around(x, y, n, _GRID_T[k_best], xatol, maxiter)
    if grid_vals[k_best * stride] > -f:
        t = _GRID_T[k_best]
        f = -grid_vals[k_best * stride]
    if ll_at_t0 > -f:
        t2, f2, num, c2 = _refine_around(x, y, n, t0, xatol, maxiter)
        if ll_at_t0 > -f2:
            t2 = t0
            f2 = -ll_at_t0
        if -f2 > -f:
            t = t2
            f = f2
            c = c2
    return t, f, c


def norm_cdf(z):
    z_arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] zv = z_arr.ravel()
    out = np.empty(zv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(zv.shape[0]):
            ov[i] = _norm_cdf(zv[i])
    return out.reshape(z_arr.shape)


def norm_sf(z):
    z_arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] zv = z_arr.ravel()
    out = np.empty(zv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(zv.shape[0]):
            ov[i] = _norm_sf(zv[i])
    return out.reshape(z_arr.shape)


def norm_logcdf(z):
    z_arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] zv = z_arr.ravel()
    out = np.empty(zv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(zv.shape[0]):
            ov[i] = _norm_logcdf(zv[i])
    return out.reshape(z_arr.shape)


def bhr_cdf(x, y, double lam):
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    y_arr = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] xv = x_arr.ravel()
    cdef double[::1] yv = y_arr.ravel()
    out = np.empty(xv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            ov[i] = _bhr_cdf_point(xv[i], yv[i], lam)
    return out.reshape(x_arr.shape)


def bhr_logpdf(x, y, double lam):
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    y_arr = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] xv = x_arr.ravel()
    cdef double[::1] yv = y_arr.ravel()
    out = np.empty(xv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            ov[i] = _bhr_logpdf_point(xv[i], yv[i], lam)
    return out.reshape(x_arr.shape)


def bhr_loglik(x, y, double lam):
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    y_arr = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] xv = x_arr.ravel()
    cdef double[::1] yv = y_arr.ravel()
    cdef double acc = 0.0
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            acc += _bhr_logpdf_point(xv[i], yv[i], lam)
    return acc


def conditional_cdf(y, x, double lam):
    y_arr = np.ascontiguousarray(y, dtype=np.float64)
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = y_arr.ravel()
    cdef double[::1] xv = x_arr.ravel()
    out = np.empty(yv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(yv.shape[0]):
            ov[i] = _cond_cdf_point(yv[i], xv[i], lam)
    return out.reshape(y_arr.shape)


def invert_conditional(u, x, double lam, double lo=-60.0, double hi=60.0,
                       double tol=1e-10, int maxiter=200):
    u_arr = np.ascontiguousarray(u, dtype=np.float64)
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] uv = u_arr.ravel()
    cdef double[::1] xv = x_arr.ravel()
    out = np.empty(uv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(uv.shape[0]):
            ov[i] = _cond_inv_point(uv[i], xv[i], lam, lo, hi, tol, maxiter)
    return out.reshape(u_arr.shape)


def sample_given_uniforms(u1, u2, double lam):
    x = -np.log(-np.log(np.ascontiguousarray(u1, dtype=np.float64)))
    y = invert_conditional(u2, x, lam)
    return x, y


def mle(x, y, double xatol=1e-8, int maxiter=200):
    """Maximize the log likelihood over lam in [1e-3, 50].

    Returns (lam_hat, loglik, n_evals, converged).
    """
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    y_arr = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] xv = x_arr
    cdef double[::1] yv = y_arr
    cdef Py_ssize_t n = xv.shape[0]
    cdef double t, f, best_ll, ll
    cdef int num, k, k_best
    cdef bint conv
    with nogil:
        k_best = 0
        best_ll = -_neg_loglik(&xv[0], &yv[0], n, _GRID_T[0])
        for k in range(1, _GRID_K):
            ll = -_neg_loglik(&xv[0], &yv[0], n, _GRID_T[k])
            if ll > best_ll:
                best_ll = ll
                k_best = k
        t, f, num, conv = _refine_around(&xv[0], &yv[0], n, _GRID_T[k_best], xatol, maxiter)
        if best_ll > -f:
            t = _GRID_T[k_best]
            f = -best_ll
    return exp(t), -f, num + _GRID_K, bool(conv)


def changepoint_scan(x, y, Py_ssize_t tau0, double xatol=1e-8, int maxiter=200):
    """Fit the no-change model plus every trimmed split of the series.

    See the pure-Python backend for the contract; this is the compiled twin.
    """
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    y_arr = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] xv = x_arr
    cdef double[::1] yv = y_arr
    cdef Py_ssize_t T = xv.shape[0]
    cdef Py_ssize_t lo_tau = tau0 + 1
    cdef Py_ssize_t hi_tau = T - tau0 - 1
    if hi_tau < lo_tau:
        raise ValueError(f"trimmed split range is empty for T={T}, tau0={tau0}")
    cdef Py_ssize_t n_tau = hi_tau - lo_tau + 1

    taus = np.arange(lo_tau, hi_tau + 1, dtype=np.int64)
    lam1 = np.empty(n_tau)
    ll1 = np.empty(n_tau)
    conv1 = np.empty(n_tau, dtype=np.uint8)
    lamT = np.empty(n_tau)
    llT = np.empty(n_tau)
    convT = np.empty(n_tau, dtype=np.uint8)
    prefix = np.empty((_GRID_K, T + 1))
    suffix = np.empty((_GRID_K, T + 1))
    c0_arr = np.empty(T + 1)
    cdef double[::1] lam1v = lam1, ll1v = ll1, lamTv = lamT, llTv = llT
    cdef cnp.uint8_t[::1] conv1v = conv1, convTv = convT
    cdef double[:, ::1] pre = prefix
    cdef double[:, ::1] suf = suffix
    cdef double[::1] c0 = c0_arr

    cdef double t0, f0, t, f, acc, lam_k
    cdef int num, k, k_best
    cdef bint cv0, c
    cdef Py_ssize_t i, tau

    with nogil:
        # prefix[k, t] = loglik of observations [0, t) at grid node k;
        # suffix[k, t] = loglik of observations [t, T)
        for k in range(_GRID_K):
            lam_k = exp(_GRID_T[k])
            acc = 0.0
            pre[k, 0] = 0.0
            for i in range(T):
                acc += _bhr_logpdf_point(xv[i], yv[i], lam_k)
                pre[k, i + 1] = acc
            for i in range(T + 1):
                suf[k, i] = pre[k, T] - pre[k, i]

        k_best = 0
        for k in range(1, _GRID_K):
            if pre[k, T] > pre[k_best, T]:
                k_best = k
        t0, f0, num, cv0 = _refine_around(&xv[0], &yv[0], T, _GRID_T[k_best], xatol, maxiter)
        if pre[k_best, T] > -f0:
            t0 = _GRID_T[k_best]
            f0 = -pre[k_best, T]

        # segment logliks at the pooled optimum (see _segment_fit)
        lam_k = exp(t0)
        acc = 0.0
        c0[0] = 0.0
        for i in range(T):
            acc += _bhr_logpdf_point(xv[i], yv[i], lam_k)
            c0[i + 1] = acc

        for i in range(n_tau):
            tau = lo_tau + i
            t, f, c = _segment_fit(&xv[0], &yv[0], tau,
                                   &pre[0, tau], T + 1, t0, c0[tau], xatol, maxiter)
            lam1v[i] = exp(t)
            ll1v[i] = -f
            conv1v[i] = c
            t, f, c = _segment_fit(&xv[tau], &yv[tau], T - tau,
                                   &suf[0, tau], T + 1, t0, c0[T] - c0[tau], xatol, maxiter)
            lamTv[i] = exp(t)
            llTv[i] = -f
            convTv[i] = c

    return {
        "taus": taus,
        "lam0": exp(t0),
        "ll0": -f0,
        "conv0": bool(cv0),
        "lam1": lam1,
        "ll1": ll1,
        "conv1": conv1.astype(bool),
        "lamT": lamT,
        "llT": llT,
        "convT": convT.astype(bool),
    }
