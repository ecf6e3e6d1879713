# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled allocation kernel; mirrors ``_pykernels`` line for line."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, exp, expm1, sqrt, cbrt, fabs, INFINITY, isfinite

cnp.import_array()

BACKEND = "cython"

cdef double LN2 = log(2.0)
cdef double INV_GOLDEN = (sqrt(5.0) - 1.0) / 2.0
INNER_EXACT = 0
INNER_GOLDEN = 1


cdef inline double _excess_curve(double u) noexcept nogil:
    if u < 0.05:
        return u * u * (1.0 / 2 + u * (1.0 / 3 + u * (1.0 / 8 + u * (1.0 / 30 + u * (
            1.0 / 144 + u * (1.0 / 840 + u * (1.0 / 5760 + u * (1.0 / 45360))))))))
    return u * exp(u) - expm1(u)


cdef inline double _rate_slope(double s) noexcept nogil:
    cdef double t = s / (1.0 + s)
    if t < 0.01:
        return t * t * (1.0 / 2 + t * (1.0 / 3 + t * (1.0 / 4 + t * (1.0 / 5 + t * (
            1.0 / 6 + t * (1.0 / 7 + t * (1.0 / 8 + t * (1.0 / 9))))))))
    return -log1p(-t) - t


cdef inline void _offload_energy_rate(double tau, double w, double Y, double qcap, double h,
                                      double pmax, double budget, double bw, double n0,
                                      double* e_out, double* r_out) noexcept nogil:
    cdef double cap, e, r
    e_out[0] = 0.0
    r_out[0] = 0.0
    if tau <= 0.0 or qcap <= 0.0:
        return
    cap = pmax * tau
    if budget < cap:
        cap = budget
    if Y > 0.0:
        e = tau * (w * bw / (LN2 * Y) - n0 / h)
        if e < 0.0:
            e = 0.0
        if e > cap:
            e = cap
    else:
        e = cap
    if e <= 0.0:
        return
    r = bw * tau * log1p(e * h / (tau * n0)) / LN2
    if r > qcap:
        cap = expm1(qcap * LN2 / (bw * tau)) * tau * n0 / h
        if cap < e:
            e = cap
        r = qcap
    e_out[0] = e
    r_out[0] = r


cdef inline double _offload_value(double tau, double w, double Y, double qcap, double h,
                                  double pmax, double budget, double bw, double n0) noexcept nogil:
    cdef double e, r
    _offload_energy_rate(tau, w, Y, qcap, h, pmax, budget, bw, n0, &e, &r)
    return w * r - Y * e


cdef inline double _initial_slope(double w, double Y, double qcap, double h, double pmax,
                                  double budget, double bw, double n0) noexcept nogil:
    cdef double p
    if qcap <= 0.0 or budget <= 0.0:
        return 0.0
    if Y > 0.0:
        p = w * bw / (LN2 * Y) - n0 / h
        if p <= 0.0:
            return 0.0
        if p > pmax:
            p = pmax
        return w * bw * log1p(p * h / n0) / LN2 - Y * p
    return w * bw * log1p(pmax * h / n0) / LN2


cdef double _response_priced(double mu, double w, double Y, double qcap, double h,
                             double pmax, double bw, double n0) noexcept nogil:
    cdef double p, s, uc, c, tau_c, m, u, step, tau
    cdef int it
    p = w * bw / (LN2 * Y) - n0 / h
    if p <= 0.0:
        return 0.0
    if p > pmax:
        p = pmax
    s = p * h / n0
    uc = log1p(s)
    c = bw * uc / LN2
    if mu >= w * c - Y * p:
        return 0.0
    tau_c = qcap / c
    if tau_c >= 1.0:
        return 1.0
    if mu <= 0.0:
        return 1.0
    m = mu * h / (Y * n0)
    if m >= _excess_curve(uc):
        return tau_c
    u = sqrt(2.0 * m)
    if uc < u:
        u = uc
    for it in range(100):
        step = (_excess_curve(u) - m) / (u * exp(u))
        u -= step
        if fabs(step) <= 1e-15 * u:
            break
    tau = qcap * LN2 / (bw * u)
    return tau if tau < 1.0 else 1.0


cdef double _newton_rate_slope(double m, double lo, double hi, double x) noexcept nogil:
    # root of _rate_slope(s) - m on [lo, hi]
    cdef double fx, d, nxt
    cdef int it
    for it in range(100):
        fx = _rate_slope(x) - m
        if fx > 0:
            hi = x
        else:
            lo = x
        d = x / ((1.0 + x) * (1.0 + x))
        nxt = x - fx / d if d > 0 else 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if fabs(nxt - x) <= 1e-14 * fabs(x) or hi - lo <= 1e-14 * fabs(hi):
            return nxt
        x = nxt
    return x


cdef double _newton_rate_cap(double qcap, double B, double bw, double lo, double hi, double x) noexcept nogil:
    # root of bw*t*log2(1 + B/t) - qcap on [lo, hi]
    cdef double fx, d, nxt
    cdef int it
    for it in range(100):
        fx = bw * x * log1p(B / x) / LN2 - qcap
        if fx > 0:
            hi = x
        else:
            lo = x
        d = bw * _rate_slope(B / x) / LN2
        nxt = x - fx / d if d > 0 else 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if fabs(nxt - x) <= 1e-14 * fabs(x) or hi - lo <= 1e-14 * fabs(hi):
            return nxt
        x = nxt
    return x


cdef double _response_free(double mu, double w, double qcap, double h, double pmax,
                           double budget, double bw, double n0) noexcept nogil:
    cdef double sp, cp, tau_q, tau_b, B, m, s, tau_end
    sp = pmax * h / n0
    cp = bw * log1p(sp) / LN2
    if mu >= w * cp:
        return 0.0
    tau_q = qcap / cp
    tau_b = budget / pmax
    if tau_q <= tau_b:
        return tau_q if tau_q < 1.0 else 1.0
    if tau_b >= 1.0:
        return 1.0
    B = budget * h / n0
    m = mu * LN2 / (w * bw)
    if m >= _rate_slope(sp):
        return tau_b
    if mu > 0.0:
        s = _newton_rate_slope(m, 0.0, sp, 0.5 * sp)
        if s > 0.0:
            tau_end = B / s
            if tau_end > 1.0:
                tau_end = 1.0
        else:
            tau_end = 1.0
    else:
        tau_end = 1.0
    if bw * tau_end * log1p(B / tau_end) / LN2 <= qcap:
        return tau_end
    return _newton_rate_cap(qcap, B, bw, tau_b, tau_end, tau_end)


cdef double _response_golden(double mu, double w, double Y, double qcap, double h, double pmax,
                             double budget, double bw, double n0, double tol) noexcept nogil:
    cdef double lo = 0.0, hi = 1.0, c, d, fc, fd, tau, best, end
    c = hi - INV_GOLDEN * (hi - lo)
    d = lo + INV_GOLDEN * (hi - lo)
    fc = _offload_value(c, w, Y, qcap, h, pmax, budget, bw, n0) - mu * c
    fd = _offload_value(d, w, Y, qcap, h, pmax, budget, bw, n0) - mu * d
    while hi - lo > tol:
        if fc >= fd:
            hi = d
            d = c
            fd = fc
            c = hi - INV_GOLDEN * (hi - lo)
            fc = _offload_value(c, w, Y, qcap, h, pmax, budget, bw, n0) - mu * c
        else:
            lo = c
            c = d
            fc = fd
            d = lo + INV_GOLDEN * (hi - lo)
            fd = _offload_value(d, w, Y, qcap, h, pmax, budget, bw, n0) - mu * d
    tau = 0.5 * (lo + hi)
    best = _offload_value(tau, w, Y, qcap, h, pmax, budget, bw, n0) - mu * tau
    end = _offload_value(1.0, w, Y, qcap, h, pmax, budget, bw, n0) - mu
    if end > best:
        tau = 1.0
        best = end
    return tau if best > 0.0 else 0.0


cdef inline double _tau_response(double mu, double w, double Y, double qcap, double h, double pmax,
                                 double budget, double bw, double n0, int inner,
                                 double inner_tol) noexcept nogil:
    if qcap <= 0.0 or budget <= 0.0:
        return 0.0
    if inner == 1 or (Y > 0.0 and isfinite(budget)):
        return _response_golden(mu, w, Y, qcap, h, pmax, budget, bw, n0, inner_tol)
    if Y > 0.0:
        return _response_priced(mu, w, Y, qcap, h, pmax, bw, n0)
    return _response_free(mu, w, qcap, h, pmax, budget, bw, n0)


cdef inline double _local_cpu(double w, double Y, double qcap, double fmax, double budget,
                              double phi, double kappa) noexcept nogil:
    cdef double f = fmax, g
    if phi * qcap < f:
        f = phi * qcap
    if isfinite(budget):
        g = cbrt((budget if budget > 0.0 else 0.0) / kappa)
        if g < f:
            f = g
    if Y > 0.0:
        g = sqrt(w / (3.0 * phi * kappa * Y))
        if g < f:
            f = g
    return f if f > 0.0 else 0.0


cdef double _respond_all(double mu, int nu, const int* users, const double* w, const double* Y,
                         const double* qcap, const double* h, const double* pmax,
                         const double* budget, double bw, double n0, int inner, double inner_tol,
                         double* out) noexcept nogil:
    cdef int k, i
    cdef double s = 0.0
    for k in range(nu):
        i = users[k]
        out[k] = _tau_response(mu, w[i], Y[i], qcap[i], h[i], pmax[i], budget[i], bw, n0, inner, inner_tol)
        s += out[k]
    return s


cdef void _airtimes(int nu, const int* users, const double* w, const double* Y, const double* qcap,
                    const double* h, const double* pmax, const double* budget, double bw, double n0,
                    double dual_tol, double inner_tol, int max_iters, int inner,
                    double* out, double* tau_lo, double* tmp) noexcept nogil:
    cdef int k, i, it
    cdef double hi = 0.0, lo = 0.0, mid, s, slack, add, g
    for k in range(nu):
        i = users[k]
        g = _initial_slope(w[i], Y[i], qcap[i], h[i], pmax[i], budget[i], bw, n0)
        if g > hi:
            hi = g
        out[k] = 0.0
    if hi <= 0.0:
        return
    s = _respond_all(0.0, nu, users, w, Y, qcap, h, pmax, budget, bw, n0, inner, inner_tol, tau_lo)
    if s <= 1.0:
        for k in range(nu):
            out[k] = tau_lo[k]
        return
    for it in range(max_iters):
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        s = _respond_all(mid, nu, users, w, Y, qcap, h, pmax, budget, bw, n0, inner, inner_tol, tmp)
        if s > 1.0:
            lo = mid
            for k in range(nu):
                tau_lo[k] = tmp[k]
        else:
            hi = mid
            for k in range(nu):
                out[k] = tmp[k]
            if 1.0 - s <= dual_tol:
                break
    slack = 1.0
    for k in range(nu):
        slack -= out[k]
    for k in range(nu):
        if slack <= 0.0:
            break
        add = tau_lo[k] - out[k]
        if slack < add:
            add = slack
        if add > 0.0:
            out[k] += add
            slack -= add


cdef double _solve_into(const signed char* x, int n, const double* w, const double* Y,
                        const double* qcap, const double* h, const double* fmax,
                        const double* pmax, const double* budget, double bw, double n0,
                        double phi, double kappa, double dual_tol, double inner_tol,
                        int max_iters, int inner, int* users, double* work,
                        double* tau, double* f, double* e, double* r) noexcept nogil:
    cdef int i, k, nu = 0
    cdef double value = 0.0, fi, ei, ri
    for i in range(n):
        tau[i] = 0.0
        f[i] = 0.0
        e[i] = 0.0
        r[i] = 0.0
        if x[i]:
            users[nu] = i
            nu += 1
        else:
            fi = _local_cpu(w[i], Y[i], qcap[i], fmax[i], budget[i], phi, kappa)
            f[i] = fi
            value += w[i] * fi / phi - Y[i] * kappa * fi * fi * fi
    if nu > 0:
        _airtimes(nu, users, w, Y, qcap, h, pmax, budget, bw, n0, dual_tol, inner_tol,
                  max_iters, inner, work, work + n, work + 2 * n)
        for k in range(nu):
            i = users[k]
            _offload_energy_rate(work[k], w[i], Y[i], qcap[i], h[i], pmax[i], budget[i], bw, n0, &ei, &ri)
            tau[i] = work[k] if ri > 0.0 else 0.0
            e[i] = ei
            r[i] = ri
            value += w[i] * ri - Y[i] * ei
    return value


def _as_vec(a, n):
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.shape != (n,):
        raise ValueError("parameter vectors must have length n")
    return arr


def solve(x, w, Y, qcap, h, fmax, pmax, budget, double bw, double n0, double phi, double kappa,
          double dual_tol=1e-6, double inner_tol=1e-9, int max_iters=200, int inner=0):
    cdef const signed char[::1] xv = np.ascontiguousarray(x, dtype=np.int8)
    cdef int n = xv.shape[0]
    cdef const double[::1] wv = _as_vec(w, n), Yv = _as_vec(Y, n), qv = _as_vec(qcap, n)
    cdef const double[::1] hv = _as_vec(h, n), fmv = _as_vec(fmax, n), pv = _as_vec(pmax, n)
    cdef const double[::1] bv = _as_vec(budget, n)
    tau_a = np.zeros(n)
    f_a = np.zeros(n)
    e_a = np.zeros(n)
    r_a = np.zeros(n)
    cdef double[::1] tau = tau_a, f = f_a, e = e_a, r = r_a
    cdef double[::1] work = np.zeros(3 * n + 3)
    cdef int[::1] users = np.zeros(n + 1, dtype=np.intc)
    cdef double value
    with nogil:
        value = _solve_into(&xv[0], n, &wv[0], &Yv[0], &qv[0], &hv[0], &fmv[0], &pv[0], &bv[0],
                            bw, n0, phi, kappa, dual_tol, inner_tol, max_iters, inner,
                            &users[0], &work[0], &tau[0], &f[0], &e[0], &r[0])
    return tau_a, f_a, e_a, r_a, value


def solve_batch(X, w, Y, qcap, h, fmax, pmax, budget, double bw, double n0, double phi, double kappa,
                double dual_tol=1e-6, double inner_tol=1e-9, int max_iters=200, int inner=0):
    cdef const signed char[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.int8)
    cdef int M = Xv.shape[0], n = Xv.shape[1], m
    cdef const double[::1] wv = _as_vec(w, n), Yv = _as_vec(Y, n), qv = _as_vec(qcap, n)
    cdef const double[::1] hv = _as_vec(h, n), fmv = _as_vec(fmax, n), pv = _as_vec(pmax, n)
    cdef const double[::1] bv = _as_vec(budget, n)
    out_a = np.empty(M)
    cdef double[::1] out = out_a
    cdef double[::1] scratch = np.zeros(4 * n + 3)
    cdef double[::1] work = np.zeros(3 * n + 3)
    cdef int[::1] users = np.zeros(n + 1, dtype=np.intc)
    if M == 0:
        return out_a
    with nogil:
        for m in range(M):
            out[m] = _solve_into(&Xv[m, 0], n, &wv[0], &Yv[0], &qv[0], &hv[0], &fmv[0], &pv[0], &bv[0],
                                 bw, n0, phi, kappa, dual_tol, inner_tol, max_iters, inner,
                                 &users[0], &work[0], &scratch[0], &scratch[n], &scratch[2 * n],
                                 &scratch[3 * n])
    return out_a
