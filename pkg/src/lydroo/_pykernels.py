"""Pure-Python allocation kernel.

Reference twin of ``_ckernels.pyx``; both must produce the same numbers.
Per-user parameters are plain sequences of floats:

    w       value of one processed bit
    Y       price of one joule
    qcap    backlog cap on processed bits
    h       channel gain
    fmax    local CPU cap (Hz)
    pmax    transmit power cap (W)
    budget  per-frame energy cap (J), ``inf`` when absent

and the link/CPU constants ``bw = W / v_u``, ``n0``, ``phi``, ``kappa``.
"""

from __future__ import annotations

import math

import numpy as np

LN2 = math.log(2.0)
INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
INNER_EXACT = 0
INNER_GOLDEN = 1

BACKEND = "python"


def _excess_curve(u):
    """e^u (u - 1) + 1, accurate for small u."""
    if u < 0.05:
        # sum_{k>=2} (k-1) u^k / k!
        return u * u * (1.0 / 2 + u * (1.0 / 3 + u * (1.0 / 8 + u * (1.0 / 30 + u * (
            1.0 / 144 + u * (1.0 / 840 + u * (1.0 / 5760 + u * (1.0 / 45360))))))))
    return u * math.exp(u) - math.expm1(u)


def _rate_slope(s):
    """ln(1+s) - s/(1+s), accurate for small s."""
    t = s / (1.0 + s)
    if t < 0.01:
        # -ln(1-t) - t = sum_{k>=2} t^k / k
        return t * t * (1.0 / 2 + t * (1.0 / 3 + t * (1.0 / 4 + t * (1.0 / 5 + t * (
            1.0 / 6 + t * (1.0 / 7 + t * (1.0 / 8 + t * (1.0 / 9))))))))
    return -math.log1p(-t) - t


def _safe_newton(f, df, lo, hi, x0, tol=1e-14, iters=100):
    """Root of increasing ``f`` on [lo, hi]; Newton steps, bisection when they leave the bracket."""
    x = x0
    for _ in range(iters):
        fx = f(x)
        if fx > 0:
            hi = x
        else:
            lo = x
        d = df(x)
        nxt = x - fx / d if d > 0 else 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= tol * abs(x) or hi - lo <= tol * abs(hi):
            return nxt
        x = nxt
    return x


def offload_energy_rate(tau, w, Y, qcap, h, pmax, budget, bw, n0):
    """Minimal-energy optimal (e, r) for one offloading WD given airtime ``tau``."""
    if tau <= 0.0 or qcap <= 0.0:
        return 0.0, 0.0
    cap = min(pmax * tau, budget)
    if Y > 0.0:
        e = tau * (w * bw / (LN2 * Y) - n0 / h)
        e = min(max(e, 0.0), cap)
    else:
        e = cap
    if e <= 0.0:
        return 0.0, 0.0
    r = bw * tau * math.log1p(e * h / (tau * n0)) / LN2
    if r > qcap:
        # Cheapest energy that still drains the whole backlog.
        e = min(math.expm1(qcap * LN2 / (bw * tau)) * tau * n0 / h, e)
        r = qcap
    return e, r


def offload_value(tau, w, Y, qcap, h, pmax, budget, bw, n0):
    e, r = offload_energy_rate(tau, w, Y, qcap, h, pmax, budget, bw, n0)
    return w * r - Y * e


def initial_slope(w, Y, qcap, h, pmax, budget, bw, n0):
    """Right derivative of the offloading value at zero airtime."""
    if qcap <= 0.0 or budget <= 0.0:
        return 0.0
    if Y > 0.0:
        p = w * bw / (LN2 * Y) - n0 / h
        if p <= 0.0:
            return 0.0
        p = min(p, pmax)
        return w * bw * math.log1p(p * h / n0) / LN2 - Y * p
    return w * bw * math.log1p(pmax * h / n0) / LN2


def _response_priced(mu, w, Y, qcap, h, pmax, bw, n0):
    # Y > 0, no budget: constant power p until the backlog cap, then the
    # cap-hitting energy e_Q(tau) whose marginal value is k*excess(u).
    p = w * bw / (LN2 * Y) - n0 / h
    if p <= 0.0:
        return 0.0
    p = min(p, pmax)
    s = p * h / n0
    uc = math.log1p(s)
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
    # excess(u) >= u^2/2, so sqrt(2m) sits right of the root; excess is
    # convex increasing, so plain Newton converges monotonically from there.
    u = min(uc, math.sqrt(2.0 * m))
    for _ in range(100):
        step = (_excess_curve(u) - m) / (u * math.exp(u))
        u -= step
        if abs(step) <= 1e-15 * u:
            break
    tau = qcap * LN2 / (bw * u)
    return min(tau, 1.0)


def _response_free(mu, w, qcap, h, pmax, budget, bw, n0):
    # Y = 0: rate at full power until the backlog or the energy budget binds.
    sp = pmax * h / n0
    cp = bw * math.log1p(sp) / LN2
    if mu >= w * cp:
        return 0.0
    tau_q = qcap / cp
    tau_b = budget / pmax
    if tau_q <= tau_b:
        return min(tau_q, 1.0)
    if tau_b >= 1.0:
        return 1.0
    # Budget-limited piece: R(tau) = bw*tau*log2(1 + B/tau), concave.
    B = budget * h / n0
    m = mu * LN2 / (w * bw)
    if m >= _rate_slope(sp):
        return tau_b
    if mu > 0.0:
        s = _safe_newton(
            lambda s: _rate_slope(s) - m,
            lambda s: s / ((1.0 + s) * (1.0 + s)),
            0.0,
            sp,
            0.5 * sp,
        )
        tau_end = min(B / s, 1.0) if s > 0.0 else 1.0
    else:
        tau_end = 1.0

    def rate(t):
        return bw * t * math.log1p(B / t) / LN2

    if rate(tau_end) <= qcap:
        return tau_end
    return _safe_newton(
        lambda t: rate(t) - qcap,
        lambda t: bw * _rate_slope(B / t) / LN2,
        tau_b,
        tau_end,
        tau_end,
    )


def _response_golden(mu, w, Y, qcap, h, pmax, budget, bw, n0, tol):
    lo, hi = 0.0, 1.0
    c = hi - INV_GOLDEN * (hi - lo)
    d = lo + INV_GOLDEN * (hi - lo)
    fc = offload_value(c, w, Y, qcap, h, pmax, budget, bw, n0) - mu * c
    fd = offload_value(d, w, Y, qcap, h, pmax, budget, bw, n0) - mu * d
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_GOLDEN * (hi - lo)
            fc = offload_value(c, w, Y, qcap, h, pmax, budget, bw, n0) - mu * c
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_GOLDEN * (hi - lo)
            fd = offload_value(d, w, Y, qcap, h, pmax, budget, bw, n0) - mu * d
    tau = 0.5 * (lo + hi)
    best = offload_value(tau, w, Y, qcap, h, pmax, budget, bw, n0) - mu * tau
    end = offload_value(1.0, w, Y, qcap, h, pmax, budget, bw, n0) - mu
    if end > best:
        tau, best = 1.0, end
    return tau if best > 0.0 else 0.0


def tau_response(mu, w, Y, qcap, h, pmax, budget, bw, n0, inner=INNER_EXACT, inner_tol=1e-9):
    """Smallest airtime maximizing value(tau) - mu*tau over [0, 1]."""
    if qcap <= 0.0 or budget <= 0.0:
        return 0.0
    if inner == INNER_GOLDEN or (Y > 0.0 and math.isfinite(budget)):
        return _response_golden(mu, w, Y, qcap, h, pmax, budget, bw, n0, inner_tol)
    if Y > 0.0:
        return _response_priced(mu, w, Y, qcap, h, pmax, bw, n0)
    return _response_free(mu, w, qcap, h, pmax, budget, bw, n0)


def local_cpu(w, Y, qcap, fmax, budget, phi, kappa):
    """Optimal local CPU frequency."""
    f = min(fmax, phi * qcap)
    if math.isfinite(budget):
        f = min(f, (max(budget, 0.0) / kappa) ** (1.0 / 3.0))
    if Y > 0.0:
        f = min(f, math.sqrt(w / (3.0 * phi * kappa * Y)))
    return max(f, 0.0)


def _airtimes(users, w, Y, qcap, h, pmax, budget, bw, n0, dual_tol, inner_tol, max_iters, inner):
    """Dual bisection on the shared-airtime multiplier; returns {user: tau}."""

    def respond(mu):
        return [
            tau_response(mu, w[i], Y[i], qcap[i], h[i], pmax[i], budget[i], bw, n0, inner, inner_tol)
            for i in users
        ]

    hi = 0.0
    for i in users:
        hi = max(hi, initial_slope(w[i], Y[i], qcap[i], h[i], pmax[i], budget[i], bw, n0))
    if hi <= 0.0:
        return [0.0] * len(users)
    tau_lo = respond(0.0)
    if sum(tau_lo) <= 1.0:
        return tau_lo
    lo = 0.0
    tau_hi = [0.0] * len(users)
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        t = respond(mid)
        s = sum(t)
        if s > 1.0:
            lo, tau_lo = mid, t
        else:
            hi, tau_hi = mid, t
            if 1.0 - s <= dual_tol:
                break
    # Users whose response jumps across the final bracket are indifferent
    # inside the jump; hand them the leftover airtime in index order.
    slack = 1.0 - sum(tau_hi)
    out = list(tau_hi)
    for k in range(len(out)):
        if slack <= 0.0:
            break
        add = min(tau_lo[k] - out[k], slack)
        if add > 0.0:
            out[k] += add
            slack -= add
    return out


def solve(x, w, Y, qcap, h, fmax, pmax, budget, bw, n0, phi, kappa,
          dual_tol=1e-6, inner_tol=1e-9, max_iters=200, inner=INNER_EXACT):
    """Optimal allocation for binary action ``x``.

    Returns ``(tau, f, e, r, value)`` where ``value`` is
    sum_local(w f/phi - Y kappa f^3) + sum_offload(w r - Y e).
    """
    n = len(x)
    tau = np.zeros(n)
    f = np.zeros(n)
    e = np.zeros(n)
    r = np.zeros(n)
    value = 0.0
    users = []
    for i in range(n):
        if x[i]:
            users.append(i)
        else:
            fi = local_cpu(w[i], Y[i], qcap[i], fmax[i], budget[i], phi, kappa)
            f[i] = fi
            value += w[i] * fi / phi - Y[i] * kappa * fi * fi * fi
    if users:
        times = _airtimes(users, w, Y, qcap, h, pmax, budget, bw, n0, dual_tol, inner_tol, max_iters, inner)
        for i, t in zip(users, times):
            ei, ri = offload_energy_rate(t, w[i], Y[i], qcap[i], h[i], pmax[i], budget[i], bw, n0)
            tau[i] = t if ri > 0.0 else 0.0
            e[i] = ei
            r[i] = ri
            value += w[i] * ri - Y[i] * ei
    return tau, f, e, r, value


def solve_batch(X, w, Y, qcap, h, fmax, pmax, budget, bw, n0, phi, kappa,
                dual_tol=1e-6, inner_tol=1e-9, max_iters=200, inner=INNER_EXACT):
    """Objective value of every row of the binary matrix ``X``."""
    X = np.asarray(X)
    out = np.empty(X.shape[0])
    for m in range(X.shape[0]):
        out[m] = solve(X[m], w, Y, qcap, h, fmax, pmax, budget, bw, n0, phi, kappa,
                       dual_tol, inner_tol, max_iters, inner)[4]
    return out
