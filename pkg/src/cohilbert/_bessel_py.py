"""Numpy implementation of complex K0 and K1, used when the compiled kernel is absent.

Three regimes by |z|: ascending series (|z| <= 2), Steed's continued fraction
(2 < |z| < 25) and the Hankel asymptotic expansion (|z| >= 25).
"""
from __future__ import annotations

import numpy as np

EULER = 0.57721566490153286061
SERIES_RADIUS = 2.0
ASYMPTOTIC_RADIUS = 25.0
UNDERFLOW_RE = 700.0
_EPS = 1e-17


def _series(z):
    y = z * z / 4.0
    term = np.ones_like(z)
    i0 = term.copy()
    s = np.zeros_like(z)
    t1 = np.ones_like(z)
    i1s = t1.copy()
    k1s = t1 * (1.0 - 2.0 * EULER)
    harm = 0.0
    psi1, psi2 = -EULER, 1.0 - EULER
    for k in range(1, 40):
        term = term * y / (k * k)
        harm += 1.0 / k
        i0 = i0 + term
        s = s + harm * term
        t1 = t1 * y / (k * (k + 1))
        psi1 += 1.0 / k
        psi2 += 1.0 / (k + 1)
        i1s = i1s + t1
        k1s = k1s + (psi1 + psi2) * t1
    log_half = np.log(z / 2.0)
    k0 = -(log_half + EULER) * i0 + s
    i1 = z / 2.0 * i1s
    k1m = log_half * i1 - z / 4.0 * k1s
    return k0, k1m + 1.0 / z, k1m


def _steed(z):
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(z)
    q2 = np.ones_like(z)
    a1 = 0.25
    q = np.full_like(z, a1)
    c = np.full_like(z, a1)
    a = -a1
    s = 1.0 + q * delh
    active = np.ones(z.shape, dtype=bool)
    for i in range(2, 2000):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + np.where(active, dels, 0.0)
        active &= np.abs(dels) >= _EPS * np.abs(s)
        if not active.any():
            break
    k0 = np.sqrt(np.pi / (2.0 * z)) * np.exp(-z) / s
    k1 = k0 * (z + 0.5 - a1 * h) / z
    return k0, k1, k1 - 1.0 / z


def _asymptotic(z):
    pref = np.sqrt(np.pi / (2.0 * z)) * np.exp(-z)
    out = []
    for nu in (0, 1):
        term = np.ones_like(z)
        acc = term.copy()
        prev = np.abs(term)
        alive = np.ones(z.shape, dtype=bool)
        for k in range(1, 60):
            term = term * (4.0 * nu * nu - (2 * k - 1) ** 2) / (k * 8.0 * z)
            mag = np.abs(term)
            alive &= mag < prev
            acc = acc + np.where(alive, term, 0.0)
            prev = mag
            alive &= mag >= _EPS * np.abs(acc)
            if not alive.any():
                break
        out.append(pref * acc)
    return out[0], out[1], out[1] - 1.0 / z


def k0k1(z):
    """Return (K0, K1, K1 - 1/z, underflow) for a complex array with Re z > 0."""
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    k0 = np.zeros_like(z)
    k1 = np.zeros_like(z)
    k1m = np.zeros_like(z)
    r = np.abs(z)
    under = z.real > UNDERFLOW_RE
    regimes = (
        (r <= SERIES_RADIUS, _series),
        ((r > SERIES_RADIUS) & (r < ASYMPTOTIC_RADIUS), _steed),
        ((r >= ASYMPTOTIC_RADIUS) & ~under, _asymptotic),
    )
    for mask, fn in regimes:
        if mask.any():
            k0[mask], k1[mask], k1m[mask] = fn(z[mask])
    k1m[under] = -1.0 / z[under]
    return k0.reshape(shape), k1.reshape(shape), k1m.reshape(shape), under.reshape(shape)


def cheb_eval(r, breaks, coef):
    """Piecewise Chebyshev series (numpy twin of the compiled kernel)."""
    r = np.asarray(r, dtype=float)
    npan, nf, deg = coef.shape
    inside = (r >= breaks[0]) & (r <= breaks[-1])
    idx = np.clip(np.searchsorted(breaks, r, side="right") - 1, 0, npan - 1)
    a, b = breaks[idx], breaks[idx + 1]
    s = np.where(inside, (2.0 * r - a - b) / (b - a), 0.0)
    out = np.empty((nf, r.size), dtype=complex)
    for f in range(nf):
        b1 = np.zeros(r.size, dtype=complex)
        b2 = np.zeros(r.size, dtype=complex)
        for k in range(deg - 1, 0, -1):
            b1, b2 = coef[idx, f, k] + 2.0 * s * b1 - b2, b1
        out[f] = coef[idx, f, 0] + s * b1 - b2
    out[:, ~inside] = np.nan
    return out


def m_table_eval(x, rs, near, breaks, far, a, uc):
    """numpy twin of the compiled table evaluation of M."""
    x = np.asarray(x, dtype=float)
    r = np.abs(x)
    sg = np.sign(x)
    out = np.full(x.size, np.nan, dtype=complex)
    small = r <= rs
    if small.any():
        rr = r[small]
        i0, g0, i1, g1 = cheb_eval(rr, np.array([0.0, rs]), near)
        with np.errstate(divide="ignore"):
            lr = np.log(rr)
        out[small] = a * (g0 - lr * i0) - uc * sg[small] * (g1 + lr * i1)
    mid = (~small) & (r <= breaks[-1])
    if mid.any():
        k0v, qv = cheb_eval(r[mid], breaks, far)
        out[mid] = a * k0v - uc * sg[mid] * qv
    return out
