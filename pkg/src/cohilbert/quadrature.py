"""Panel quadrature helpers: Gauss-Legendre rules, Cauchy product weights,
geometrically graded rules and panel interpolation."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg


@lru_cache(maxsize=None)
def gauss_legendre(p: int):
    s, w = npleg.leggauss(p)
    s.flags.writeable = False
    w.flags.writeable = False
    return s, w


@lru_cache(maxsize=None)
def _legendre_at_nodes(p: int):
    s, w = gauss_legendre(p)
    # (2n+1) w_k P_n(s_k), shape (p, p) indexed [k, n]
    v = npleg.legvander(s, p - 1) * w[:, None] * (2 * np.arange(p) + 1)[None, :]
    v.flags.writeable = False
    return v


def legendre_q(s0, nmax: int):
    """Q_0..Q_nmax at real points s0 (array). Inside (-1,1) this is the PV branch.

    Forward recurrence for |s0| < 1.05, Miller's backward recurrence otherwise.
    """
    s0 = np.atleast_1d(np.asarray(s0, dtype=float))
    out = np.empty((s0.size, nmax + 1))
    q0 = 0.5 * np.log(np.abs((1.0 + s0) / (1.0 - s0)))
    fwd = np.abs(s0) < 1.05
    if fwd.any():
        s = s0[fwd]
        qa = q0[fwd]
        out[fwd, 0] = qa
        if nmax >= 1:
            qb = s * qa - 1.0
            out[fwd, 1] = qb
            for n in range(1, nmax):
                qa, qb = qb, ((2 * n + 1) * s * qb - n * qa) / (n + 1)
                out[fwd, n + 1] = qb
    bwd = ~fwd
    if bwd.any():
        s = s0[bwd]
        top = nmax + 60
        hi = np.zeros_like(s)
        cur = np.full_like(s, 1e-30)
        vals = np.empty((s.size, nmax + 1))
        for n in range(top, 0, -1):
            prev = ((2 * n + 1) * s * cur - (n + 1) * hi) / n
            hi, cur = cur, prev
            if n - 1 <= nmax:
                vals[:, n - 1] = cur
            big = np.abs(cur) > 1e250
            if big.any():
                hi[big] *= 1e-250
                cur[big] *= 1e-250
                vals[big] *= 1e-250
        vals *= (q0[bwd] / vals[:, 0])[:, None]
        out[bwd] = vals
    return out


def cauchy_weights(p: int, s0):
    """Weights c[j, k] with sum_k c[j,k] f(s_k) = PV int_{-1}^{1} f(s)/(s0_j - s) ds
    for every polynomial f of degree < p, s_k the p-point Gauss-Legendre nodes."""
    q = legendre_q(s0, p - 1)
    return q @ _legendre_at_nodes(p).T


def lagrange_matrix(nodes, points):
    """L[j, k] = l_k(points[j]) for the Lagrange basis on ``nodes`` (barycentric form)."""
    nodes = np.asarray(nodes, dtype=float)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    bw = 1.0 / np.prod(diff, axis=1)
    d = points[:, None] - nodes[None, :]
    hit = d == 0.0
    d[hit] = 1.0
    t = bw[None, :] / d
    L = t / t.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    if rows.any():
        L[rows] = hit[rows].astype(float)
    return L


def composite_rule(breaks, p: int):
    """Gauss-Legendre with p points on each interval of the sorted break list."""
    s, w = gauss_legendre(p)
    b = np.asarray(breaks, dtype=float)
    mid = 0.5 * (b[1:] + b[:-1])
    half = 0.5 * (b[1:] - b[:-1])
    x = (mid[:, None] + half[:, None] * s[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return x, wt


def _one_sided(length, p, ratio, levels, power):
    """Rule on [0, length] graded toward 0; innermost piece uses t = d tau^power."""
    s, w = gauss_legendre(p)
    tau = 0.5 * (s + 1.0)
    wt = 0.5 * w
    d = length * ratio**levels
    xs = [d * tau**power]
    ws = [d * power * tau ** (power - 1) * wt]
    edges = length * ratio ** np.arange(levels, -1, -1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs.append(lo + (hi - lo) * tau)
        ws.append((hi - lo) * wt)
    return np.concatenate(xs), np.concatenate(ws)


@lru_cache(maxsize=None)
def _unit_graded(p, ratio, levels, power):
    x, w = _one_sided(1.0, p, ratio, levels, power)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def graded_rule(a: float, b: float, x0: float, p: int = 16, ratio: float = 0.25, levels: int = 5, power: int = 4):
    """Rule on [a, b] graded toward x0 (clamped into [a, b]) from both sides.

    Always returns 2 * p * (levels + 1) points so that batches stack; the side of
    zero length gets zero weights.
    """
    x0 = min(max(x0, a), b)
    ux, uw = _unit_graded(p, ratio, levels, power)
    right = b - x0
    left = x0 - a
    x = np.concatenate([x0 - left * ux[::-1], x0 + right * ux])
    w = np.concatenate([left * uw[::-1], right * uw])
    return x, w


def graded_breaks(a: float, b: float, toward_a: int, toward_b: int, ratio: float = 0.25, middle: int = 1):
    """Break points on [a, b]: ``toward_a`` geometric levels at a, ``middle`` even
    pieces, ``toward_b`` levels at b. Graded pieces occupy the outer quarters."""
    L = b - a
    left = [a] + [a + 0.25 * L * ratio**j for j in range(toward_a - 1, -1, -1)] if toward_a else [a]
    right = [b - 0.25 * L * ratio**j for j in range(toward_b)] + [b] if toward_b else [b]
    lo = left[-1]
    hi = right[0]
    mid = list(np.linspace(lo, hi, middle + 1))
    return np.array(left[:-1] + mid + right[1:])
