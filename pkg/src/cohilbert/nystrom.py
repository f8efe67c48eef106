"""Panel discretization of the cofinite operators on the Kutta support.

The unknown g of the main equation lives on S = {1 < |x| < A}. Each side of S is
parametrized by x = s (1 + v^2), v in [0, sqrt(A - 1)], which turns the
(x^2 - 1)^(+-1/2) endpoint behaviour of P^{-1} into smooth functions of v.
The exterior |x| > A is parametrized by x = s (A + w).

Two singular integrals appear:

* the Cauchy kernel of P^{-1}, integrated against the panel interpolant with
  exact Legendre-Q moments;
* the log kernel of M, integrated by a locally graded rule against the panel
  interpolant of h.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .quadrature import cauchy_weights, gauss_legendre, graded_rule, lagrange_matrix

P_DEFAULT = 16
NEAR_CAUCHY = 2.0
NEAR_LOG = 1.5


@dataclass(frozen=True, eq=False)
class Panel:
    side: int
    kind: str  # "support", "exterior" or "tail" (variable 1/|x|)
    a: float
    b: float
    base: float
    p: int = P_DEFAULT

    @property
    def mid(self):
        return 0.5 * (self.a + self.b)

    @property
    def half(self):
        return 0.5 * (self.b - self.a)

    def to_x(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "tail":
            return self.side / v
        return self.side * (self.base + (v * v if self.kind == "support" else v))

    def jac(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "tail":
            return 1.0 / (v * v)
        return 2.0 * v if self.kind == "support" else np.ones_like(v)

    def to_v(self, x):
        """Panel variable of x (same side only; NaN where undefined)."""
        if self.kind == "tail":
            return 1.0 / (self.side * np.asarray(x, dtype=float))
        t = self.side * np.asarray(x, dtype=float) - self.base
        if self.kind == "support":
            with np.errstate(invalid="ignore"):
                return np.where(t >= 0.0, np.sqrt(np.abs(t)), np.nan)
        return t

    @cached_property
    def v(self):
        s, _ = gauss_legendre(self.p)
        return self.mid + self.half * s

    @cached_property
    def x(self):
        return self.to_x(self.v)

    @cached_property
    def w(self):
        _, wt = gauss_legendre(self.p)
        return self.half * wt * self.jac(self.v)

    @cached_property
    def psi(self):
        """sqrt(x^2 - 1)/|x| at the nodes, computed from v to keep accuracy near |x| = 1."""
        if self.kind == "support":
            v = self.v
            return v * np.sqrt(v * v + 2.0) / (1.0 + v * v)
        return psi(self.x)

    def local(self, x):
        """Panel coordinate in [-1, 1] of the point x (NaN for the other side)."""
        x = np.asarray(x, dtype=float)
        same = np.sign(x) == self.side
        v = self.to_v(np.where(same, x, self.side * (self.base + 1.0)))
        return np.where(same, (v - self.mid) / self.half, np.nan)


MAX_DEPTH = 10  # toward |x| = A
MAX_DEPTH_ONE = 5  # toward |x| = 1, where 1 + v^2 must stay resolvable


def _support_breaks(V: float, per_side: int):
    # the determinant error is set by the uniform middle panels (about third order in
    # their width), so only a few geometric levels go to the ends
    l1 = 1 if per_side < 16 else 2
    l2 = min(3, per_side // 4)
    m = per_side - l1 - l2
    r = 0.25
    left = [0.0] + [0.25 * V * r**j for j in range(l1 - 1, -1, -1)]
    right = [V - 0.125 * V * r**j for j in range(l2)] + [V] if l2 else [V]
    mid = list(np.linspace(left[-1], right[0], m + 1))
    return np.array(left[:-1] + mid + right[1:]), l1


def support_panels(A: float, n_total: int, p: int = P_DEFAULT):
    per_side = n_total // (2 * p)
    if per_side < 2 or per_side * 2 * p != n_total:
        raise ValueError(f"grid size {n_total} must be a multiple of {2 * p} and at least {4 * p}")
    breaks, depth = _support_breaks(np.sqrt(A - 1.0), per_side)
    panels = []
    for side in (-1, 1):
        for a, b in zip(breaks[:-1], breaks[1:]):
            panels.append(Panel(side, "support", float(a), float(b), 1.0, p))
    return panels, depth


def u_support_panels(A: float, levels: int = MAX_DEPTH, p: int = P_DEFAULT, middle: int = 6,
                     levels_one: int = MAX_DEPTH_ONE, g_breaks=(), break_levels: int = 3):
    """Integration panels on S for h = P^{-1}[g], graded toward both |u| = 1 and |u| = A
    (h has a log singularity at |u| = A). The breaks of the g-panels are kept, since h
    of a panelwise interpolant is log-singular wherever the interpolant jumps."""
    V = np.sqrt(A - 1.0)
    r = 0.25
    left = [0.0] + [0.25 * V * r**j for j in range(levels_one - 1, -1, -1)]
    right = [V - 0.125 * V * r**j for j in range(levels)] + [V]
    gb = np.unique(np.asarray(g_breaks, dtype=float))
    extra = []
    for k, b in enumerate(gb):
        if b <= 0.0 or b >= V:
            continue
        lo = b - gb[k - 1] if k > 0 else b
        hi = (gb[k + 1] if k + 1 < gb.size else V) - b
        step = 0.5 * min(lo, hi)
        for j in range(break_levels):
            extra += [b - step * r**j, b + step * r**j]
    br = np.sort(np.concatenate([left[:-1], np.linspace(left[-1], right[0], middle + 1), right[1:], gb, extra]))
    br = br[np.concatenate([[True], np.diff(br) > 1e-12 * V])]
    return [Panel(side, "support", float(a), float(b), 1.0, p) for side in (-1, 1) for a, b in zip(br[:-1], br[1:])]


def exterior_near_panels(A: float, depth: int, p: int = P_DEFAULT, ell0: float = 0.5):
    """Panels on A < |x| < A + ell0 graded toward A (h has a log singularity there)."""
    br = [0.0] + [ell0 * 0.25**j for j in range(depth, -1, -1)]
    return [Panel(side, "exterior", float(a), float(b), A, p) for side in (-1, 1) for a, b in zip(br[:-1], br[1:])]


def exterior_far_panels(A: float, c: complex, p: int = P_DEFAULT, ell0: float = 0.5, tail: float = 36.0):
    """Panels from A + ell0 outward until exp(-Re(c) w) < e^-tail, sized to resolve
    the oscillation of the kernel, then one panel per side in 1/|x| out to infinity
    for the algebraic U/x part of M."""
    ell = min(4.0, 6.0 / abs(c))
    wmax = max(4.0 * ell0, tail / c.real)
    br = [ell0]
    while br[-1] < wmax:
        step = min(ell, br[-1])  # geometric growth away from A, then uniform
        br.append(br[-1] + step)
    t0 = 1.0 / (A + br[-1])
    return [
        q
        for side in (-1, 1)
        for q in [Panel(side, "exterior", float(a), float(b), A, p) for a, b in zip(br[:-1], br[1:])]
        + [Panel(side, "tail", 0.0, t0, 0.0, p)]
    ]


def _stack(panels, attr):
    return np.concatenate([getattr(q, attr) for q in panels]) if panels else np.zeros(0)


def psi(y):
    y = np.asarray(y, dtype=float)
    return np.sqrt(y * y - 1.0) / np.abs(y)


def cauchy_rows(support, u):
    """W[j, k] with sum_k W[j,k] phi(y_k) = PV int_S phi(y)/(u_j - y) dy for phi
    smooth in the panel variable (phi = psi * g is of this kind)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    y = _stack(support, "x")
    w = _stack(support, "w")
    with np.errstate(divide="ignore"):
        W = w[None, :] / (u[:, None] - y[None, :])
    off = 0
    for q in support:
        sl = slice(off, off + q.p)
        off += q.p
        s0 = q.local(u)
        same = np.isfinite(s0)
        if not same.any():
            continue
        vu = q.to_v(u[same])
        s1 = (-vu - q.mid) / q.half
        # a point on a panel break: the log terms of the two panels cancel in the limit
        s0s = np.where(np.abs(s0[same]) == 1.0, s0[same] * (1.0 - 1e-14), s0[same])
        near = (np.abs(s0s) <= NEAR_CAUCHY) | (np.abs(s1) <= NEAR_CAUCHY)
        if not near.any():
            continue
        idx = np.flatnonzero(same)[near]
        # u - y = s (v_u^2 - v^2); with dy = 2v dv the kernel splits into two poles
        cw = cauchy_weights(q.p, s0s[near]) + cauchy_weights(q.p, s1[near])
        W[idx, sl] = q.side * cw
    return W


def pinv_rows(support, u):
    """Matrix mapping nodal g on S to h = P^{-1}[g] at the points u (|u| > 1)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    W = cauchy_rows(support, u)
    pref = np.abs(u) / (np.pi * np.sqrt(u * u - 1.0))
    return pref[:, None] * W * _stack(support, "psi")[None, :]


@dataclass
class NearField:
    """Locally refined rules for a log-type kernel between targets and panels.

    ``pairs[a] = (target index, column offset)``; ``xq[a]`` are fine points and
    ``C[a]`` maps the panel's nodal density values to the refined integral.
    """

    tgt: np.ndarray
    col: np.ndarray
    xq: np.ndarray
    C: np.ndarray
    p: int

    def apply(self, mat, kernel_values):
        """Overwrite near entries of ``mat`` (targets x columns) given kernel
        values at (target - fine point) of shape xq.shape."""
        blocks = np.einsum("aq,aqk->ak", kernel_values, self.C)
        cols = self.col[:, None] + np.arange(self.p)[None, :]
        mat[self.tgt[:, None], cols] = blocks
        return mat


def near_field(targets, panels, offsets, levels: int = 5, near: float = NEAR_LOG):
    """Build refined rules for every (target, panel) pair with |local coord| < near.

    The integrand is kernel(x_t - x(v)) * h(x(v)) * |dx/dv| with h interpolated
    from the panel nodes, so C[a] includes the Jacobian at the nodes.
    """
    targets = np.asarray(targets, dtype=float)
    tg, cl, xs, cs = [], [], [], []
    for q, off in zip(panels, offsets):
        s0 = q.local(targets)
        hit = np.flatnonzero(np.isfinite(s0) & (np.abs(np.nan_to_num(s0, nan=9.0)) < near))
        if hit.size == 0:
            continue
        jk = q.jac(q.v)
        for t in hit:
            v0 = q.mid + q.half * s0[t]
            vq, wq = graded_rule(q.a, q.b, float(v0), q.p, levels=levels)
            L = lagrange_matrix(q.v, vq)
            tg.append(t)
            cl.append(off)
            xs.append(q.to_x(vq))
            cs.append(wq[:, None] * L * jk[None, :])
    if not tg:
        return None
    return NearField(np.array(tg), np.array(cl), np.array(xs), np.array(cs), panels[0].p)


class KuttaGrid:
    """Cofinite grid covering the Kutta support 1 < |x| < A with graded panels.

    ``nodes`` and ``weights`` discretize dx on the support; ``source_nodes`` are the
    Theta-preimages 1/x. The fixed exterior panels next to |x| = A are part of the
    u-grid used when composing M with P^{-1}; that grid is refined toward |u| = 1 and
    |u| = A independently of n.
    """

    def __init__(self, kutta_extent: float, n: int = 256, p: int = P_DEFAULT):
        self.A = float(kutta_extent)
        self.n = int(n)
        self.p = p
        self.support, self.depth = support_panels(self.A, self.n, p)
        gb = [q.a for q in self.support if q.side > 0]
        self.u_support = u_support_panels(self.A, MAX_DEPTH, p, g_breaks=gb)
        self.ext_near = exterior_near_panels(self.A, MAX_DEPTH, p)
        self.nodes = _stack(self.support, "x")
        self.weights = _stack(self.support, "w")

    @property
    def source_nodes(self):
        return 1.0 / self.nodes

    @cached_property
    def fixed_panels(self):
        return self.u_support + self.ext_near

    @cached_property
    def fixed_offsets(self):
        return np.cumsum([0] + [q.p for q in self.fixed_panels])[:-1]

    @cached_property
    def fixed_u(self):
        return _stack(self.fixed_panels, "x"), _stack(self.fixed_panels, "w")

    @cached_property
    def fixed_pinv(self):
        return pinv_rows(self.support, self.fixed_u[0])

    @cached_property
    def fixed_near(self):
        return near_field(self.nodes, self.fixed_panels, self.fixed_offsets)

    @cached_property
    def jump_matrix(self) -> np.ndarray:
        return jump_matrix(self)

    @cached_property
    def jump_trace(self) -> float:
        """tr(S^2) for the discrete sign kernel; its exact value is -2 (A - 1)^2."""
        S = self.jump_matrix
        return float(np.sum(S * S.T))

    def h_map(self, u):
        """Rows mapping nodal g to h = P^{-1}[g] at arbitrary points u."""
        return pinv_rows(self.support, u)

    def control_points(self, per_side: int = 10):
        """Midpoints between adjacent support nodes, nearest to an even spread of 1 < |x| < A."""
        x = np.sort(self.nodes[self.nodes > 0])
        mids = 0.5 * (x[1:] + x[:-1])
        want = np.linspace(1.0, self.A, per_side + 2)[1:-1]
        pos = np.unique(mids[np.abs(mids[None, :] - want[:, None]).argmin(axis=1)])
        return np.concatenate([-pos[::-1], pos])


def jump_matrix(grid: KuttaGrid) -> np.ndarray:
    """S[i, j] = int_{same side} sign(x_i - y) b_j(y) dy for the basis b_j implicit in the
    discrete operator: panel Lagrange polynomial in v times psi(y_j) / psi(y)."""
    x = grid.nodes
    n = x.size
    S = np.sign(x[:, None] - x[None, :]) * (np.sign(x[:, None]) == np.sign(x[None, :])) * grid.weights[None, :]
    s_gl, w_gl = gauss_legendre(grid.p)
    off = 0
    for q in grid.support:
        sl = slice(off, off + q.p)
        off += q.p
        for i in range(off - q.p, off):
            vi = q.to_v(x[i])
            # left part [a, v_i] in the panel variable; y increases with v on the + side
            vq = q.a + (vi - q.a) * 0.5 * (s_gl + 1.0)
            wq = (vi - q.a) * 0.5 * w_gl
            psi_q = vq * np.sqrt(vq * vq + 2.0) / (1.0 + vq * vq)
            rho = q.jac(vq)[:, None] * q.psi[None, :] / psi_q[:, None]
            left = (wq[:, None] * lagrange_matrix(q.v, vq) * rho).sum(axis=0)
            # sign(x_i - y) = +1 toward smaller |y| on the + side, reversed on the - side
            S[i, sl] = q.side * (2.0 * left - grid.weights[sl])
    return S
