"""Finite and cofinite Hilbert transforms and the inversion map between them.

Functions on [-1, 1] are stored as ``omega(t) * p(t)`` with ``p`` a Chebyshev
series and ``omega`` one of ``1``, ``sqrt(1 - t^2)`` or ``1 / sqrt(1 - t^2)``.
On these classes the finite Hilbert transform

    T[f](x) = (1/pi) PV int_{-1}^{1} f(y) / (y - x) dy

and its Tricomi inverse act exactly, using

    T[T_k / sqrt(1-y^2)] = U_{k-1},   T[sqrt(1-y^2) U_{k-1}] = -T_k.

A function on the complement of [-1, 1] is stored through its pullback under
``Theta[f](x) = f(1/x) / x``. The cofinite transform then follows from
``P o Theta = Theta o (-T)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate

from .errors import DomainError

WEIGHTS = ("one", "sqrt", "invsqrt")


@dataclass(frozen=True, eq=False)
class FiniteGrid:
    """Quadrature grid on (-1, 1), nodes in increasing order.

    ``weights`` integrate against the rule's natural measure (dt / sqrt(1-t^2) for
    Gauss-Chebyshev, dt for Gauss-Legendre); ``plain_weights`` always integrate dt.
    """

    n: int
    kind: str = "gauss-chebyshev"

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("grid needs at least two nodes")
        if self.kind not in ("gauss-chebyshev", "gauss-legendre"):
            raise DomainError(f"unknown grid kind {self.kind!r}")

    @cached_property
    def nodes(self) -> np.ndarray:
        if self.kind == "gauss-chebyshev":
            k = np.arange(self.n, 0, -1)
            return np.cos((2 * k - 1) * np.pi / (2 * self.n))
        return np.polynomial.legendre.leggauss(self.n)[0]

    @cached_property
    def weights(self) -> np.ndarray:
        if self.kind == "gauss-chebyshev":
            return np.full(self.n, np.pi / self.n)
        return np.polynomial.legendre.leggauss(self.n)[1]

    @cached_property
    def plain_weights(self) -> np.ndarray:
        if self.kind == "gauss-legendre":
            return self.weights
        # Fejer's first rule on the Chebyshev points
        theta = np.arccos(self.nodes)
        j = np.arange(1, self.n // 2 + 1)
        s = np.cos(2 * np.outer(theta, j)) / (4 * j**2 - 1)
        return 2.0 / self.n * (1.0 - 2.0 * s.sum(axis=1))

    @cached_property
    def _vander_inv(self):
        return np.linalg.inv(C.chebvander(self.nodes, self.n - 1))


@dataclass(frozen=True, eq=False)
class CofiniteGrid:
    """Image of a finite grid under t -> 1/t. Weights integrate dx over |x| > 1."""

    source: FiniteGrid

    @cached_property
    def nodes(self) -> np.ndarray:
        return 1.0 / self.source.nodes

    @cached_property
    def weights(self) -> np.ndarray:
        t = self.source.nodes
        return self.source.plain_weights / t**2

    @property
    def n(self) -> int:
        return self.source.n


def _omega(weight, t):
    if weight == "one":
        return np.ones_like(t)
    r = np.sqrt(1.0 - t * t)
    return r if weight == "sqrt" else 1.0 / r


@dataclass(eq=False)
class GridFunction:
    """``omega * p`` on a finite grid, or its Theta-image on a cofinite grid.

    ``coeffs`` are the Chebyshev coefficients of ``p`` (possibly longer than the
    grid size). ``values`` are the samples at the grid nodes.
    """

    grid: FiniteGrid | CofiniteGrid
    coeffs: np.ndarray
    weight: str = "one"
    _values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.weight not in WEIGHTS:
            raise DomainError(f"weight must be one of {WEIGHTS}")
        self.coeffs = np.asarray(self.coeffs)

    @property
    def cofinite(self) -> bool:
        return isinstance(self.grid, CofiniteGrid)

    @property
    def finite_grid(self) -> FiniteGrid:
        return self.grid.source if self.cofinite else self.grid

    @classmethod
    def from_values(cls, grid, values, weight: str = "one"):
        """Interpolate nodal samples. On a cofinite grid the samples are of h(x_k)."""
        fg = grid.source if isinstance(grid, CofiniteGrid) else grid
        values = np.asarray(values)
        if values.shape != (fg.n,):
            raise DomainError("one value per grid node is required")
        t = fg.nodes
        pulled = values / t if isinstance(grid, CofiniteGrid) else values
        p = pulled / _omega(weight, t)
        return cls(grid, fg._vander_inv @ p, weight)

    @classmethod
    def from_callable(cls, grid, fn, weight: str = "one"):
        """Sample ``fn`` on the grid nodes (x-nodes for a cofinite grid)."""
        return cls.from_values(grid, np.asarray(fn(grid.nodes)), weight)

    def pullback_eval(self, t):
        t = np.asarray(t, dtype=float)
        return _omega(self.weight, t) * C.chebval(t, self.coeffs)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.cofinite:
            if np.any(np.abs(x) <= 1.0):
                raise DomainError("cofinite function evaluated inside [-1, 1]")
            return self.pullback_eval(1.0 / x) / x
        if np.any(np.abs(x) >= 1.0):
            raise DomainError("finite function evaluated outside (-1, 1)")
        return self.pullback_eval(x)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = self(self.grid.nodes)
        return self._values


def _ucheb_val(c, x):
    """sum_k c_k U_k(x) by Clenshaw's recurrence."""
    x = np.asarray(x, dtype=float)
    b1 = np.zeros(x.shape, dtype=np.result_type(c, float))
    b2 = np.zeros_like(b1)
    for ck in c[::-1]:
        b1, b2 = ck + 2 * x * b1 - b2, b1
    return b1


def _t_to_u(a):
    """Chebyshev T-coefficients to U-coefficients of the same polynomial."""
    b = np.zeros(len(a), dtype=np.result_type(a, float))
    for k, ak in enumerate(a):
        if k == 0:
            b[0] += ak
        elif k == 1:
            b[1] += ak / 2
        else:
            b[k] += ak / 2
            b[k - 2] -= ak / 2
    return b


def _hilbert_plain(a, x):
    """T[p] for a polynomial p given by T-coefficients a (weight one)."""
    m = len(a) + 2
    y, w = np.polynomial.legendre.leggauss(m)
    da = C.chebder(a) if len(a) > 1 else np.zeros(1)
    d2a = C.chebder(da) if len(da) > 1 else np.zeros(1)
    px = C.chebval(x, a)
    py = C.chebval(y, a)
    diff = y[None, :] - x[:, None]
    close = np.abs(diff) < 1e-7
    safe = np.where(close, 1.0, diff)
    q = (py[None, :] - px[:, None]) / safe
    if close.any():
        taylor = C.chebval(x, da)[:, None] + 0.5 * C.chebval(x, d2a)[:, None] * diff
        q = np.where(close, taylor, q)
    return (q @ w + px * np.log((1 - x) / (1 + x))) / np.pi


def _hilbert_coeffs(f: GridFunction):
    """Return (kind, coeffs) of T[f] where kind says how coeffs are to be read."""
    a = f.coeffs
    if f.weight == "invsqrt":
        # T[T_k/sqrt] = U_{k-1}
        return "u", a[1:] if len(a) > 1 else np.zeros(1, dtype=a.dtype)
    if f.weight == "sqrt":
        b = _t_to_u(a)
        # T[sqrt U_j] = -T_{j+1}
        return "t", np.concatenate([[0.0], -b])
    return "plain", a


def _check_inside(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 1.0):
        raise DomainError("finite Hilbert transform evaluated outside (-1, 1)")
    return x


def _eval_hilbert(f: GridFunction, x):
    kind, c = _hilbert_coeffs(f)
    if kind == "u":
        return _ucheb_val(c, x)
    if kind == "t":
        return C.chebval(x, c)
    return _hilbert_plain(c, np.atleast_1d(x)).reshape(np.shape(x))


def _scalar(v):
    v = np.asarray(v)
    return v[()] if v.ndim == 0 else v


def finite_hilbert(f: GridFunction, x):
    """T[f](x) for |x| < 1."""
    if f.cofinite:
        raise DomainError("finite_hilbert expects a function on [-1, 1]")
    return _scalar(_eval_hilbert(f, _check_inside(x)))


def finite_hilbert_grid(f: GridFunction) -> GridFunction:
    """T[f] as a grid function, exact when f has weight sqrt or invsqrt."""
    kind, c = _hilbert_coeffs(f)
    if kind == "u":
        return GridFunction(f.grid, _u_to_t(c), "one")
    if kind == "t":
        return GridFunction(f.grid, c, "one")
    return GridFunction.from_values(f.grid, _hilbert_plain(c, f.grid.nodes), "one")


def _u_to_t(b):
    """U-coefficients to T-coefficients: U_k = 2 sum T_j (j = k, k-2, ...), halved at j=0."""
    a = np.zeros(len(b), dtype=np.result_type(b, float))
    for k, bk in enumerate(b):
        j = np.arange(k, -1, -2)
        a[j] += 2 * bk
        if k % 2 == 0:
            a[0] -= bk
    return a


def finite_hilbert_inverse_grid(g: GridFunction) -> GridFunction:
    """Tricomi inverse: the solution of T[f] = g that is bounded by 1/sqrt(1-x^2)
    with zero integral, returned with weight invsqrt (or one for sqrt-weighted g)."""
    if g.cofinite:
        raise DomainError("finite inverse expects a function on [-1, 1]")
    if g.weight == "one":
        b = _t_to_u(g.coeffs)
        return GridFunction(g.grid, np.concatenate([[0.0], b]), "invsqrt")
    if g.weight == "invsqrt":
        # sqrt * g = p, so T[p] carries log terms; sample and reinterpolate
        vals = _hilbert_plain(g.coeffs, g.grid.nodes)
        return GridFunction.from_values(g.grid, -vals / np.sqrt(1 - g.grid.nodes**2), "invsqrt")
    # weight sqrt: sqrt * g = (1 - t^2) p, a polynomial
    c = C.chebmul([0.5, 0.0, -0.5], g.coeffs)
    vals = _hilbert_plain(c, g.grid.nodes)
    return GridFunction.from_values(g.grid, -vals / np.sqrt(1 - g.grid.nodes**2), "invsqrt")


def finite_hilbert_inverse(g: GridFunction, x):
    """T^{-1}[g](x) for |x| < 1."""
    x = _check_inside(x)
    return _scalar(finite_hilbert_inverse_grid(g)(x))


def theta(f: GridFunction) -> GridFunction:
    """Inversion map Theta[f](x) = f(1/x)/x, finite to cofinite."""
    if f.cofinite:
        raise DomainError("theta expects a function on [-1, 1]")
    return GridFunction(CofiniteGrid(f.grid), f.coeffs, f.weight)


def theta_star(h: GridFunction) -> GridFunction:
    """Inverse of theta: (1/t) h(1/t), cofinite to finite."""
    if not h.cofinite:
        raise DomainError("theta_star expects a cofinite function")
    return GridFunction(h.grid.source, h.coeffs, h.weight)


def _check_outside(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) <= 1.0):
        raise DomainError("cofinite transform evaluated inside [-1, 1]")
    return x


def cofinite_hilbert(h: GridFunction, x, method: str = "theta"):
    """P[h](x) = (1/pi) PV int_{|y|>1} h(y)/(y - x) dy for |x| > 1.

    ``method="theta"`` pulls back to [-1, 1]; ``method="direct"`` runs adaptive
    QUADPACK quadrature on the interpolant in x-space (a slow cross-check).
    """
    if not h.cofinite:
        raise DomainError("cofinite_hilbert expects a cofinite function")
    x = _check_outside(x)
    if method == "theta":
        f = theta_star(h)
        return _scalar(-_eval_hilbert(f, 1.0 / x) / x)
    if method == "direct":
        return _scalar(np.vectorize(lambda xx: _direct_pv(h, xx), otypes=[complex])(x))
    raise DomainError(f"unknown method {method!r}")


def _quad_c(fn, a, b, **kw):
    re = integrate.quad(lambda y: np.real(fn(y)), a, b, **kw)[0]
    im = integrate.quad(lambda y: np.imag(fn(y)), a, b, **kw)[0]
    return re + 1j * im


def _direct_pv(h: GridFunction, x: float) -> complex:
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=400)
    hv = lambda y: h(y)  # noqa: E731
    s = np.sign(x)
    delta = 0.5 * min(abs(x) - 1.0, 1.0)
    near = (abs(x) - delta, abs(x) + delta)
    total = 0.0j
    # side not containing x, mapped to |y| in (1, inf)
    total += _quad_c(lambda y: hv(-s * y) / (-s * y - x), 1.0, np.inf, **opts)
    # same side: left piece, PV window, right piece
    total += _quad_c(lambda y: hv(s * y) / (s * y - x), 1.0, near[0], **opts)
    win = _quad_c(lambda y: hv(s * y), near[0], near[1], weight="cauchy", wvar=abs(x), **opts)
    total += win * s
    total += _quad_c(lambda y: hv(s * y) / (s * y - x), near[1], np.inf, **opts)
    return total / np.pi


def cofinite_hilbert_inverse(f: GridFunction, x, c: complex = 0.0):
    """Right inverse of P: P[P^{-1} f] = f. Adds ``c * sign(x)/sqrt(x^2 - 1)``,
    the function annihilated by P, when c is nonzero."""
    if not f.cofinite:
        raise DomainError("cofinite_hilbert_inverse expects a cofinite function")
    x = _check_outside(x)
    g = finite_hilbert_inverse_grid(theta_star(f))
    out = -g.pullback_eval(1.0 / x) / x
    if c:
        out = out + c * np.sign(x) / np.sqrt(x * x - 1.0)
    return _scalar(out)


def cofinite_hilbert_inverse_grid(f: GridFunction) -> GridFunction:
    g = finite_hilbert_inverse_grid(theta_star(f))
    return GridFunction(f.grid, -g.coeffs, g.weight)


def lp_norm(f: GridFunction, p: float) -> float:
    """L^p norm on [-1, 1] by the grid's plain quadrature."""
    if f.cofinite:
        raise DomainError("lp_norm expects a function on [-1, 1]")
    g = f.grid
    return float(np.sum(g.plain_weights * np.abs(f(g.nodes)) ** p) ** (1.0 / p))


def weighted_lp_norm(h: GridFunction, p: float) -> float:
    """(int_{|x|>1} |x|^{p-2} |h|^p dx)^{1/p}, computed as the L^p norm of Theta^* h."""
    if not h.cofinite:
        raise DomainError("weighted_lp_norm expects a cofinite function")
    return lp_norm(theta_star(h), p)
