"""Laplace-domain boundary value problem for an oscillating wing.

For each spectral parameter lam the pipeline assembles the Kutta right-hand side
f_a from the downwash, solves the second-kind system on the Kutta support, extends
the density to the chord, and evaluates the potential xi. A trapezoid rule along a
vertical line returns the time-domain potential phi.

Notation: R(x) = -U/x + M(x) is the Kutta kernel, h the density (h = P^{-1}[g] off
the chord, e^{-d x} w_hat / pi on it), and xi = -e^{d x}/sqrt(beta) int K0(r rho) h.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import wofz

from .errors import CharacteristicValueError, ConfigError, DomainError, TailError
from .flow_kernels import FlowParams, _lam, c_lambda, d_lambda, m_kernel_array, r_lambda
from .fredholm import DET_FLOOR, RESOLVENT_TOL, assemble_n_matrix, resolvent, symmetric_etas, worker_count
from .nystrom import KuttaGrid, Panel, exterior_far_panels, pinv_rows
from .quadrature import composite_rule, graded_rule
from .special_functions import bessel_k0_k1, k0

Z_PROBES = (1e-2, 5e-3)
PROBE_SCALE = 0.03
TAIL_TOL = 1e-8
IM_TOL = 1e-6


class NearSingularityWarning(RuntimeWarning):
    """A target lies within 1e-6 of a chord end, where R(x - y) is nearly singular."""


# ---------------------------------------------------------------- downwash


def _gauss_laplace(s, tau: float, t0: float):
    """int_0^inf exp(-s t) exp(-(t - t0)^2 / (2 tau^2)) dt through the Faddeeva function."""
    z = (s * tau * tau - t0) / (tau * np.sqrt(2.0))
    return tau * np.sqrt(np.pi / 2.0) * np.exp(-t0 * t0 / (2.0 * tau * tau)) * wofz(1j * z)


def _sine_envelope_laplace(lam, omega: float, tau: float, t0: float):
    """Laplace transform of sin(omega t) exp(-(t - t0)^2 / (2 tau^2))."""
    return (_gauss_laplace(lam - 1j * omega, tau, t0) - _gauss_laplace(lam + 1j * omega, tau, t0)) / 2j


@dataclass(frozen=True)
class DownwashSpec:
    """Normal velocity on the chord and its Laplace transform w_hat(x, lam).

    The built-in forms oscillate at ``frequency`` under a Gaussian envelope of width
    ``tau`` centred at ``t0``, so the transform is entire in lam and decays like
    exp(-tau^2 eta^2 / 2) along vertical lines.
    """

    form: str = "harmonic-plunge"
    amplitude: float = 1.0
    frequency: float = 0.5
    tau: float = 1.0
    t0: float = 6.0
    u_free: float = 0.5
    transform: Callable | None = field(default=None, compare=False, repr=False)
    real: bool = True

    FORMS = ("harmonic-plunge", "harmonic-pitch", "custom-closed-form")

    def __post_init__(self):
        if self.form not in self.FORMS:
            raise ConfigError(f"unknown downwash form {self.form!r}")
        if not (self.tau > 0.0 and self.t0 > 0.0):
            raise ConfigError("envelope width and centre must be positive")
        if self.form == "custom-closed-form" and self.transform is None:
            raise ConfigError("custom downwash needs a transform callable")
        if not all(np.isfinite([self.amplitude, self.frequency, self.u_free])):
            raise ConfigError("downwash parameters must be finite")

    @classmethod
    def custom(cls, fn: Callable, real: bool = True) -> "DownwashSpec":
        """Wrap a vectorized callable (x, lam) -> w_hat."""
        return cls(form="custom-closed-form", transform=fn, real=real)

    @property
    def is_zero(self) -> bool:
        return self.form != "custom-closed-form" and self.amplitude == 0.0

    def laplace_transform(self, x, lam):
        x = np.asarray(x, dtype=float)
        lam = complex(lam)
        if self.form == "custom-closed-form":
            return np.broadcast_to(np.asarray(self.transform(x, lam), dtype=complex), x.shape).copy()
        amp = self.amplitude * _sine_envelope_laplace(lam, self.frequency, self.tau, self.t0)
        if self.form == "harmonic-plunge":
            return np.full(x.shape, amp, dtype=complex)
        # pitch about mid-chord: w = -(U alpha + x alpha'), alpha(0) = 0
        return -(self.u_free + lam * x) * amp

    def time_domain(self, x, t):
        """w_a(x, t) for the built-in forms (used by tests)."""
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        env = np.exp(-((t - self.t0) ** 2) / (2.0 * self.tau**2))
        s = self.amplitude * np.sin(self.frequency * t) * env
        if self.form == "harmonic-plunge":
            return s
        if self.form == "harmonic-pitch":
            ds = self.amplitude * env * (self.frequency * np.cos(self.frequency * t) - (t - self.t0) / self.tau**2 * np.sin(self.frequency * t))
            return -(self.u_free * s + x * ds)
        raise ValueError("no time-domain form for custom downwash")


# ---------------------------------------------------------------- right-hand side


def _chord_rule(s: float, levels: int = 8, p: int = 16):
    y, w = graded_rule(-1.0, 1.0, s, p, levels=levels)
    keep = w > 0.0
    return y[keep], w[keep]


def assemble_f_a(p: FlowParams, w: DownwashSpec, grid: KuttaGrid, lam, x=None) -> np.ndarray:
    """f_a(x) = -(chi_A(x)/pi) int_{-1}^{1} e^{-d y} R(x - y) w_hat(y) dy at the grid nodes
    (or at ``x``). The Cauchy part of R is integrated by subtracting the value at the
    nearer chord end; the log part by a rule graded toward that end."""
    lam = _lam(lam)
    x = grid.nodes if x is None else np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) <= 1.0):
        raise DomainError("f_a is defined for |x| > 1")
    out = np.zeros(x.shape, dtype=complex)
    if w.is_zero:
        return out
    if np.any(np.abs(np.abs(x) - 1.0) < 1e-6):
        warnings.warn("targets within 1e-6 of a chord end; the Cauchy part is subtracted exactly",
                      NearSingularityWarning, stacklevel=2)
    d = d_lambda(p, lam)
    inside = np.abs(x) <= p.kutta_extent
    for s in (-1.0, 1.0):
        sel = np.flatnonzero(inside & (np.sign(x) == s))
        if sel.size == 0:
            continue
        y, wy = _chord_rule(s)
        phi = np.exp(-d * y) * w.laplace_transform(y, lam)
        phi_s = np.exp(-d * s) * w.laplace_transform(np.array([s]), lam)[0]
        xs = x[sel][:, None]
        D = xs - y[None, :]
        cauchy = ((phi - phi_s)[None, :] / D) @ wy + phi_s * np.log(np.abs((x[sel] + 1.0) / (x[sel] - 1.0)))
        regular = (m_kernel_array(p, D, lam) * phi[None, :]) @ wy
        out[sel] = -(-p.U * cauchy + regular) / np.pi
    return out


# ---------------------------------------------------------------- per-lambda solve


@dataclass
class LambdaSolve:
    """Solution data at one spectral parameter.

    ``g`` and ``f_a`` live on the Kutta grid nodes; ``h_a_outer`` holds h on the
    quadrature nodes ``u`` (weights ``u_weights``) covering |x| > 1; ``h_a_inner``
    holds h on ``chord`` (weights ``chord_weights``). Residuals are relative.
    """

    lam: complex
    params: FlowParams
    downwash: DownwashSpec
    grid: KuttaGrid
    f_a: np.ndarray
    g: np.ndarray
    u: np.ndarray
    u_weights: np.ndarray
    h_a_outer: np.ndarray
    chord: np.ndarray
    chord_weights: np.ndarray
    h_a_inner: np.ndarray
    determinant: complex
    kutta_residual: float = float("nan")
    tangency_residual: float = float("nan")
    weighted_norms: dict = field(default_factory=dict)

    def h_inner(self, x):
        """(1/pi) e^{-d x} w_hat(x) at arbitrary chord points."""
        x = np.asarray(x, dtype=float)
        d = d_lambda(self.params, self.lam)
        return np.exp(-d * x) * self.downwash.laplace_transform(x, self.lam) / np.pi

    def h_outer(self, x):
        """P^{-1}[g] at arbitrary points with |x| > 1."""
        return pinv_rows(self.grid.support, x) @ self.g

    def conjugate(self) -> "LambdaSolve":
        """Solve at conj(lam) for real data: every field is conjugated."""
        return replace(self, lam=self.lam.conjugate(), f_a=self.f_a.conj(), g=self.g.conj(),
                       h_a_outer=self.h_a_outer.conj(), h_a_inner=self.h_a_inner.conj(),
                       determinant=self.determinant.conjugate(), weighted_norms=dict(self.weighted_norms))


CHORD_PANELS = 16


def _chord_grid():
    return composite_rule(np.linspace(-1.0, 1.0, CHORD_PANELS + 1), 16)


def solve_lambda(p: FlowParams, w: DownwashSpec, grid: KuttaGrid, lam, *, diagnostics: bool = True,
                 det_floor: float = DET_FLOOR, resolvent_tol: float = RESOLVENT_TOL,
                 norm_ps=(1.2, 1.3)) -> LambdaSolve:
    """Solve (I + N) g = f_a / (pi U) on the Kutta support and set h = P^{-1}[g]."""
    lam = _lam(lam)
    K = assemble_n_matrix(p, grid, lam)
    try:
        fs = resolvent(K, det_floor, resolvent_tol)
    except CharacteristicValueError as e:
        e.lam = lam
        raise
    f = assemble_f_a(p, w, grid, lam)
    rhs = f / (np.pi * p.U)
    g = rhs - fs.resolvent @ rhs
    u, wu = K.extra["u"], K.extra["u_weights"]
    chord, cw = _chord_grid()
    s = LambdaSolve(lam, p, w, grid, f, g, u, wu, K.extra["pinv"] @ g, chord, cw, None, fs.determinant)
    s.h_a_inner = s.h_inner(chord)
    if diagnostics:
        s.kutta_residual = kutta_residual(s)
        s.tangency_residual = tangency_residual(s)
        s.weighted_norms = weighted_norms(s, norm_ps)
    return s


def solve_line(p: FlowParams, w: DownwashSpec, grid: KuttaGrid, sigma: float, eta_max: float, n_samples: int,
               *, diagnostics: bool = False, mirror: bool = True, **kw) -> list[LambdaSolve]:
    """Solves on the symmetric grid sigma + i linspace(-eta_max, eta_max, n_samples).

    With ``mirror`` and real data only eta >= 0 is computed; the rest is conjugated.
    """
    if n_samples < 1 or n_samples % 2 == 0:
        raise ConfigError("the eta grid needs an odd number of samples")
    etas = symmetric_etas(eta_max, n_samples)
    half = n_samples // 2
    todo = etas[half:] if (mirror and w.real) else etas

    def one(eta):
        return solve_lambda(p, w, grid, complex(sigma, eta), diagnostics=diagnostics, **kw)

    with ThreadPoolExecutor(worker_count()) as ex:
        out = list(ex.map(one, todo))
    if mirror and w.real:
        out = [s.conjugate() for s in out[:0:-1]] + out
    return out


# ---------------------------------------------------------------- Kutta residual


def _split(q: Panel) -> list[Panel]:
    m = q.mid
    return [Panel(q.side, q.kind, q.a, m, q.base, q.p), Panel(q.side, q.kind, m, q.b, q.base, q.p)]


def _residual_panels(grid: KuttaGrid, c: complex) -> list[Panel]:
    """The composition panels, each halved: an independent, finer rule for checking."""
    panels = grid.u_support + grid.ext_near + exterior_far_panels(grid.A, c, grid.p)
    return [r for q in panels for r in _split(q)]


def kutta_residual(s: LambdaSolve, per_side: int = 10) -> float:
    """max |int_{|y|>1} R(x - y) h(y) dy - f_a(x)| / max |f_a| over off-node control points.

    The Cauchy part is integrated by singularity subtraction; the panel holding x is
    replaced by a rule graded toward x, which also resolves the log part of M.
    """
    p, grid, lam = s.params, s.grid, s.lam
    fscale = float(np.max(np.abs(s.f_a))) if s.f_a.size else 0.0
    if fscale == 0.0 and not np.any(s.g):
        return 0.0
    xc = grid.control_points(per_side)
    panels = _residual_panels(grid, c_lambda(p, lam))
    ys = np.concatenate([q.x for q in panels])
    ws = np.concatenate([q.w for q in panels])
    owner = np.repeat(np.arange(len(panels)), [q.p for q in panels])
    finite = np.repeat([q.kind != "tail" for q in panels], [q.p for q in panels])
    reach = max(abs(float(q.to_x(q.b))) for q in panels if q.kind != "tail")
    local = []
    for x in xc:
        k = next(k for k, q in enumerate(panels)
                 if q.kind == "support" and q.side == np.sign(x) and abs(float(q.local(x))) <= 1.0)
        q = panels[k]
        vq, wq = graded_rule(q.a, q.b, float(q.to_v(x)), q.p, levels=5)
        local.append((k, q.to_x(vq), wq * q.jac(vq)))
    extra = np.concatenate([yl for _, yl, _ in local])
    h_all = pinv_rows(grid.support, np.concatenate([ys, extra, xc])) @ s.g
    h_ys, h_extra, h_xc = np.split(h_all, [ys.size, ys.size + extra.size])
    h_extra = h_extra.reshape(len(xc), -1)
    f_c = assemble_f_a(p, s.downwash, grid, lam, xc)
    res = 0.0
    for i, (x, (k, yl, wl)) in enumerate(zip(xc, local)):
        keep = owner != k
        y = np.concatenate([ys[keep], yl])
        wt = np.concatenate([ws[keep], wl])
        hy = np.concatenate([h_ys[keep], h_extra[i]])
        same = np.concatenate([finite[keep] & (np.sign(ys[keep]) == np.sign(x)), np.ones(yl.size, bool)])
        D = x - y
        wt = np.where(D == 0.0, 0.0, wt)  # a graded node rounded onto x carries negligible weight
        D = np.where(wt == 0.0, 1.0, D)
        sub = np.where(same, h_xc[i], 0.0)
        val = np.sum(wt * (m_kernel_array(p, D, lam) * hy - p.U * (hy - sub) / D))
        lo, hi = (1.0, reach) if x > 0 else (-reach, -1.0)
        val -= p.U * h_xc[i] * (np.log(abs(x - lo)) - np.log(abs(x - hi)))
        res = max(res, abs(val - f_c[i]))
    return res / fscale if fscale > 0.0 else res


# ---------------------------------------------------------------- potential


def _inner_rule(x: float, z: float):
    """Chord rule for kernels of width z around x; a fixed rule once z is not small."""
    base = np.linspace(-1.0, 1.0, CHORD_PANELS + 1)
    if z >= 0.2 or abs(x) >= 1.0 + 0.2:
        return composite_rule(base, 16)
    steps = z * 2.0 ** np.arange(-2, 12)
    br = np.concatenate([base, x - steps, x + steps, [x]])
    br = np.unique(br[(br >= -1.0) & (br <= 1.0)])
    return composite_rule(br, 16)


def _rho(p: FlowParams, dx, z):
    return np.sqrt(dx * dx / p.beta + z * z)


def xi_values(s: LambdaSolve, x, z) -> np.ndarray:
    """xi(x, z, lam) at broadcast points, z > 0."""
    x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
    if np.any(z <= 0.0):
        raise DomainError("xi is evaluated for z > 0")
    p, lam = s.params, s.lam
    r = r_lambda(p, lam)
    d = d_lambda(p, lam)
    xf, zf = x.ravel(), z.ravel()
    outer = (k0(r * _rho(p, xf[:, None] - s.u[None, :], zf[:, None])) * s.h_a_outer[None, :]) @ s.u_weights
    inner = np.empty(xf.size, dtype=complex)
    fixed = (zf >= 0.2) | (np.abs(xf) >= 1.2)
    if fixed.any():
        inner[fixed] = (k0(r * _rho(p, xf[fixed, None] - s.chord[None, :], zf[fixed, None])) * s.h_a_inner) @ s.chord_weights
    for i in np.flatnonzero(~fixed):
        y, wy = _inner_rule(xf[i], zf[i])
        inner[i] = np.sum(wy * k0(r * _rho(p, xf[i] - y, zf[i])) * s.h_inner(y))
    out = -np.exp(d * xf) / np.sqrt(p.beta) * (inner + outer)
    return out.reshape(x.shape)


def xi_eval(p: FlowParams, s: LambdaSolve, x: float, z: float) -> complex:
    if z <= 0.0:
        raise DomainError("xi is evaluated for z > 0")
    if p != s.params:
        raise ValueError("flow parameters differ from those of the solve")
    return complex(xi_values(s, x, z))


def dz_xi(s: LambdaSolve, x, z: float) -> np.ndarray:
    """d xi / dz at (x, z) from the analytic derivative of the K0 kernel."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if z <= 0.0:
        raise DomainError("z must be positive")
    p, lam = s.params, s.lam
    r = r_lambda(p, lam)
    d = d_lambda(p, lam)

    def kern(dx):
        rho = _rho(p, dx, z)
        return r * bessel_k0_k1(r * rho)[1] * z / rho

    out = np.empty(x.size, dtype=complex)
    for i, xi in enumerate(x):
        y, wy = _inner_rule(xi, z)
        inner = np.sum(wy * kern(xi - y) * s.h_inner(y))
        outer = np.sum(s.u_weights * kern(xi - s.u) * s.h_a_outer)
        out[i] = np.exp(d * xi) / np.sqrt(p.beta) * (inner + outer)
    return out


def probe_heights(s: LambdaSolve) -> tuple[float, float]:
    """Probe heights for the z -> 0 limit, shrunk with the decay length 1/|c| so the
    remaining O((z c)^2) error does not grow along the line."""
    z1 = min(Z_PROBES[0], PROBE_SCALE / abs(c_lambda(s.params, s.lam)))
    return z1, z1 * Z_PROBES[1] / Z_PROBES[0]


def _extrapolated_dz(s: LambdaSolve, x, probes=None):
    z1, z2 = probes if probes is not None else probe_heights(s)
    # first-order error in z: eliminate it with the two probes
    return (z1 * dz_xi(s, x, z2) - z2 * dz_xi(s, x, z1)) / (z1 - z2)


def tangency_check(p: FlowParams, s: LambdaSolve, x_points, probes=None) -> float:
    """max over x_points of |d xi/dz (z -> 0) - w_hat(x)| (absolute)."""
    x = np.atleast_1d(np.asarray(x_points, dtype=float))
    if np.any(np.abs(x) >= 1.0):
        raise DomainError("tangency is checked on the chord interior")
    if s.downwash.is_zero and not np.any(s.g):
        return 0.0
    target = s.downwash.laplace_transform(x, s.lam)
    return float(np.max(np.abs(_extrapolated_dz(s, x, probes) - target)))


TANGENCY_POINTS = np.linspace(-0.8, 0.8, 9)


def tangency_residual(s: LambdaSolve, x_points=TANGENCY_POINTS, probes=None) -> float:
    """tangency_check relative to max |w_hat| on the same points."""
    err = tangency_check(s.params, s, x_points, probes)
    scale = float(np.max(np.abs(s.downwash.laplace_transform(np.asarray(x_points), s.lam))))
    return err / scale if scale > 0.0 else err


def weighted_norms(s: LambdaSolve, ps=(1.2, 1.3)) -> dict:
    """int (1 + |x|)^(p - 2) |h_a|^p dx over the whole line, for each p."""
    out = {}
    for q in ps:
        outer = np.sum(s.u_weights * (1.0 + np.abs(s.u)) ** (q - 2.0) * np.abs(s.h_a_outer) ** q)
        inner = np.sum(s.chord_weights * (1.0 + np.abs(s.chord)) ** (q - 2.0) * np.abs(s.h_a_inner) ** q)
        out[float(q)] = float(outer + inner)
    return out


# ---------------------------------------------------------------- inverse transform


@dataclass
class SolutionField:
    x_grid: np.ndarray
    z_grid: np.ndarray
    t_grid: np.ndarray
    phi: np.ndarray  # shape (x, z, t)
    sigma_used: float
    eta_truncation: float
    imag_max: float = 0.0
    tail_ratio: float = 0.0


def line_values(solves, x_grid, z_grid) -> np.ndarray:
    """xi on the (x, z) tensor grid for every solve: shape (n_lambda, nx, nz)."""
    X, Z = np.meshgrid(np.asarray(x_grid, float), np.asarray(z_grid, float), indexing="ij")
    with ThreadPoolExecutor(worker_count()) as ex:
        return np.array(list(ex.map(lambda s: xi_values(s, X, Z), solves)))


def inverse_laplace_phi(p: FlowParams, solves, x_grid, z_grid, t_grid, *, tail_tol: float = TAIL_TOL,
                        im_tol: float = IM_TOL, values=None) -> SolutionField:
    """phi(x, z, t) = (1/2 pi) int e^{lam t} xi(x, z, lam) d eta by the trapezoid rule.

    ``values`` may carry precomputed ``line_values``. The integrand at the ends of the
    eta grid must be below ``tail_tol`` times its peak.
    """
    lams = np.array([s.lam for s in solves])
    if lams.size == 0:
        raise ValueError("no solves given")
    sigma = float(lams[0].real)
    eta = lams.imag
    if np.any(np.abs(lams.real - sigma) > 1e-12) or not np.allclose(eta, -eta[::-1], atol=1e-12):
        raise ValueError("solves must lie on one vertical line, symmetric in eta")
    if lams.size > 1 and not np.allclose(np.diff(eta), eta[1] - eta[0], rtol=1e-9, atol=1e-12):
        raise ValueError("eta grid must be uniform")
    if any(s.params != p for s in solves):
        raise ValueError("flow parameters differ from those of the solves")
    xi = line_values(solves, x_grid, z_grid) if values is None else np.asarray(values)
    t = np.asarray(t_grid, dtype=float)
    peak = float(np.max(np.abs(xi))) if xi.size else 0.0
    ends = float(max(np.max(np.abs(xi[0])), np.max(np.abs(xi[-1])))) if xi.size else 0.0
    ratio = ends / peak if peak > 0.0 else 0.0
    if ratio > tail_tol:
        raise TailError(f"integrand at |eta| = {abs(eta[-1]):g} is {ratio:.2e} of its peak (tolerance {tail_tol:.1e})")
    if lams.size == 1:
        wts = np.array([1.0])
    else:
        h = eta[1] - eta[0]
        wts = np.full(lams.size, h)
        wts[[0, -1]] *= 0.5
    E = np.exp(np.outer(lams, t)) * wts[:, None] / (2.0 * np.pi)  # (n_lambda, nt)
    vals = np.einsum("lxz,lt->xzt", xi, E)
    imag = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    scale = float(np.max(np.abs(vals.real))) if vals.size else 0.0
    if imag > im_tol * max(scale, 1e-300) and imag > 0.0:
        raise ArithmeticError(f"imaginary residue {imag:.2e} exceeds {im_tol:.1e} of the field scale")
    return SolutionField(np.asarray(x_grid, float), np.asarray(z_grid, float), t, vals.real.copy(),
                         sigma, float(abs(eta[-1])), imag, ratio)


__all__ = [
    "DownwashSpec",
    "LambdaSolve",
    "NearSingularityWarning",
    "SolutionField",
    "assemble_f_a",
    "dz_xi",
    "inverse_laplace_phi",
    "kutta_residual",
    "line_values",
    "solve_lambda",
    "solve_line",
    "probe_heights",
    "tangency_check",
    "tangency_residual",
    "weighted_norms",
    "xi_eval",
    "xi_values",
]
