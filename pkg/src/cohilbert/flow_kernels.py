"""Laplace-domain kernels of the linearized subsonic flow problem.

All lengths are in half-chords. With beta = 1 - M^2:

    d(lam) = lam M^2 / (U beta),   r(lam) = lam M / (U sqrt(beta)),   c = r / sqrt(beta)
    S(x, z, lam) = -exp(d x) / sqrt(beta) * K0(r sqrt(x^2/beta + z^2))
    R(x, lam)    = (lam + U d) K0(c|x|) + U d/dx K0(c|x|) = -U/x + M(x, lam)

M is evaluated as (lam + U d) K0(c|x|) - U c sign(x) (K1(c|x|) - 1/(c|x|)) so the
pole of R cancels analytically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .special_functions import bessel_k0_k1, bessel_k_all, k0, m_table_eval, k0_log_split, k1_log_split


@dataclass(frozen=True)
class FlowParams:
    a_inf: float = 1.0
    mach: float = 0.5
    kutta_extent: float = 2.0
    sigma_a: float = 0.2
    sigma1: float = 0.5
    sigma2: float = 1.0
    u_free: float | None = None

    def __post_init__(self):
        if not (0.0 < self.mach < 1.0):
            raise ConfigError("Mach number must lie in (0, 1)")
        if self.a_inf <= 0.0:
            raise ConfigError("speed of sound must be positive")
        if not self.kutta_extent > 1.0:
            raise ConfigError("Kutta extent A must exceed 1")
        if not (0.0 < self.sigma_a < self.sigma1 < self.sigma2):
            raise ConfigError("need 0 < sigma_a < sigma1 < sigma2")
        u = self.mach * self.a_inf
        if self.u_free is None:
            object.__setattr__(self, "u_free", u)
        elif abs(self.u_free - u) > 1e-12 * u:
            raise ConfigError("u_free must equal mach * a_inf")

    @property
    def beta(self) -> float:
        return 1.0 - self.mach**2

    @property
    def U(self) -> float:
        return self.u_free


def _lam(lam) -> complex:
    lam = complex(lam)
    if not np.isfinite(lam) or lam.real <= 0.0:
        raise DomainError("spectral parameter needs finite value with Re > 0")
    return lam


def d_lambda(p: FlowParams, lam) -> complex:
    lam = complex(lam)
    return lam * p.mach**2 / (p.U * p.beta)


def r_lambda(p: FlowParams, lam) -> complex:
    lam = complex(lam)
    return lam * p.mach / (p.U * np.sqrt(p.beta))


def c_lambda(p: FlowParams, lam) -> complex:
    """Decay rate of R and M in x: r / sqrt(1 - M^2)."""
    return r_lambda(p, lam) / np.sqrt(p.beta)


def sqrt_D(p: FlowParams, omega, lam):
    """Root of D = M^2 (lam/U + i omega)^2 + omega^2 with positive real part."""
    lam = _lam(lam)
    omega = np.asarray(omega, dtype=float)
    D = p.mach**2 * (lam / p.U + 1j * omega) ** 2 + omega**2
    root = np.sqrt(D)
    if np.any(root.real <= 0.0):
        raise ArithmeticError("branch of sqrt(D) left the right half-plane")
    return root[()] if root.ndim == 0 else root


def s_kernel(p: FlowParams, x, z, lam):
    lam = _lam(lam)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    rho = np.sqrt(x * x / p.beta + z * z)
    if np.any(rho == 0.0):
        raise DomainError("S is singular at (x, z) = (0, 0)")
    out = -np.exp(d_lambda(p, lam) * x) / np.sqrt(p.beta) * k0(r_lambda(p, lam) * rho)
    return out[()] if np.ndim(out) == 0 else out


def r_kernel(p: FlowParams, x, lam):
    lam = _lam(lam)
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise DomainError("R is singular at x = 0")
    c = c_lambda(p, lam)
    kk0, kk1 = bessel_k0_k1(c * np.abs(x))
    out = (lam + p.U * d_lambda(p, lam)) * kk0 - p.U * c * np.sign(x) * kk1
    return out[()] if np.ndim(out) == 0 else out


def m_kernel(p: FlowParams, x, lam, *, with_flag: bool = False):
    """Regular part M = R + U/x. At x = 0 the log-singular value is replaced by
    the finite part (the coefficient of log|x| dropped) and flagged."""
    lam = _lam(lam)
    x = np.asarray(x, dtype=float)
    c = c_lambda(p, lam)
    a = lam + p.U * d_lambda(p, lam)
    zero = x == 0.0
    ax = np.where(zero, 1.0, np.abs(x))
    zeta = c * ax
    kk0, _, kk1m = bessel_k_all(zeta)
    out = a * kk0 - p.U * c * np.sign(x) * kk1m
    if zero.any():
        # K0(c|x|) = -log|x| I0 - log(c) I0 + E(c|x|); finite part at x = 0
        fp = a * (-np.log(c) + np.log(2.0) - 0.57721566490153286061)
        out = np.where(zero, fp, out)
    out = out[()] if out.ndim == 0 else out
    return (out, zero[()] if zero.ndim == 0 else zero) if with_flag else out


def m_kernel_array(p: FlowParams, x, lam):
    """Vectorized M for x != 0 without validation overhead (hot path)."""
    c = c_lambda(p, lam)
    a = lam + p.U * d_lambda(p, lam)
    ax = np.abs(x)
    kk0, _, kk1m = bessel_k_all(c * ax)
    return a * kk0 - p.U * c * np.sign(x) * kk1m


CHEB_DEG = 21


def _cheb_nodes(deg=CHEB_DEG):
    return np.cos(np.pi * (np.arange(deg) + 0.5) / deg)


def _cheb_coeffs(vals):
    """Coefficients from values at first-kind Chebyshev points (last axis)."""
    deg = vals.shape[-1]
    T = np.cos(np.outer(np.arange(deg), np.pi * (np.arange(deg) + 0.5) / deg))
    c = (2.0 / deg) * vals @ T.T
    c[..., 0] *= 0.5
    return c


class MTable:
    """Piecewise Chebyshev representation of M(., lam) for repeated evaluation.

    For r = |x| <= r_s the log terms are split off exactly (K0 and K1 - 1/z are
    log(r) times an entire function plus another entire function); beyond r_s the
    two Bessel combinations are tabulated on panels doubling in length up to 2/|c|.
    Points beyond ``rmax`` fall back to direct evaluation.
    """

    def __init__(self, p: FlowParams, lam, rmax: float):
        self.lam = lam = complex(lam)
        self.c = c = c_lambda(p, lam)
        self.a = lam + p.U * d_lambda(p, lam)
        self.Uc = p.U * c
        self.p = p
        self.rs = rs = min(1.0, 1.0 / abs(c))
        t = _cheb_nodes()
        r0 = 0.5 * rs * (t + 1.0)
        i0, e = k0_log_split(c * r0)
        i1, f = k1_log_split(c * r0)
        lc = np.log(c)
        self.near = _cheb_coeffs(np.array([i0, e - lc * i0, i1, f + lc * i1]))[None]
        br = [rs]
        ell = 2.0 / abs(c)
        while br[-1] < rmax:
            br.append(br[-1] + min(ell, br[-1]))
        self.breaks = np.array(br)
        mids = 0.5 * (self.breaks[1:] + self.breaks[:-1])
        halves = 0.5 * (self.breaks[1:] - self.breaks[:-1])
        rr = mids[:, None] + halves[:, None] * t[None, :]
        k0v, _, qv = bessel_k_all(c * rr)
        self.far = _cheb_coeffs(np.stack([k0v, qv], axis=1))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = m_table_eval(x, self.rs, self.near, self.breaks, self.far, self.a, self.Uc)
        bad = np.isnan(out)
        if bad.any():
            out[bad] = m_kernel_array(self.p, x.ravel()[bad], self.lam)
        return out.reshape(x.shape)


def r_kernel_array(p: FlowParams, x, lam):
    c = c_lambda(p, lam)
    a = lam + p.U * d_lambda(p, lam)
    kk0, kk1, _ = bessel_k_all(c * np.abs(x))
    return a * kk0 - p.U * c * np.sign(x) * kk1


__all__ = [
    "FlowParams",
    "MTable",
    "c_lambda",
    "d_lambda",
    "m_kernel",
    "r_kernel",
    "r_lambda",
    "s_kernel",
    "sqrt_D",
]
