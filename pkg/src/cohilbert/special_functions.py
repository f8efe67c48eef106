"""Modified Bessel functions K0 and K1 of complex argument in the right half-plane.

The compiled kernel is used when it was built; otherwise a numpy implementation
with identical regimes is selected at import. Set ``COHILBERT_BACKEND=python`` to
force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _bessel_py
from .errors import DomainError

EULER = _bessel_py.EULER

try:
    if os.environ.get("COHILBERT_BACKEND", "").lower() == "python":
        raise ImportError
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled.k0k1 if _compiled is not None else _bessel_py.k0k1
_cheb = _compiled.cheb_eval if _compiled is not None else _bessel_py.cheb_eval
_mtab = _compiled.m_table_eval if _compiled is not None else _bessel_py.m_table_eval


def set_backend(name: str) -> None:
    """Switch between ``"cython"`` and ``"python"`` at runtime (used by the benchmark)."""
    global BACKEND, _impl, _cheb, _mtab
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel not available")
        _impl, _cheb, _mtab = _compiled.k0k1, _compiled.cheb_eval, _compiled.m_table_eval
    elif name == "python":
        _impl, _cheb, _mtab = _bessel_py.k0k1, _bessel_py.cheb_eval, _bessel_py.m_table_eval
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def _check(z):
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise DomainError("Bessel argument must be finite")
    if np.any(z.real <= 0.0):
        raise DomainError("Bessel K is evaluated only for Re z > 0")
    return z


def _out(a):
    return a[()] if a.ndim == 0 else a


def _eval(z):
    # both kernels work on flat arrays; restore the caller's shape here
    out = _impl(z.ravel())
    return tuple(np.asarray(a).reshape(z.shape) for a in out)


def bessel_k0_k1(z):
    """K0(z) and K1(z) together. Arguments with Re z > 700 return exact zeros."""
    z = _check(z)
    k0, k1, _, _ = _eval(z)
    return _out(k0), _out(k1)


def k0(z, *, with_flag: bool = False):
    """K0(z) for Re z > 0. With ``with_flag`` also return the underflow mask."""
    z = _check(z)
    v, _, _, under = _eval(z)
    return (_out(v), _out(under)) if with_flag else _out(v)


def k1(z, *, with_flag: bool = False):
    z = _check(z)
    _, v, _, under = _eval(z)
    return (_out(v), _out(under)) if with_flag else _out(v)


def k0_prime(z):
    """dK0/dz = -K1(z)."""
    z = _check(z)
    return _out(-_eval(z)[1])


def bessel_k_all(z):
    """(K0, K1, K1 - 1/z) in one pass; the last is free of cancellation near 0."""
    z = _check(z)
    k0v, k1v, k1m, _ = _eval(z)
    return _out(k0v), _out(k1v), _out(k1m)


def k1_minus_pole(z):
    """K1(z) - 1/z without cancellation for small |z|."""
    z = _check(z)
    return _out(_eval(z)[2])


def cheb_eval(r, breaks, coef):
    """Evaluate piecewise Chebyshev series with coefficients coef[panel, function, k]."""
    r = np.ascontiguousarray(r, dtype=float).ravel()
    return _cheb(r, np.ascontiguousarray(breaks, dtype=float), np.ascontiguousarray(coef, dtype=complex))


def m_table_eval(x, rs, near, breaks, far, a, uc):
    """a K0(c|x|) - U c sign(x) (K1(c|x|) - 1/(c|x|)) from precomputed tables (NaN past them)."""
    x = np.ascontiguousarray(x, dtype=float).ravel()
    return _mtab(x, float(rs), np.ascontiguousarray(near, dtype=complex), np.ascontiguousarray(breaks, dtype=float),
                 np.ascontiguousarray(far, dtype=complex), complex(a), complex(uc))


def _i0_series(z):
    y = z * z / 4.0
    term = np.ones_like(z)
    i0 = term.copy()
    s = np.zeros_like(z)
    harm = 0.0
    for k in range(1, 40):
        term = term * y / (k * k)
        harm += 1.0 / k
        i0 = i0 + term
        s = s + harm * term
    return i0, s


def k0_log_split(z):
    """Return (I0(z), E(z)) with K0(z) = -log(z) I0(z) + E(z); both parts are entire.

    Only meaningful for moderate |z|: beyond |z| ~ 20 the two terms cancel badly.
    """
    z = _check(z)
    i0, s = _i0_series(z)
    return _out(i0), _out((np.log(2.0) - EULER) * i0 + s)


def k1_log_split(z):
    """Return (I1(z), F(z)) with K1(z) - 1/z = log(z) I1(z) + F(z); both parts are entire."""
    z = _check(z)
    y = z * z / 4.0
    t = z / 2.0
    i1 = t.copy()
    acc = (1.0 - 2.0 * EULER) * t  # psi(1) + psi(2) at k = 0
    psi1, psi2 = -EULER, 1.0 - EULER
    for k in range(1, 40):
        t = t * y / (k * (k + 1.0))
        psi1 += 1.0 / k
        psi2 += 1.0 / (k + 1.0)
        i1 = i1 + t
        acc = acc + (psi1 + psi2) * t
    # K1 = 1/z + log(z/2) I1 - (1/2) sum (psi(k+1) + psi(k+2)) (z/2)^(2k+1) / (k! (k+1)!)
    return _out(i1), _out(-np.log(2.0) * i1 - 0.5 * acc)
