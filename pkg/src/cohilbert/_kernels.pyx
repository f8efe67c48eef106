# cython: language_level=3
"""Compiled complex K0/K1 kernel; same regimes and constants as the numpy fallback."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, M_PI, NAN, log

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double complex cexp(double complex)
    double complex clog(double complex)
    double cabs(double complex)
    double creal(double complex)

cdef double EULER = 0.57721566490153286061
cdef double SERIES_RADIUS = 2.0
cdef double ASYMPTOTIC_RADIUS = 25.0
cdef double UNDERFLOW_RE = 700.0
cdef double EPS = 1e-17


cdef void _series(double complex z, double complex* k0, double complex* k1, double complex* k1m) noexcept nogil:
    cdef double complex y = z * z / 4.0
    cdef double complex term = 1.0, i0 = 1.0, s = 0.0, t1 = 1.0, i1s = 1.0
    cdef double complex k1s = 1.0 - 2.0 * EULER
    cdef double harm = 0.0, psi1 = -EULER, psi2 = 1.0 - EULER
    cdef int k
    for k in range(1, 40):
        term = term * y / (k * k)
        harm += 1.0 / k
        i0 += term
        s += harm * term
        t1 = t1 * y / (k * (k + 1.0))
        psi1 += 1.0 / k
        psi2 += 1.0 / (k + 1.0)
        i1s += t1
        k1s += (psi1 + psi2) * t1
        if cabs(term) < 1e-18 * cabs(i0) and cabs(t1) < 1e-18 * cabs(i1s):
            break
    cdef double complex lh = clog(z / 2.0)
    k0[0] = -(lh + EULER) * i0 + s
    k1m[0] = lh * (z / 2.0 * i1s) - z / 4.0 * k1s
    k1[0] = k1m[0] + 1.0 / z


cdef void _steed(double complex z, double complex* k0, double complex* k1, double complex* k1m) noexcept nogil:
    cdef double complex b = 2.0 * (1.0 + z)
    cdef double complex d = 1.0 / b
    cdef double complex h = d, delh = d, q1 = 0.0, q2 = 1.0, qnew, dels
    cdef double a1 = 0.25, a = -0.25
    cdef double complex q = a1, c = a1
    cdef double complex s = 1.0 + q * delh
    cdef int i
    for i in range(2, 2000):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if cabs(dels) < EPS * cabs(s):
            break
    k0[0] = csqrt(M_PI / (2.0 * z)) * cexp(-z) / s
    k1[0] = k0[0] * (z + 0.5 - a1 * h) / z
    k1m[0] = k1[0] - 1.0 / z


cdef double complex _asym(double complex z, int nu) noexcept nogil:
    cdef double complex term = 1.0, acc = 1.0
    cdef double prev = 1.0, mag
    cdef int k
    for k in range(1, 60):
        term = term * (4.0 * nu * nu - (2.0 * k - 1.0) ** 2) / (k * 8.0 * z)
        mag = cabs(term)
        if mag >= prev:
            break
        acc += term
        prev = mag
        if mag < EPS * cabs(acc):
            break
    return csqrt(M_PI / (2.0 * z)) * cexp(-z) * acc


def k0k1(z):
    """Return (K0, K1, K1 - 1/z, underflow) for a complex array with Re z > 0."""
    arr = np.ascontiguousarray(np.asarray(z, dtype=np.complex128))
    shape = arr.shape
    cdef cnp.complex128_t[::1] zz = arr.ravel()
    cdef Py_ssize_t n = zz.shape[0], i
    o0 = np.empty(n, dtype=np.complex128)
    o1 = np.empty(n, dtype=np.complex128)
    o2 = np.empty(n, dtype=np.complex128)
    uf = np.zeros(n, dtype=np.bool_)
    cdef cnp.complex128_t[::1] r0 = o0, r1 = o1, r2 = o2
    cdef cnp.npy_bool[::1] ru = uf
    cdef double complex zi, a, b, c
    cdef double r
    with nogil:
        for i in range(n):
            zi = zz[i]
            r = cabs(zi)
            if creal(zi) > UNDERFLOW_RE:
                r0[i] = 0.0
                r1[i] = 0.0
                r2[i] = -1.0 / zi
                ru[i] = 1
            elif r <= SERIES_RADIUS:
                _series(zi, &a, &b, &c)
                r0[i] = a; r1[i] = b; r2[i] = c
            elif r < ASYMPTOTIC_RADIUS:
                _steed(zi, &a, &b, &c)
                r0[i] = a; r1[i] = b; r2[i] = c
            else:
                a = _asym(zi, 0)
                b = _asym(zi, 1)
                r0[i] = a; r1[i] = b; r2[i] = b - 1.0 / zi
    return o0.reshape(shape), o1.reshape(shape), o2.reshape(shape), uf.reshape(shape)


def cheb_eval(double[::1] r, double[::1] breaks, cnp.complex128_t[:, :, ::1] coef):
    """Piecewise Chebyshev series: out[f, i] = sum_k coef[P, f, k] T_k(s) on the panel P
    containing r[i]. Points outside the breaks give NaN."""
    cdef Py_ssize_t n = r.shape[0], npan = breaks.shape[0] - 1
    cdef Py_ssize_t nf = coef.shape[1], deg = coef.shape[2]
    out = np.empty((nf, n), dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] o = out
    cdef Py_ssize_t i, f, k, lo, hi, mid
    cdef double x, s, s2, a, b
    cdef double complex b0, b1, b2
    with nogil:
        for i in range(n):
            x = r[i]
            if not (x >= breaks[0] and x <= breaks[npan]):
                for f in range(nf):
                    o[f, i] = NAN
                continue
            lo = 0
            hi = npan
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if x >= breaks[mid]:
                    lo = mid
                else:
                    hi = mid
            a = breaks[lo]
            b = breaks[lo + 1]
            s = (2.0 * x - a - b) / (b - a)
            s2 = 2.0 * s
            for f in range(nf):
                b1 = 0.0
                b2 = 0.0
                for k in range(deg - 1, 0, -1):
                    b0 = coef[lo, f, k] + s2 * b1 - b2
                    b2 = b1
                    b1 = b0
                o[f, i] = coef[lo, f, 0] + s * b1 - b2
    return out


cdef inline void _clenshaw2(cnp.complex128_t[:, :, ::1] coef, Py_ssize_t P, Py_ssize_t f, double s,
                            double complex* u, double complex* v) noexcept nogil:
    # two series f and f+1 in one pass so their recurrences overlap
    cdef Py_ssize_t k
    cdef double complex a0, a1 = 0.0, a2 = 0.0, b0, b1 = 0.0, b2 = 0.0
    cdef double s2 = 2.0 * s
    for k in range(coef.shape[2] - 1, 0, -1):
        a0 = coef[P, f, k] + s2 * a1 - a2
        b0 = coef[P, f + 1, k] + s2 * b1 - b2
        a2 = a1
        a1 = a0
        b2 = b1
        b1 = b0
    u[0] = coef[P, f, 0] + s * a1 - a2
    v[0] = coef[P, f + 1, 0] + s * b1 - b2


def m_table_eval(double[::1] x, double rs, cnp.complex128_t[:, :, ::1] near,
                 double[::1] breaks, cnp.complex128_t[:, :, ::1] far,
                 double complex a, double complex uc):
    """a K0(c|x|) - U c sign(x) (K1 - 1/z)(c|x|) from the split/panel tables; NaN past the table."""
    cdef Py_ssize_t n = x.shape[0], npan = breaks.shape[0] - 1
    out = np.empty(n, dtype=np.complex128)
    cdef cnp.complex128_t[::1] o = out
    cdef Py_ssize_t i, lo, hi, mid
    cdef double r, s, sg, lr, lo_b, hi_b
    cdef double complex k0v, qv, i0, g0, i1, g1
    with nogil:
        for i in range(n):
            r = fabs(x[i])
            sg = 1.0 if x[i] > 0 else (-1.0 if x[i] < 0 else 0.0)
            if r <= rs:
                s = 2.0 * r / rs - 1.0
                lr = log(r)
                _clenshaw2(near, 0, 0, s, &i0, &g0)
                _clenshaw2(near, 0, 2, s, &i1, &g1)
                k0v = g0 - lr * i0
                qv = g1 + lr * i1
            elif r <= breaks[npan]:
                lo = 0
                hi = npan
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if r >= breaks[mid]:
                        lo = mid
                    else:
                        hi = mid
                lo_b = breaks[lo]
                hi_b = breaks[lo + 1]
                s = (2.0 * r - lo_b - hi_b) / (hi_b - lo_b)
                _clenshaw2(far, lo, 0, s, &k0v, &qv)
            else:
                o[i] = NAN
                continue
            o[i] = a * k0v - uc * sg * qv
    return out
