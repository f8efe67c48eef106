"""Nystrom realization of the compact operator N = (1/(pi U)) M o P^{-1} on the
Kutta support, its Hilbert-modified determinant and its resolvent."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import CharacteristicValueError, CohilbertError, DomainError
from .flow_kernels import FlowParams, MTable, _lam, c_lambda, d_lambda, m_kernel_array
from .nystrom import KuttaGrid, exterior_far_panels, pinv_rows

DET_FLOOR = 1e-10
RESOLVENT_TOL = 1e-8


class TruncationError(CohilbertError, ArithmeticError):
    """The determinant series has not converged at the requested order."""


@dataclass
class KernelMatrix:
    """K[i, j] acts on nodal values: (K g)_i approximates int N(x_i, y) g(y) dy."""

    grid: object
    entries: np.ndarray
    lam: complex
    weights: np.ndarray
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        K = self.entries
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != self.weights.size:
            raise ValueError("kernel matrix must be square and match the grid")
        if not np.all(np.isfinite(K)):
            raise ArithmeticError("kernel matrix has non-finite entries")

    @property
    def hs_norm(self) -> float:
        """Discrete L2(S) Hilbert-Schmidt norm: K_ij / w_j samples the kernel."""
        return _hs(self.entries, self.weights)

    @property
    def n(self) -> int:
        return self.weights.size


@dataclass
class FredholmSolve:
    lam: complex
    determinant: complex
    resolvent: np.ndarray
    residual_left: float
    residual_right: float
    hs_norm: float


def _matrix(K) -> np.ndarray:
    return K.entries if isinstance(K, KernelMatrix) else np.asarray(K, dtype=complex)


def _weights(K):
    if isinstance(K, KernelMatrix):
        return K.weights
    return np.ones(_matrix(K).shape[0])


# ---------------------------------------------------------------- pointwise kernel


def _quad(fn, a, b, points=None):
    if b <= a:
        return 0.0
    val, _ = integrate.quad(fn, a, b, points=points, limit=400, epsabs=1e-14, epsrel=1e-11, complex_func=True)
    return val


def build_n_kernel(p: FlowParams, x: float, y: float, lam) -> complex:
    """N(x, y) = chi_A(x)/(pi^2 U) * psi(y) * PV int_{|u|>1} M(x-u) |u| / sqrt(u^2-1) du/(u-y).

    Adaptive reference path. The pole at u = y is handled by pairing u = y +- t on a
    symmetric window, which also cancels the log singularity of M when x is inside it.
    """
    lam = _lam(lam)
    x, y = float(x), float(y)
    if abs(x) <= 1.0 or abs(y) <= 1.0:
        raise DomainError("N is defined for |x| > 1 and |y| > 1")
    if abs(x) > p.kutta_extent:
        return 0j
    c = c_lambda(p, lam)
    umax = p.kutta_extent + 1.0 + 40.0 / c.real

    def F(u):
        u = np.asarray(u, dtype=float)
        d = x - u
        d = np.where(d == 0.0, 1e-300, d)
        return m_kernel_array(p, d, lam) * np.abs(u) / np.sqrt(u * u - 1.0)

    total = 0j
    for s in (-1.0, 1.0):
        # substitution |u| = 1 + v^2 removes the endpoint singularity
        def Gpv(v, s=s):
            # F(u) du with the factor v cancelled against sqrt(u^2 - 1)
            u = s * (1.0 + v * v)
            d = x - u
            d = np.where(d == 0.0, 1e-300, d)
            return m_kernel_array(p, d, lam) * 2.0 * (1.0 + v * v) / np.sqrt(2.0 + v * v) / (u - y)

        vmax = np.sqrt(umax - 1.0)
        vx = np.sqrt(abs(x) - 1.0) if np.sign(x) == s else None
        if np.sign(y) != s:
            total += _quad(Gpv, 0.0, vmax, points=[vx] if vx is not None else None)
            continue
        # PV window in u around y, kept inside (1, umax)
        ay = abs(y)
        delta = min(0.5 * (ay - 1.0), 0.25)
        if vx is not None and abs(x) != ay:
            delta = min(delta, 0.5 * abs(abs(x) - ay))
        lo, hi = ay - delta, ay + delta

        def paired(t, s=s):
            up, um = s * (ay + t), s * (ay - t)
            # u - y = +-s t on the two branches
            return (F(np.array([up]))[0] - F(np.array([um]))[0]) * s / t

        total += _quad(paired, 0.0, delta, points=None)
        vlo, vhi = np.sqrt(lo - 1.0), np.sqrt(hi - 1.0)
        brk = [vx] if vx is not None else []
        total += _quad(Gpv, 0.0, vlo, points=[b for b in brk if 0.0 < b < vlo] or None)
        total += _quad(Gpv, vhi, vmax, points=[b for b in brk if vhi < b < vmax] or None)
    # beyond umax M has decayed to its algebraic part U/(x - u); the tail is O(1/umax)
    for s in (-1.0, 1.0):
        total += _quad(lambda u, s=s: F(s * u) / (s * u - y), umax, np.inf)
    return complex(total * np.sqrt(y * y - 1.0) / abs(y) / (np.pi**2 * p.U))


# ---------------------------------------------------------------- matrix assembly


def _u_layout(grid: KuttaGrid, c: complex):
    far = exterior_far_panels(grid.A, c, grid.p)
    uf, wf = grid.fixed_u
    u_far = np.concatenate([q.x for q in far])
    w_far = np.concatenate([q.w for q in far])
    u = np.concatenate([uf, u_far])
    wu = np.concatenate([wf, w_far])
    pin = np.vstack([grid.fixed_pinv, pinv_rows(grid.support, u_far)])
    return far, u, wu, pin


def m_table(p: FlowParams, grid: KuttaGrid, lam, far) -> MTable:
    reach = max([abs(q.to_x(q.b)) for q in far if q.kind == "exterior"] + [2.0 * grid.A])
    return MTable(p, lam, reach + grid.A)


def m_matrix(p: FlowParams, grid: KuttaGrid, lam, u, wu, table: MTable | None = None):
    """Rows of the M-integral over the u-grid: (Mq h)_i = int M(x_i - u) h(u) du."""
    lam = complex(lam)
    M = table if table is not None else (lambda d: m_kernel_array(p, d, lam))
    D = grid.nodes[:, None] - u[None, :]
    D = np.where(D == 0.0, 1.0, D)  # coincident points belong to the near field
    Mq = M(D) * wu[None, :]
    nf = grid.fixed_near
    if nf is not None:
        Dn = grid.nodes[nf.tgt][:, None] - nf.xq
        nf.apply(Mq, M(np.where(Dn == 0.0, 1.0, Dn)))  # zero-weight padding nodes
    return Mq


def assemble_n_matrix(p: FlowParams, grid: KuttaGrid, lam) -> KernelMatrix:
    lam = _lam(lam)
    if abs(grid.A - p.kutta_extent) > 1e-14:
        raise DomainError("grid and flow parameters use different Kutta extents")
    far, u, wu, pin = _u_layout(grid, c_lambda(p, lam))
    Mq = m_matrix(p, grid, lam, u, wu, m_table(p, grid, lam, far))
    K = (Mq @ pin) / (np.pi * p.U)
    return KernelMatrix(grid, K, lam, grid.weights,
                        {"u": u, "u_weights": wu, "pinv": pin, "m_rows": Mq, "det_factor": jump_factor(p, grid, lam)})


def jump_factor(p: FlowParams, grid: KuttaGrid, lam) -> complex:
    """Correction for the diagonal jump of N.

    Near y = x the kernel behaves like a sign(x - y) on each side of the chord, with
    a = (lam + U d(lam)) / 2U. That part has singular values decaying like 1/k, so
    every trace tr(K^k) converges slowly. The sign kernel on an interval of length L
    has det2(I + a S) = cosh(a L) exactly; the factor swaps the discrete value of
    this determinant, taken in the same basis, for the exact one.
    """
    lam = complex(lam)
    a = (lam + p.U * d_lambda(p, lam)) / (2.0 * p.U)
    S = grid.jump_matrix
    sign, logabs = np.linalg.slogdet(np.eye(S.shape[0]) + a * S)
    if sign == 0:
        return complex(np.inf)
    log_disc = np.log(sign) + logabs - a * np.trace(S)
    return complex(np.exp(2.0 * np.log(np.cosh(a * (grid.A - 1.0))) - log_disc))


# ---------------------------------------------------------------- determinants


def determinant_matrix(K) -> complex:
    """det(I + K) exp(-tr K), accumulated in log form.

    Flow kernels carry a jump correction factor (see ``jump_factor``) that is applied
    here; plain matrices are taken as they are.
    """
    A = _matrix(K)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    sign, logabs = np.linalg.slogdet(np.eye(n) + A)
    if sign == 0:
        return 0j
    tr = np.trace(A)
    corr = K.extra.get("det_factor", 1.0) if isinstance(K, KernelMatrix) else 1.0
    return complex(sign * np.exp(logabs - tr) * corr)


@dataclass
class SeriesDeterminant:
    value: complex
    terms: list
    bound: float


def _zero_diag_minor_sums(A):
    """delta_2 and delta_3 by direct expansion of 2x2 and 3x3 zero-diagonal minors.

    Index tuples run over all nodes (repeats included): the minor's own diagonal is
    zeroed while a repeated node still contributes K_ii off the minor's diagonal.
    """
    d2 = -0.5 * np.sum(A * A.T)  # det [[0, a_ij], [a_ji, 0]]
    # det [[0,a_ij,a_ik],[a_ji,0,a_jk],[a_ki,a_kj,0]] = a_ij a_jk a_ki + a_ik a_ji a_kj
    s1 = np.einsum("ij,jk,ki->", A, A, A)
    s2 = np.einsum("ik,ji,kj->", A, A, A)
    return d2, (s1 + s2) / 6.0


def _hs(A, w):
    return float(np.sqrt(np.sum(np.abs(A) ** 2 * (w[:, None] / w[None, :])))) if A.size else 0.0


def determinant_series(K, m_max: int = 8, tol: float = 1e-6) -> SeriesDeterminant:
    """1 + sum_{m<=m_max} delta_m of the Hilbert-modified series.

    delta_1 = 0; delta_2, delta_3 come from explicit zero-diagonal minors, higher
    terms from the Plemelj-Smithies recursion on traces of powers.
    """
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    A = _matrix(K)
    hs = _hs(A, _weights(K))
    deltas = [1.0 + 0j, 0j]
    if A.size and m_max >= 2:
        d2, d3 = _zero_diag_minor_sums(A)
        traces = [0j, 0j]
        P = A @ A
        for k in range(2, m_max + 1):
            traces.append(np.trace(P))
            P = P @ A
        for m in range(2, m_max + 1):
            if m == 2:
                deltas.append(complex(d2))
            elif m == 3:
                deltas.append(complex(d3))
            else:
                acc = sum((-1) ** (k + 1) * traces[k] * deltas[m - k] for k in range(2, m + 1))
                deltas.append(complex(acc / m))
    else:
        deltas += [0j] * (m_max - 1)
    value = complex(sum(deltas))
    bound = 0.0
    for m in range(m_max + 1, m_max + 400):
        b = (np.e / m) ** (m / 2) * hs**m
        bound += b
        if b <= 1e-17 * bound or b == 0.0:
            break
    if bound > tol:
        raise TruncationError(f"series bound {bound:.3e} exceeds tolerance {tol:.1e}")
    return SeriesDeterminant(value, deltas[1:], bound)


# ---------------------------------------------------------------- resolvent


def resolvent(K, det_floor: float = DET_FLOOR, resolvent_tol: float = RESOLVENT_TOL) -> FredholmSolve:
    A = _matrix(K)
    lam = K.lam if isinstance(K, KernelMatrix) else None
    det = determinant_matrix(A)
    if abs(det) <= det_floor:
        raise CharacteristicValueError(f"lambda = {lam} is a characteristic value (|D| = {abs(det):.3e})", lam, det)
    n = A.shape[0]
    I = np.eye(n)
    H = np.linalg.solve(I + A, A)
    inf = lambda X: float(np.max(np.sum(np.abs(X), axis=1))) if X.size else 0.0
    rl = inf(H + A @ H - A)
    rr = inf(H + H @ A - A)
    hs = _hs(A, _weights(K))
    limit = resolvent_tol * (1.0 + inf(A))
    if max(rl, rr) > limit:
        raise ArithmeticError(f"resolvent residuals {rl:.2e}, {rr:.2e} exceed {limit:.2e}")
    return FredholmSolve(lam, det, H, rl, rr, hs)


# ---------------------------------------------------------------- scans


def worker_count() -> int:
    env = os.environ.get("COHILBERT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


@dataclass
class ScanSample:
    lam: complex
    determinant: complex
    hs_norm: float
    candidate: bool = False


def characteristic_scan(p: FlowParams, grid: KuttaGrid, sigma: float, eta_range, n_samples: int,
                        det_floor: float = DET_FLOOR, dip: float = 1e-3) -> list[ScanSample]:
    """Sample D_N along Re lam = sigma; flag advisory zero candidates."""
    if not (p.sigma1 - 1e-12 <= sigma <= p.sigma2 + 1e-12):
        raise DomainError("scan abscissa must lie in [sigma1, sigma2]")
    if n_samples < 1:
        raise ValueError("need at least one sample")
    lo, hi = eta_range
    if n_samples == 1:
        etas = np.array([0.5 * (lo + hi)])
    elif lo == -hi and n_samples % 2:
        etas = symmetric_etas(hi, n_samples)
    else:
        etas = np.linspace(lo, hi, n_samples)
    lams = [complex(sigma, e) for e in etas]

    def one(lam):
        K = assemble_n_matrix(p, grid, lam)
        return ScanSample(lam, determinant_matrix(K), K.hs_norm)

    with ThreadPoolExecutor(worker_count()) as ex:
        out = list(ex.map(one, lams))
    for s, flag in zip(out, flag_candidates([s.determinant for s in out], det_floor, dip)):
        s.candidate = flag
    return out


def symmetric_etas(eta_max: float, n: int) -> np.ndarray:
    """Odd-length uniform grid on [-eta_max, eta_max] with exact mirror symmetry."""
    if n < 1 or n % 2 == 0:
        raise ValueError("need an odd number of samples")
    half = np.linspace(0.0, eta_max, n // 2 + 1)
    return np.concatenate([-half[:0:-1], half])


def flag_candidates(dets, det_floor: float = DET_FLOOR, dip: float = 1e-3) -> list[bool]:
    """Samples at or below the floor, and interior local minima of |D| below ``dip``."""
    mod = np.abs(np.asarray(dets, dtype=complex))
    n = mod.size
    flags = []
    for i in range(n):
        local_min = (i == 0 or mod[i] <= mod[i - 1]) and (i == n - 1 or mod[i] <= mod[i + 1])
        flags.append(bool(mod[i] <= det_floor or (local_min and n > 2 and mod[i] < dip)))
    return flags


__all__ = [
    "DET_FLOOR",
    "RESOLVENT_TOL",
    "FredholmSolve",
    "KernelMatrix",
    "ScanSample",
    "SeriesDeterminant",
    "TruncationError",
    "assemble_n_matrix",
    "build_n_kernel",
    "characteristic_scan",
    "determinant_matrix",
    "determinant_series",
    "flag_candidates",
    "symmetric_etas",
    "m_matrix",
    "resolvent",
]
