"""The eight acceptance criteria. Each test records a PASS/FAIL line in
``conftest.ACCEPTANCE``; the lines are printed in the terminal summary."""
import json
import os
import time

import numpy as np
import pytest
from scipy import integrate

from cohilbert.bvp_pipeline import DownwashSpec, inverse_laplace_phi, solve_lambda, solve_line, weighted_norms
from cohilbert.cli import main
from cohilbert.flow_kernels import FlowParams
from cohilbert.fredholm import (
    assemble_n_matrix,
    characteristic_scan,
    determinant_matrix,
    determinant_series,
    resolvent,
)
from cohilbert.nystrom import KuttaGrid
from cohilbert.singular_transforms import (
    FiniteGrid,
    GridFunction,
    _direct_pv,
    cofinite_hilbert,
    cofinite_hilbert_inverse_grid,
    finite_hilbert,
    finite_hilbert_inverse_grid,
    theta,
    theta_star,
    weighted_lp_norm,
)
from cohilbert.special_functions import k0, k0_prime

from conftest import ACCEPTANCE, ORACLES, cval, rel
from test_bvp_pipeline import PHI_PROBES, phi_pde_residuals
from test_flow_kernels import fourier_rhs, laplace_residual
from test_fredholm import small_kernel, trapezoid
from test_singular_transforms import weighted_norm_quad

P = FlowParams()
W = DownwashSpec(u_free=P.U)


def record(k, checks, started, budget, note=""):
    """Store the status line for criterion k and return the failed check names."""
    elapsed = time.perf_counter() - started
    checks = dict(checks)
    checks[f"runtime {elapsed:.1f}s < {budget:g}s"] = elapsed < budget
    failed = [name for name, ok in checks.items() if not ok]
    status = "PASS" if not failed else "FAIL"
    detail = "; ".join(f"{name}: {'ok' if ok else 'FAILED'}" for name, ok in checks.items())
    line = f"CRITERION {k}: {status} ({detail}){' ' + note if note else ''}"
    ACCEPTANCE[k] = line
    print(line)
    return failed


def test_criterion_1_bessel_oracle():
    t = time.perf_counter()
    z = np.array([cval(p["z"]) for p in ORACLES["bessel"]])
    e0 = rel(k0(z), np.array([cval(p["k0"]) for p in ORACLES["bessel"]]))
    e1 = rel(k0_prime(z), -np.array([cval(p["k1"]) for p in ORACLES["bessel"]]))
    assert not record(1, {f"k0 rel err {e0:.1e} <= 1e-10 on {z.size} points": e0 <= 1e-10,
                          f"k0' rel err {e1:.1e} <= 1e-10": e1 <= 1e-10}, t, 10)


def test_criterion_2_transform_calculus():
    t = time.perf_counter()
    checks = {}
    G64, G128, G256 = FiniteGrid(64), FiniteGrid(128), FiniteGrid(256)

    f = GridFunction(G64, [0.4, -0.3, 0.2, 0.1], "sqrt")
    h = theta(f)
    rt = np.array_equal(theta_star(h).values, f.values) and np.array_equal(theta(theta_star(h)).values, h.values)
    checks["theta/theta* round trips exact"] = rt
    xs = np.concatenate([-np.geomspace(1.01, 30, 8), np.geomspace(1.01, 30, 8)])

    fi = GridFunction(G256, [2.0, 0.3, -0.2, 0.1])
    for p in (1.32, 2.0):
        direct = weighted_norm_quad(theta(fi), p)
        side = integrate.quad(lambda s: abs(fi(s)) ** p, -1, 1, epsabs=1e-15, epsrel=1e-13)[0] ** (1 / p)
        err = max(abs(direct - side), abs(weighted_lp_norm(theta(fi), p) - direct))
        checks[f"isometry p={p} {err:.1e}"] = err < 1e-9

    rng = np.random.default_rng(5)
    worst = 0.0
    pts = np.array([-4.0, -1.3, 1.1, 2.5])
    for _ in range(50):
        c = rng.normal(size=5) / (1 + np.arange(5)) ** 2
        g = GridFunction(G64, c, "sqrt")
        lhs = cofinite_hilbert(theta(g), pts, method="direct")
        worst = max(worst, np.max(np.abs(lhs + finite_hilbert(g, 1 / pts) / pts)) / (1 + np.max(np.abs(c))))
    checks[f"diagram on 50 random f {worst:.1e}"] = worst <= 1e-8

    g = GridFunction.from_callable(G128, lambda y: np.cos(np.pi * y))
    x = np.linspace(-0.97, 0.97, 41)
    e = np.max(np.abs(finite_hilbert(finite_hilbert_inverse_grid(g), x) - np.cos(np.pi * x)))
    checks[f"T T^-1 on 128 nodes {e:.1e}"] = e <= 1e-6

    fc = theta(GridFunction.from_callable(G256, lambda s: np.cos(np.pi * s) * (1 - s * s)))
    x = np.concatenate([-np.geomspace(1.001, 100, 20), np.geomspace(1.001, 100, 20)])
    e = np.max(np.abs(cofinite_hilbert(cofinite_hilbert_inverse_grid(fc), x) - fc(x))) / np.max(np.abs(fc(x)))
    checks[f"P P^-1 {e:.1e}"] = e <= 1e-6

    h = theta(GridFunction(G256, [1.0], "invsqrt"))
    e = np.max(np.abs(cofinite_hilbert(h, xs)))
    checks[f"P[sign(x)/sqrt(x^2-1)] {e:.1e}"] = e <= 1e-6
    literal = _direct_pv(lambda y: 1 / np.sqrt(y * y - 1), 2.0)
    checks[f"P[1/sqrt(x^2-1)](2) = {literal:.5f} (literal even profile)"] = abs(literal) <= 1e-6

    failed = record(2, checks, t, 30,
                    "The even profile 1/sqrt(x^2-1) is not in the kernel of P; the odd profile is.")
    assert all("literal even profile" in name for name in failed)


@pytest.mark.xfail(strict=True, reason="1/sqrt(x^2-1) is not annihilated; only sign(x)/sqrt(x^2-1) is")
def test_criterion_2_literal_even_profile():
    assert abs(_direct_pv(lambda y: 1 / np.sqrt(y * y - 1), 2.0)) <= 1e-6


def test_criterion_3_fourier_identity():
    from cohilbert.flow_kernels import s_kernel

    t = time.perf_counter()
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(10):
        x, z = rng.uniform(-2, 2), rng.uniform(0.2, 2)
        lam = complex(rng.uniform(0.3, 2), rng.uniform(-5, 5))
        lhs = -s_kernel(P, x, z, lam)
        worst = max(worst, abs(lhs - fourier_rhs(P, x, z, lam)) / abs(lhs))
    assert not record(3, {f"10 random points, max rel {worst:.1e} <= 1e-6": worst <= 1e-6}, t, 60)


def test_criterion_4_pde_residuals():
    t = time.perf_counter()
    checks = {}
    P2 = FlowParams(a_inf=4.0, mach=0.5)
    orders = [np.log2(abs(laplace_residual(P2, x, z, lam, 2e-2)) / abs(laplace_residual(P2, x, z, lam, 1e-2)))
              for x, z, lam in [(0.3, 0.7, 1 + 2j), (-1.2, 0.3, 0.5 - 1j), (2.0, 1.5, 2 + 4j)]]
    checks[f"s_kernel order {min(orders):.2f}"] = min(orders) >= 1.9

    grid = KuttaGrid(2.0, 64)
    s = solve_lambda(P, W, grid, 0.5 + 1j, diagnostics=False)
    from test_bvp_pipeline import laplace_residual as xi_residual

    o = np.log2(abs(xi_residual(s, 0.3, 0.8, 1e-3)) / abs(xi_residual(s, 0.3, 0.8, 5e-4)))
    checks[f"xi order {o:.2f}"] = o >= 1.9

    line = solve_line(P, W, grid, 0.6, 20.0, 201)
    po = [np.log2(r1 / r2) for r1, r2 in (phi_pde_residuals(line, *q) for q in PHI_PROBES)]
    checks[f"phi order at 3 probes {min(po):.2f}"] = min(po) >= 1.9
    assert not record(4, checks, t, 120)


def test_criterion_5_fredholm_engine():
    t = time.perf_counter()
    checks = {}
    errs = []
    for n in (100, 200, 400):
        _, w = trapezoid(n)
        errs.append(abs(determinant_matrix(np.ones((n, 1)) * w[None, :]) - 2 / np.e))
    # the rule is exact for a constant kernel, so refinement must hold the error at roundoff
    checks[f"2/e at n=100,200,400 max err {max(errs):.1e}"] = max(errs) <= 1e-6

    rng = np.random.default_rng(3)
    ok = True
    for n in (5, 20, 40):
        A = small_kernel(rng, n, 0.3)
        sd = determinant_series(A, m_max=8)
        ok &= abs(sd.value - determinant_matrix(A)) <= sd.bound + 1e-13
    checks["series vs matrix within bound, hs 0.3"] = ok

    A = small_kernel(rng, 40, 0.2)
    F = resolvent(A)
    checks[f"resolvent residuals {max(F.residual_left, F.residual_right):.1e}"] = \
        max(F.residual_left, F.residual_right) <= 1e-8
    S, term = np.zeros_like(A), A.copy()
    for _ in range(30):
        S, term = S + term, -term @ A
    e = np.max(np.abs(F.resolvent - S))
    checks[f"Neumann cross-check {e:.1e}"] = e <= 1e-12
    assert not record(5, checks, t, 30)


def test_criterion_6_end_to_end():
    t = time.perf_counter()
    checks = {}
    grid = KuttaGrid(2.0, 256)
    scan = characteristic_scan(P, grid, 0.6, (-20.0, 20.0), 41)
    checks["zero-free line"] = not any(s.candidate for s in scan)

    line = solve_line(P, W, grid, 0.6, 20.0, 201, diagnostics=True)
    kutta = max(s.kutta_residual for s in line)
    tang = max(s.tangency_residual for s in line)
    checks[f"Kutta max {kutta:.1e} <= 1e-3"] = kutta <= 1e-3
    checks[f"tangency max {tang:.1e} <= 5e-3"] = tang <= 5e-3

    other = solve_line(P, W, grid, 0.75, 20.0, 201)
    rng = np.random.default_rng(7)
    pts = np.column_stack([rng.uniform(-1.5, 1.5, 5), rng.uniform(0.2, 1.0, 5), rng.uniform(4.0, 10.0, 5)])

    def at(solves):
        f = inverse_laplace_phi(P, solves, pts[:, 0], pts[:, 1], pts[:, 2]).phi
        return np.array([f[k, k, k] for k in range(5)])

    a, b = at(line), at(other)
    gap = np.max(np.abs(a - b)) / np.max(np.abs(a))
    checks[f"sigma independence {gap:.1e} <= 1e-3"] = gap <= 1e-3

    norms = [weighted_norms(solve_lambda(P, W, grid, complex(P.sigma1, e), diagnostics=False), (1.3,))[1.3]
             for e in (1.0, 2.0, 4.0, 8.0)]
    checks["p=1.3 norms finite, decreasing in eta"] = bool(np.all(np.isfinite(norms))) and all(
        x > y for x, y in zip(norms, norms[1:]))
    assert not record(6, checks, t, 600)


def test_criterion_7_discrete_bounds():
    t = time.perf_counter()
    checks = {}
    grid = KuttaGrid(2.0, 128)
    scan = characteristic_scan(P, grid, 0.6, (-12.0, 12.0), 25)
    ok = all(abs(s.determinant) <= np.exp(s.hs_norm**2 / 2) * 1.01 for s in scan)
    checks[f"|D| <= exp(hs^2/2)*1.01 on {len(scan)} scan samples"] = ok

    rng = np.random.default_rng(9)
    K = assemble_n_matrix(P, grid, 0.75 + 1j)
    D, hs, w = determinant_matrix(K), K.hs_norm, K.weights
    T = K.entries / w[None, :]
    H = resolvent(K).resolvent / w[None, :]
    alpha = np.sqrt(np.sum(np.abs(T) ** 2 * w[None, :], axis=1))
    beta = np.sqrt(np.sum(np.abs(T) ** 2 * w[:, None], axis=0))
    ok = all(abs(H[i, j] * D) <= np.exp(hs * hs / 2) * (abs(T[i, j]) + np.sqrt(np.e) * alpha[i] * beta[j])
             for i, j in rng.integers(0, K.n, size=(10, 2)))
    checks["first-minor bound on 10 random entries"] = ok

    hs = [assemble_n_matrix(P, grid, lam).hs_norm for lam in (0.05, 0.1, 0.2, 0.4)]
    checks["hs_norm increasing over small lambda"] = all(x < y for x, y in zip(hs, hs[1:]))
    assert not record(7, checks, t, 60)


def test_criterion_8_cli(tmp_path):
    t = time.perf_counter()
    checks = {}
    out = tmp_path / "out"
    out.mkdir()
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"grid_size = 128\neta_max = 12\neta_samples = 61\noutput_dir = {out}\n")
    first = main(["solve", "--config", str(cfg)])
    one_solve = time.perf_counter() - t
    a = {f: (out / f).read_bytes() for f in sorted(os.listdir(out))}
    second = main(["solve", "--config", str(cfg)])
    b = {f: (out / f).read_bytes() for f in sorted(os.listdir(out))}
    checks["two solves byte-identical"] = first == second == 0 and a == b and len(a) == 4
    checks["manifest PASS"] = json.loads(a["manifest.json"])["status"] == "PASS"

    bad = tmp_path / "bad.cfg"
    bad.write_text(f"grid_size = 100\noutput_dir = {out}\n")
    checks["config error exits 2"] = main(["scan", "--config", str(bad)]) == 2
    empty = tmp_path / "empty"
    empty.mkdir()
    char = tmp_path / "char.cfg"
    char.write_text(f"grid_size = 64\neta_max = 4\neta_samples = 3\ndet_floor = 1e300\noutput_dir = {empty}\n")
    checks["characteristic value exits 3, no files"] = main(["solve", "--config", str(char)]) == 3 and not os.listdir(empty)
    assert not record(8, checks, t, 60 + one_solve)
