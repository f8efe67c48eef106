"""Regenerate tests/oracle_values.json with mpmath (arbitrary precision).

Run: python3 tests/make_oracles.py. The package itself is not imported, so the
frozen values are independent of the code under test.
"""
import json
import pathlib

import mpmath as mp
import numpy as np

mp.mp.dps = 30
OUT = pathlib.Path(__file__).with_name("oracle_values.json")

MACH, A_INF, A = 0.5, 1.0, 2.0
U = MACH * A_INF
BETA = 1 - MACH**2


def cplx(z):
    return [float(mp.re(z)), float(mp.im(z))]


def flow(lam):
    d = lam * MACH**2 / (U * BETA)
    r = lam * MACH / (U * mp.sqrt(BETA))
    c = r / mp.sqrt(BETA)
    return d, r, c


def r_kernel(x, lam):
    d, _, c = flow(lam)
    ax = abs(x)
    return (lam + U * d) * mp.besselk(0, c * ax) - U * c * mp.sign(x) * mp.besselk(1, c * ax)


def m_kernel(x, lam):
    return r_kernel(x, lam) + U / x


def bessel_points():
    rng = np.random.default_rng(20240611)
    re = 10 ** rng.uniform(-3, 2, 200)
    im = rng.uniform(-50, 50, 200)
    pts = []
    for a, b in zip(re, im):
        z = mp.mpc(a, b)
        pts.append({"z": [float(a), float(b)], "k0": cplx(mp.besselk(0, z)), "k1": cplx(mp.besselk(1, z))})
    return pts


def bessel_integral_check():
    """K0 and K1 from the integral representation at a few real points."""
    # semi-infinite ranges are cut where integrands drop below 1e-30 relative
    out = []
    for z in (0.5, 1.0, 3.0, 10.0):
        k0 = mp.quad(lambda t: mp.exp(-z * mp.cosh(t)), [0, 2, 6, 12])
        k1 = mp.quad(lambda t: mp.cosh(t) * mp.exp(-z * mp.cosh(t)), [0, 2, 6, 12])
        out.append({"z": z, "k0": float(k0), "k1": float(k1)})
    return out


def downwash_hat(lam, omega=0.5, tau=1.0, t0=6.0):
    f = lambda t: mp.exp(-lam * t) * mp.sin(omega * t) * mp.exp(-((t - t0) ** 2) / (2 * tau**2))  # noqa: E731
    return mp.quad(f, [0, t0 - 6, t0, t0 + 6, t0 + 14])


def f_a(x, lam):
    d, _, _ = flow(lam)
    w = downwash_hat(lam)
    return -mp.quad(lambda y: mp.exp(-d * y) * r_kernel(x - y, lam) * w, [-1, 1]) / mp.pi, w


def n_kernel(x, y, lam):
    """N(x, y) with the PV at u = y taken by symmetric pairing (the excision limit)."""
    def F(u):
        return m_kernel(x - u, lam) * abs(u) / mp.sqrt(u * u - 1)

    def Fv(sign, v):
        # F(u) du with u = sign (1 + v^2); the factor v cancels against sqrt(u^2 - 1)
        u = sign * (1 + v * v)
        return m_kernel(x - u, lam) * 2 * (1 + v * v) / mp.sqrt(2 + v * v) / (u - y)

    total = mp.mpc(0)
    total += mp.quad(lambda v: Fv(-1, v), [0, 1, 3, 6, 9])
    delta = mp.mpf("0.25")
    lo, hi = y - delta, y + delta
    vx = mp.sqrt(x - 1)
    total += mp.quad(lambda v: Fv(1, v), [0, vx, mp.sqrt(lo - 1)])
    total += mp.quad(lambda t: (F(y + t) - F(y - t)) / t, [0, delta])
    total += mp.quad(lambda v: Fv(1, v), [mp.sqrt(hi - 1), 2, 4, 6, 9])
    # |u| > 82: R is below 1e-46 there, so M(x - u) = U/(x - u) to working precision
    for sign in (-1, 1):
        total += mp.quad(lambda v: U / (x - sign * (1 + v * v)) * 2 * (1 + v * v) / mp.sqrt(2 + v * v)
                         / (sign * (1 + v * v) - y), [9, mp.inf])
    return total * mp.sqrt(y * y - 1) / abs(y) / (mp.pi**2 * U)


def m_integrability(x, lam):
    """int_0^80 |M(x - sqrt(t^2 + 1))| dt; the full range diverges like U log t."""
    t0 = mp.sqrt(x * x - 1)
    return mp.quad(lambda t: abs(m_kernel(x - mp.sqrt(t * t + 1), lam)), [0, t0, 2, 5, 20, 40, 80])


def main():
    import sys
    import time

    start = time.time()

    def log(msg):
        print(f"{time.time() - start:7.1f}s {msg}", file=sys.stderr, flush=True)

    lam = mp.mpc(1, 1)
    if "--kernel-only" in sys.argv:
        data = json.loads(OUT.read_text())
        data["n_kernel"] = {"x": 1.5, "y": 2.0, "lam": [1.0, 1.0],
                            "value": cplx(n_kernel(mp.mpf("1.5"), mp.mpf(2), lam))}
        OUT.write_text(json.dumps(data, indent=1) + "\n")
        return
    data = {"bessel": bessel_points()}
    log("bessel")
    data["bessel_integral"] = bessel_integral_check()
    data["k0_at_1"] = float(mp.besselk(0, 1))
    data["k1_at_1"] = float(mp.besselk(1, 1))
    log("integral")
    fa, w = f_a(mp.mpf("1.5"), lam)
    data["f_a_plunge"] = {"x": 1.5, "lam": [1.0, 1.0], "value": cplx(fa), "w_hat": cplx(w)}
    log("f_a")
    data["w_hat_plunge"] = [{"lam": [s, e], "value": cplx(downwash_hat(mp.mpc(s, e)))}
                            for s, e in ((0.5, 0.0), (0.6, 1.0), (0.75, -3.0), (1.0, 6.0))]
    log("w_hat")
    data["m_integrability"] = {"x": 1.5, "lam": [1.0, 1.0], "value": float(m_integrability(mp.mpf("1.5"), lam))}
    log("m_integrability")
    data["n_kernel"] = {"x": 1.5, "y": 2.0, "lam": [1.0, 1.0],
                        "value": cplx(n_kernel(mp.mpf("1.5"), mp.mpf(2), lam))}
    log("n_kernel")
    OUT.write_text(json.dumps(data, indent=1) + "\n")


if __name__ == "__main__":
    main()
