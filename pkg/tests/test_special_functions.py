import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohilbert import _bessel_py as bp
from cohilbert.errors import DomainError
from cohilbert.special_functions import (
    EULER,
    bessel_k0_k1,
    bessel_k_all,
    k0,
    k0_log_split,
    k0_prime,
    k1,
    k1_log_split,
    k1_minus_pole,
)

from conftest import ORACLES, cval, rel

Z = np.array([cval(p["z"]) for p in ORACLES["bessel"]])
K0 = np.array([cval(p["k0"]) for p in ORACLES["bessel"]])
K1 = np.array([cval(p["k1"]) for p in ORACLES["bessel"]])


def test_k0_matches_high_precision_oracle(backend):
    assert rel(k0(Z), K0) < 1e-10


def test_k0_prime_matches_high_precision_oracle(backend):
    assert rel(k0_prime(Z), -K1) < 1e-10


def test_integral_representation_values():
    for row in ORACLES["bessel_integral"]:
        assert abs(k0(row["z"]) - row["k0"]) <= 1e-13 * row["k0"]
        assert abs(k1(row["z"]) - row["k1"]) <= 1e-13 * row["k1"]


def test_k0_at_one():
    assert abs(k0(1.0) - 0.42102443824070834) < 1e-15
    assert abs(k0(1.0) - ORACLES["k0_at_1"]) < 1e-15


def test_k0_prime_at_one():
    assert abs(k0_prime(1.0) - (-0.6019072301972346)) < 1e-15


def test_small_argument_log_limit():
    # k0(z) + log(z/2) + gamma = (z^2/4)(1 - gamma - log(z/2)) + O(z^4 log z)
    for z in (1e-2, 1e-3, 1e-5, 1e-8):
        rem = complex(k0(z)) + np.log(z / 2.0) + EULER
        lead = z * z / 4 * (1 - EULER - np.log(z / 2.0))
        assert abs(rem - lead) < 1e-14 + z**4 * abs(np.log(z))
    assert abs(EULER - 0.5772156649015329) < 1e-16


def test_large_argument_asymptotics():
    z = 50.0
    scaled = complex(k0(z)) * np.exp(z) * np.sqrt(2 * z / np.pi)
    assert abs(scaled - 1) < 1e-2
    # the first-order truncation error is 9/(128 z^2) = 2.8e-5 at z = 50
    assert abs(scaled - (1 - 1 / (8 * z))) < 3e-5
    assert abs(scaled - (1 - 1 / (8 * z) + 9 / (128 * z * z))) < 1e-6
    assert abs(complex(k0_prime(z) / k0(z)) + 1) < 2e-2


def test_central_difference_at_2_plus_i():
    z, h = 2 + 1j, 1e-5
    fd = (k0(z + h) - k0(z - h)) / (2 * h)
    assert abs(fd - k0_prime(z)) < 1e-8


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 20.0), st.floats(-20.0, 20.0))
def test_derivative_consistency(a, b):
    z, h = complex(a, b), 1e-5 * max(1.0, abs(complex(a, b)))
    fd = (k0(z + h) - k0(z - h)) / (2 * h)
    kp = k0_prime(z)
    assert abs(fd - kp) <= 1e-7 * (1 + abs(kp))


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 300.0), st.floats(-300.0, 300.0))
def test_conjugate_symmetry(a, b):
    z = complex(a, b)
    v = complex(k0(z))
    assert abs(complex(k0(z.conjugate())) - v.conjugate()) <= 1e-14 * abs(v) + 1e-300


@pytest.mark.parametrize("radius,lo,hi", [(bp.SERIES_RADIUS, bp._series, bp._steed),
                                          (bp.ASYMPTOTIC_RADIUS, bp._steed, None)])
def test_regime_switch_continuity(radius, lo, hi):
    ang = np.linspace(-0.49 * np.pi, 0.49 * np.pi, 64)
    z = radius * np.exp(1j * ang)
    a = lo(z)
    if hi is None:
        b = (bp._asymptotic(z)[0], bp._asymptotic(z)[1])
    else:
        b = hi(z)[:2]
    assert rel(a[0], b[0]) < 1e-9
    assert rel(a[1], b[1]) < 1e-9


def test_backends_agree():
    from cohilbert import special_functions as sf

    if sf._compiled is None:
        pytest.skip("compiled kernel not built")
    rng = np.random.default_rng(3)
    z = 10 ** rng.uniform(-6, 2.5, 2000) * np.exp(1j * rng.uniform(-1.5, 1.5, 2000))
    a = sf._compiled.k0k1(z)
    b = bp.k0k1(z)
    for x, y in zip(a[:3], b[:3]):
        assert rel(x, y) < 1e-13


@pytest.mark.parametrize("bad", [0.0, -1.0, 1j, complex("nan"), complex("inf")])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        k0(bad)
    with pytest.raises(DomainError):
        k0_prime(bad)


def test_underflow_flag():
    v, flag = k0(np.array([701.0, 699.0]), with_flag=True)
    assert v[0] == 0 and flag[0]
    assert v[1] != 0 and not flag[1]


def test_pole_free_k1():
    z = np.array([1e-6, 1e-3 + 1e-3j, 0.5, 3 + 2j])
    k0v, k1v, k1m = bessel_k_all(z)
    assert rel(k1m[2:], k1v[2:] - 1 / z[2:]) < 1e-12
    assert abs(k1_minus_pole(1e-6) - (np.log(0.5e-6) + EULER - 0.5) * 0.5e-6) < 1e-15
    a, b = bessel_k0_k1(z)
    assert rel(a, k0v) == 0 and rel(b, k1v) == 0


def test_log_splits_reconstruct():
    z = np.array([1e-4, 0.3 + 0.4j, 1.0, 2 - 3j])
    i0, e = k0_log_split(z)
    assert rel(-np.log(z) * i0 + e, k0(z)) < 1e-13
    i1, f = k1_log_split(z)
    assert rel(np.log(z) * i1 + f, k1_minus_pole(z)) < 1e-12
