import math

import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given, settings
from hypothesis import strategies as st

from biphoton.specfun import SpecialFunctionDomainError, dawson, erfi_kernel, faddeeva
from oracles import dawson_series, erfi_series, faddeeva_series

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_w_at_origin():
    assert faddeeva(0) == 1 + 0j


def test_w_at_i():
    assert faddeeva(1j) == pytest.approx(0.4275835761558070, rel=1e-14)
    assert faddeeva(1j).real == pytest.approx(math.e * math.erfc(1), rel=1e-14)


@pytest.mark.parametrize("z", [0.3 + 0.1j, 2.5 + 0.01j, 5.0 + 0.0j, 7.0 + 3.0j, 0.1 + 9.0j,
                               -3.2 + 1.7j, 6.29 + 0.2j, 1.0 + 4.39j, 9.5 + 2.5j])
def test_w_against_series_oracle(z):
    assert abs(faddeeva(z) - faddeeva_series(z)) <= 1e-12 * abs(faddeeva_series(z))


@given(finite, st.floats(0, 10))
def test_schwarz_reflection(x, y):
    z = complex(x, y)
    assert faddeeva(-z.conjugate()) == pytest.approx(np.conj(faddeeva(z)), rel=1e-14, abs=0)


@given(finite, finite)
def test_w_plus_w_minus(x, y):
    z = complex(x, y)
    if abs(z) > 10:
        return
    wp, wm = faddeeva(z), faddeeva(-z)
    rhs = 2 * np.exp(-z * z)
    # relative to the summands: the sum cancels when |exp(-z^2)| << |w(z)|
    assert abs(wp + wm - rhs) <= 1e-9 * max(abs(rhs), abs(wp), abs(wm))


def test_w_matches_scipy_over_upper_half_plane():
    rng = np.random.default_rng(7)
    z = rng.uniform(-60, 60, 20000) + 1j * rng.uniform(0, 60, 20000)
    ref = sc.wofz(z)
    assert np.max(np.abs(faddeeva(z) - ref) / np.abs(ref)) < 1e-12


def test_vectorised_shape():
    z = np.zeros((3, 4), dtype=complex)
    assert faddeeva(z).shape == (3, 4) and dawson(z).shape == (3, 4)


@pytest.mark.parametrize("fn", [faddeeva, dawson, erfi_kernel])
@pytest.mark.parametrize("bad", [float("nan"), complex(float("inf"), 0), complex(0, float("-inf"))])
def test_non_finite_rejected(fn, bad):
    with pytest.raises(SpecialFunctionDomainError):
        fn(bad)


def test_dawson_basics():
    assert dawson(0) == 0
    assert dawson(0.92413887300).real == pytest.approx(0.54104422463518, abs=1e-13)


@given(st.floats(-30, 30))
def test_dawson_odd(x):
    assert dawson(-x) == pytest.approx(-dawson(x), abs=1e-300, rel=1e-15)


def test_dawson_series_oracle_real_axis():
    xs = np.linspace(-4, 4, 161)
    ref = np.array([dawson_series(x) for x in xs])
    assert np.max(np.abs(dawson(xs).real - ref)) < 1e-11


def test_dawson_complex_against_erfi():
    for z in [0.2 + 0.3j, 1.5 - 0.7j, -2.0 + 1.0j, 0.001 + 0.002j, 3.0 - 2.0j]:
        ref = math.sqrt(math.pi) / 2 * np.exp(-z * z) * erfi_series(z)
        assert abs(dawson(z) - ref) <= 1e-12 * abs(ref)


def test_erfi_kernel_values():
    assert erfi_kernel(0) == pytest.approx(1j * math.pi, rel=1e-15)
    erfi1 = 1.6504257587975429
    assert erfi_series(1.0).real == pytest.approx(erfi1, rel=1e-15)
    expected = math.pi * math.exp(-1) * erfi1 + 1j * math.pi * math.exp(-1)
    assert erfi_kernel(1.0) == pytest.approx(expected, rel=1e-13)
    assert erfi_kernel(1.0) == pytest.approx(1.9074421882 + 1.1557273498j, abs=1e-10)


@settings(max_examples=200)
@given(st.floats(-8, 8), st.floats(-5, 0))
def test_erfi_kernel_two_paths(x, y):
    a = complex(x, y)
    alt = 2 * math.sqrt(math.pi) * dawson(a) + 1j * math.pi * np.exp(-a * a)
    k = erfi_kernel(a)
    assert abs(k - alt) <= 1e-9 * max(abs(k), 1e-300) + 1e-12 * abs(np.exp(-a * a))


def test_erfi_kernel_no_overflow_in_physical_region():
    re = np.linspace(-200, 200, 2001)
    im = np.linspace(-200, 0, 201)
    a = re[:, None] + 1j * im[None, :]
    k = erfi_kernel(a)
    assert np.all(np.isfinite(k))
    # large |A| asymptote w(-A) ~ -i / (sqrt(pi) A)
    far = np.abs(a) > 150
    asym = 1j * math.pi * (-1j / (math.sqrt(math.pi) * a[far]))
    assert np.max(np.abs(k[far] / asym - 1)) < 1e-4
