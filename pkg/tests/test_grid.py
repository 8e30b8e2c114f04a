"""Grid functions, transforms, norms and the test-function families."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from maxharm.grid import (GridFunction, GridSpec, fourier, inverse_fourier, lp_norm,
                          sobolev_norm, test_function)
from maxharm.weights import constant_weight

SPEC = GridSpec(1, 16.0, 256)


def gaussian(spec=SPEC):
    return test_function(spec, "gaussian")


def test_grid_geometry():
    spec = GridSpec(1, 32.0, 512)
    assert spec.h * spec.N == spec.L
    assert spec.x[0] == -16.0 and spec.x[1] - spec.x[0] == spec.h
    assert spec.xi[0] == -spec.N / 2 / spec.L and spec.xi[-1] == (spec.N / 2 - 1) / spec.L


@pytest.mark.parametrize("kwargs", [dict(n=1, L=8.0, N=100), dict(n=1, L=0.0, N=64), dict(n=3, L=8.0, N=64)])
def test_grid_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_grid_function_rejects_nonfinite_and_wrong_shape():
    with pytest.raises(ValueError, match="finite"):
        GridFunction(SPEC, np.full(256, np.nan))
    with pytest.raises(ValueError, match="shape"):
        GridFunction(SPEC, np.zeros(128))


def test_samples_are_read_only():
    f = gaussian()
    with pytest.raises(ValueError):
        f.samples[0] = 1.0


def test_tail_mass_of_gaussian_is_tiny():
    assert gaussian().tail_mass < 1e-6
    wide = test_function(SPEC, "gaussian", dilation=0.05, check=False)
    assert wide.tail_mass > 1e-6


def test_fourier_of_gaussian_is_gaussian():
    fh = fourier(gaussian())
    assert np.max(np.abs(fh.samples - np.exp(-math.pi * SPEC.xi**2))) < 1e-8


def test_fourier_of_zero_is_zero():
    assert np.all(fourier(GridFunction(SPEC, np.zeros(256))).samples == 0)


def test_modulation_shifts_spectrum():
    fh = fourier(test_function(SPEC, "gaussian", v=3.0))
    assert np.max(np.abs(fh.samples - np.exp(-math.pi * (SPEC.xi - 3.0) ** 2))) < 1e-8


def test_modulation_shift_against_quadrature():
    # independent oracle: adaptive quadrature of the continuous transform
    for xi in (2.5, 3.0, 3.25):
        re = integrate.quad(lambda x: math.exp(-math.pi * x * x) * math.cos(2 * math.pi * (3.0 - xi) * x),
                            -np.inf, np.inf, epsabs=1e-13)[0]
        fh = fourier(test_function(SPEC, "gaussian", v=3.0))
        assert abs(fh.samples[SPEC.N // 2 + int(round(xi * SPEC.L))] - re) < 1e-8


def test_inverse_fourier_roundtrip(rng):
    f = GridFunction(SPEC, rng.standard_normal(256) + 1j * rng.standard_normal(256))
    back = inverse_fourier(fourier(f))
    assert np.max(np.abs(back.samples - f.samples)) < 1e-12


def test_inverse_fourier_dc_bin_gives_constant():
    g = np.zeros(256, dtype=complex)
    g[SPEC.N // 2] = SPEC.L
    out = inverse_fourier(GridFunction(SPEC, g, "frequency"))
    assert np.max(np.abs(out.samples - 1.0)) < 1e-12


def test_inverse_fourier_of_gaussian():
    g = GridFunction(SPEC, np.exp(-math.pi * SPEC.xi**2), "frequency")
    assert np.max(np.abs(inverse_fourier(g).samples - np.exp(-math.pi * SPEC.x**2))) < 1e-8


def test_domain_tags_are_enforced():
    with pytest.raises(ValueError):
        inverse_fourier(gaussian())
    with pytest.raises(ValueError):
        fourier(fourier(gaussian()))


def test_lp_norm_of_unit_indicator():
    x = SPEC.x
    f = GridFunction(SPEC, ((x >= 0) & (x < 1)).astype(float))
    assert abs(lp_norm(f, 2) - 1.0) <= SPEC.h


def test_lp_norm_of_gaussian_matches_quadrature():
    exact = integrate.quad(lambda x: math.exp(-2 * math.pi * x * x), -np.inf, np.inf)[0] ** 0.5
    assert abs(exact - 2**-0.25) < 1e-12
    assert abs(lp_norm(gaussian(), 2) - exact) < 1e-6


def test_lp_norm_weight_scaling(rng):
    f = GridFunction(SPEC, rng.standard_normal(256))
    assert lp_norm(f, 2, constant_weight(4.0, SPEC)) == pytest.approx(2 * lp_norm(f, 2), rel=1e-14)


def test_lp_norm_infinity_is_max(rng):
    a = rng.standard_normal(256)
    assert lp_norm(GridFunction(SPEC, a), math.inf) == np.max(np.abs(a))


def test_lp_norm_rejects_nonpositive_exponent():
    with pytest.raises(ValueError):
        lp_norm(gaussian(), 0.0)


def test_sobolev_norm_reductions(rng):
    f = GridFunction(SPEC, rng.standard_normal(256))
    assert sobolev_norm(f, 0.0) == pytest.approx(lp_norm(f, 2), rel=1e-12)
    assert sobolev_norm(GridFunction(SPEC, np.zeros(256)), 1.0) == 0.0


def test_sobolev_norm_of_gaussian_matches_refined_grid():
    coarse = sobolev_norm(gaussian(), 1.0)
    fine = sobolev_norm(gaussian(GridSpec(1, 32.0, 1024)), 1.0)
    # closed form: int (1 + 4 pi^2 xi^2) e^{-2 pi xi^2} = 2^{-1/2} (1 + pi)
    exact = math.sqrt(2**-0.5 * (1 + math.pi))
    assert abs(coarse - fine) < 1e-6
    assert abs(fine - exact) < 1e-10


def test_test_function_identity_parameters():
    assert np.max(np.abs(gaussian().samples - np.exp(-math.pi * SPEC.x**2))) == 0.0


def test_test_function_dilation_law():
    wide = test_function(SPEC, "gaussian", dilation=0.5)
    assert np.max(np.abs(wide.samples - np.exp(-math.pi * (SPEC.x / 2) ** 2))) < 1e-15
    assert lp_norm(wide, 2) == pytest.approx(2**0.5 * lp_norm(gaussian(), 2), rel=1e-10)


def test_test_function_modulation_peak():
    fh = fourier(test_function(SPEC, "gaussian", v=4.0))
    assert SPEC.xi[np.argmax(np.abs(fh.samples))] == 4.0


def test_test_function_rejects_aliasing_modulation():
    with pytest.raises(ValueError, match="Nyquist"):
        test_function(SPEC, "gaussian", v=7.0)


@pytest.mark.parametrize("family", ["gaussian", "bump", "modulated"])
def test_profiles_are_finite_with_small_tails(family):
    f = test_function(SPEC, family, dilation=0.5, x0=0.25)
    assert f.tail_mass < 1e-6


def _band_limited(seed, spec):
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(spec.N, dtype=complex)
    band = np.abs(spec.xi) <= spec.nyquist / 2
    coeffs[band] = rng.standard_normal(band.sum()) + 1j * rng.standard_normal(band.sum())
    return inverse_fourier(GridFunction(spec, coeffs, "frequency"))


def test_parseval_on_many_band_limited_functions():
    spec = GridSpec(1, 8.0, 64)
    for seed in range(1000):
        f = _band_limited(seed, spec)
        a, b = lp_norm(f, 2), lp_norm(fourier(f), 2)
        assert abs(a - b) <= 1e-10 * a


@pytest.mark.parametrize("A", [0.5, 2.0])
@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_dilation_law_for_lp_norms(A, p):
    spec = GridSpec(1, 32.0, 1024)
    lhs = lp_norm(test_function(spec, "gaussian", dilation=A), p)
    rhs = A ** (-1.0 / p) * lp_norm(gaussian(spec), p)
    assert abs(lhs - rhs) <= 1e-3 * rhs


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.5, 6.0))
def test_lp_norm_monotone_in_weight(seed, p):
    rng = np.random.default_rng(seed)
    f = GridFunction(SPEC, rng.standard_normal(256))
    w1 = rng.uniform(0.1, 2.0, 256)
    w2 = w1 + rng.uniform(0.0, 1.0, 256)
    assert lp_norm(f, p, GridFunction(SPEC, w1)) <= lp_norm(f, p, GridFunction(SPEC, w2))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.floats(0.0, 3.0), ds=st.floats(0.0, 2.0))
def test_sobolev_norm_monotone_in_order(seed, s, ds):
    f = GridFunction(SPEC, np.random.default_rng(seed).standard_normal(256))
    assert sobolev_norm(f, s) <= sobolev_norm(f, s + ds)


def test_two_dimensional_gaussian_transform():
    spec = GridSpec(2, 12.0, 128)
    fh = fourier(test_function(spec, "gaussian"))
    XI = spec.freq_mesh()
    assert np.max(np.abs(fh.samples - np.exp(-math.pi * (XI[0] ** 2 + XI[1] ** 2)))) < 1e-8
