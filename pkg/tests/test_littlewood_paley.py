"""Littlewood-Paley partition of unity."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxharm.grid import GridSpec
from maxharm.littlewood_paley import (build_partition, partition_check, phi_hat, psi_hat,
                                      psi_hat_k, smooth_step)


def test_phi_hat_profile():
    r = np.linspace(0, 3, 3001)
    v = phi_hat(r)
    assert np.all(v[r <= 1] == 1.0)
    assert np.all(v[r >= 2] == 0.0)
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(np.diff(v) <= 0)


def test_smooth_step_endpoints_and_symmetry():
    t = np.linspace(-1, 2, 301)
    s = smooth_step(t)
    assert np.all(s[t <= 0] == 0) and np.all(s[t >= 1] == 1)
    inner = (t > 0) & (t < 1)
    assert np.allclose(s[inner] + smooth_step(1 - t[inner]), 1.0, atol=1e-15)


def test_default_grid_resolves_two_annuli():
    p = build_partition(GridSpec(1, 32.0, 512))
    assert p.K_max == 2 and p.band == 4.0
    # direct summation oracle at every grid frequency
    xi = np.abs(p.spec.xi)
    direct = phi_hat(xi) + psi_hat(xi / 2) + psi_hat(xi / 4)
    assert np.max(np.abs(direct[xi <= 4] - 1.0)) <= 1e-12
    assert partition_check(p).max_deviation <= 1e-12


def test_origin_is_pure_low_pass():
    p = build_partition(GridSpec(1, 4.0, 1024))
    assert p.piece(0, 0.0) == 1.0
    assert all(p.piece(k, 0.0) == 0.0 for k in range(1, p.K_max + 1))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_dyadic_points_split_between_neighbours(k):
    p = build_partition(GridSpec(1, 4.0, 1024))
    r = 2.0**k * 1.3
    vals = [p.piece(j, r) for j in range(p.K_max + 1)]
    assert vals[k] + vals[k + 1] == pytest.approx(1.0, abs=1e-14)
    assert all(v == 0.0 for j, v in enumerate(vals) if j not in (k, k + 1))


def test_partition_check_diagnostics():
    p = build_partition(GridSpec(1, 4.0, 1024))
    d = partition_check(p)
    assert d.max_deviation <= 1e-12 and d.max_support_violation == 0.0
    assert partition_check(p.without(p.K_max)).max_deviation == pytest.approx(1.0, abs=1e-12)
    assert partition_check(p.scaled(0.5)).max_deviation == pytest.approx(0.5, abs=1e-12)


def test_product_space_partition():
    p = build_partition(GridSpec(1, 4.0, 256), total_dimension=2)
    assert partition_check(p).max_deviation <= 1e-12
    p3 = build_partition(GridSpec(1, 4.0, 512), total_dimension=3)
    assert partition_check(p3).max_deviation <= 1e-12


def test_coarse_grid_rejected():
    with pytest.raises(ValueError, match="too coarse"):
        build_partition(GridSpec(1, 32.0, 256))


@settings(max_examples=50, deadline=None)
@given(r=st.floats(0.0, 64.0))
def test_telescoping(r):
    assert abs(psi_hat(r) - (phi_hat(r) - phi_hat(2 * r))) <= 1e-14


@settings(max_examples=50, deadline=None)
@given(r=st.floats(0.0, 64.0), k=st.integers(1, 5))
def test_scaling(r, k):
    assert psi_hat_k(k, r) == psi_hat(2.0**-k * r)
    assert psi_hat_k(k, r) == 0.0 or 2.0 ** (k - 1) <= r <= 2.0 ** (k + 1)


@pytest.mark.parametrize("L,N", [(4.0, 256), (8.0, 1024), (2.0, 2048), (16.0, 4096)])
def test_partition_of_unity_on_band(L, N):
    p = build_partition(GridSpec(1, L, N))
    assert p.K_max == math.floor(math.log2(N / (2 * L))) - 1
    assert partition_check(p).max_deviation <= 1e-12


def test_band_limit_cutoff_stays_in_band():
    p = build_partition(GridSpec(1, 4.0, 1024))
    r = np.linspace(0, 2 * p.band, 4001)
    b = p.band_limit(r)
    assert np.all(b[r >= p.band] == 0.0)
    assert np.all(b[r <= p.band / 2] == 1.0)
