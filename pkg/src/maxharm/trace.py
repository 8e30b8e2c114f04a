"""Functions on product grids (R^1)^l, diagonal restriction and the trace ratio.

A :class:`ProductGridFunction` holds either the full ``N^l`` sample array
or a list of one-dimensional tensor factors; the factored form keeps
``l = 3`` Sobolev norms at ``N = 512`` within memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import (TAIL_LIMIT, GridFunction, GridSpec, _fsum, bessel_weight, fft_samples,
                   shell_fraction)

MAX_FACTORS = 3


@dataclass(frozen=True, eq=False)
class ProductGridFunction:
    """``G(x_1, ..., x_l)`` sampled on ``spec`` in every variable.

    Exactly one of ``samples`` (shape ``(N,) * l``) or ``factors`` (``l``
    arrays of length N, meaning ``G = prod_j g_j(x_j)``) is given.
    """

    spec: GridSpec
    l: int
    samples: Optional[np.ndarray] = None
    factors: Optional[tuple] = None

    def __post_init__(self):
        if self.spec.n != 1:
            raise ValueError("product grids are built from n = 1 factors")
        if not 1 <= self.l <= MAX_FACTORS:
            raise ValueError(f"l must lie in 1..{MAX_FACTORS}, got {self.l}")
        if (self.samples is None) == (self.factors is None):
            raise ValueError("give exactly one of samples or factors")
        if self.samples is not None:
            a = np.array(self.samples, dtype=complex)
            if a.shape != (self.spec.N,) * self.l:
                raise ValueError(f"samples have shape {a.shape}, expected {(self.spec.N,) * self.l}")
            if not np.all(np.isfinite(a)):
                raise ValueError("samples must be finite")
            a.setflags(write=False)
            object.__setattr__(self, "samples", a)
        else:
            fs = tuple(np.array(g, dtype=complex) for g in self.factors)
            if len(fs) != self.l or any(g.shape != (self.spec.N,) for g in fs):
                raise ValueError("need l factors of length N")
            if not all(np.all(np.isfinite(g)) for g in fs):
                raise ValueError("factors must be finite")
            for g in fs:
                g.setflags(write=False)
            object.__setattr__(self, "factors", fs)

    @classmethod
    def tensor(cls, *fs: GridFunction) -> "ProductGridFunction":
        spec = fs[0].spec
        if any(f.spec != spec for f in fs):
            raise ValueError("factor grids differ")
        return cls(spec, len(fs), factors=tuple(f.samples for f in fs))

    @property
    def factored(self) -> bool:
        return self.factors is not None

    def dense(self) -> np.ndarray:
        if not self.factored:
            return self.samples
        out = self.factors[0]
        for g in self.factors[1:]:
            out = np.multiply.outer(out, g)
        return out

    def tail_masses(self) -> list:
        """Outer-shell |G|^2 fraction per factor (or of the whole array)."""
        half = self.spec.L / 2
        if self.factored:
            return [shell_fraction(g, self.spec.x, half) for g in self.factors]
        return [shell_fraction(self.samples, self.spec.x, half)]

    def check_tails(self, limit: float = TAIL_LIMIT) -> None:
        worst = max(self.tail_masses())
        if worst > limit:
            raise ValueError(f"tail mass {worst:.3g} exceeds {limit:g}; enlarge the box")

    def sobolev_sq(self, s: float) -> float:
        """``int (1 + 4 pi^2 |xi_vec|^2)^s |G^(xi_vec)|^2 dxi_vec``."""
        if s < 0:
            raise ValueError(f"Sobolev index must be nonnegative, got {s}")
        spec = self.spec
        xi2 = spec.xi**2
        cell = spec.dxi**self.l
        if not self.factored:
            Gh = fft_samples(self.samples, spec.h)
            sq = sum(np.ix_(*([xi2] * self.l)))
            return _fsum(bessel_weight(sq, s) * np.abs(Gh) ** 2) * cell
        powers = [np.abs(fft_samples(g, spec.h)) ** 2 for g in self.factors]
        hist = _squared_index_histogram(powers, spec.N)
        q = np.arange(hist.size) / spec.L**2
        return _fsum(bessel_weight(q, s) * hist) * cell


def _squared_index_histogram(powers, N: int) -> np.ndarray:
    """Mass of ``prod_j P_j(m_j)`` on each level set of ``sum_j m_j^2``.

    Frequencies are ``m / L`` with ``m = -N/2 .. N/2-1``; the Sobolev weight
    depends on ``|xi_vec|^2 = sum m_j^2 / L^2`` only, so this histogram
    carries everything the norm needs at cost ``O(l N^3)`` instead of ``N^l``.
    """
    m2 = (np.arange(-N // 2, N // 2) ** 2).astype(np.int64)
    hist = np.bincount(m2, weights=powers[0])
    for P in powers[1:]:
        out = np.zeros(hist.size + int(m2.max()))
        for q, w in zip(m2, P):
            if w != 0.0:
                out[q:q + hist.size] += w * hist
        hist = out
    return hist


def diagonal_restrict(G: ProductGridFunction) -> GridFunction:
    """``G~(x) = G(x, ..., x)`` at every grid point."""
    if G.factored:
        out = G.factors[0]
        for g in G.factors[1:]:
            out = out * g
        return GridFunction(G.spec, out)
    a = G.samples
    while a.ndim > 1:
        a = np.diagonal(a, axis1=-2, axis2=-1)
    return GridFunction(G.spec, a)


def collapse_last(H: ProductGridFunction) -> ProductGridFunction:
    """Identify the last two variables: ``H(x_1, ..., x_k, x_k)``."""
    if H.l < 2:
        raise ValueError("collapse needs at least two variables (k >= 1)")
    if H.factored:
        fs = H.factors[:-2] + (H.factors[-2] * H.factors[-1],)
        return ProductGridFunction(H.spec, H.l - 1, factors=fs)
    return ProductGridFunction(H.spec, H.l - 1, samples=np.diagonal(H.samples, axis1=-2, axis2=-1))


def trace_ratio(G: ProductGridFunction, s: float) -> float:
    """``||G~||_{L^2_s(R)} / ||G||_{L^2_{s + (l-1)/2}(R^l)}``."""
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    num = _fsum_sobolev(diagonal_restrict(G), s)
    den = math.sqrt(G.sobolev_sq(s + (G.l - 1) * G.spec.n / 2.0))
    if den == 0.0:
        raise ValueError("zero denominator")
    return num / den


def _fsum_sobolev(f: GridFunction, s: float) -> float:
    fh = fft_samples(f.samples, f.spec.h)
    return math.sqrt(_fsum(bessel_weight(f.spec.xi**2, s) * np.abs(fh) ** 2) * f.spec.dxi)


def anisotropic_gaussian(spec: GridSpec, t: float, v=(0.0, 0.0), x0=(0.0, 0.0)) -> ProductGridFunction:
    """``exp(-pi (t x_1^2 + x_2^2 / t)) e^{2 pi i (v_1 x_1 + v_2 x_2)}`` (tensor form)."""
    x = spec.x
    g1 = np.exp(-math.pi * t * (x - x0[0]) ** 2) * np.exp(2j * math.pi * v[0] * x)
    g2 = np.exp(-math.pi * (x - x0[1]) ** 2 / t) * np.exp(2j * math.pi * v[1] * x)
    return ProductGridFunction(spec, 2, factors=(g1, g2))


def rotated_gaussian(spec: GridSpec, t: float, angle: float, v=(0.0, 0.0)) -> ProductGridFunction:
    """Anisotropic Gaussian with principal axes rotated by ``angle`` (full samples)."""
    x = spec.x
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    c, s = math.cos(angle), math.sin(angle)
    a = c * X1 + s * X2
    b = -s * X1 + c * X2
    G = np.exp(-math.pi * (t * a**2 + b**2 / t)) * np.exp(2j * math.pi * (v[0] * X1 + v[1] * X2))
    return ProductGridFunction(spec, 2, samples=G)
