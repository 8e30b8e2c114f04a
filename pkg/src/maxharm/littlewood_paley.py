"""Inhomogeneous Littlewood-Paley partition of unity.

``phi_hat`` equals 1 on the unit ball and vanishes outside the ball of
radius 2; ``psi_hat(xi) = phi_hat(xi) - phi_hat(2 xi)`` and
``psi_hat_k(xi) = psi_hat(2^-k xi)``.  All profiles are radial, so the same
construction serves R^n and the product space (R^n)^l.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .grid import GridSpec


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1.

    ``e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`` written as a logistic of
    ``1/(1-t) - 1/t`` so that neither end overflows.
    """
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    inner = (t > 0.0) & (t < 1.0)
    ti = t[inner]
    out[inner] = expit(1.0 / (1.0 - ti) - 1.0 / ti)
    return out


def phi_hat(radius):
    """Low-pass profile as a function of |xi|."""
    return 1.0 - smooth_step(np.asarray(radius, dtype=float) - 1.0)


def psi_hat(radius):
    radius = np.asarray(radius, dtype=float)
    return phi_hat(radius) - phi_hat(2.0 * radius)


def psi_hat_k(k: int, radius):
    """Annular piece ``k >= 1``, supported in ``2^(k-1) <= |xi| <= 2^(k+1)``."""
    return psi_hat(np.asarray(radius, dtype=float) * 2.0**-k)


def resolvable_annuli(spec: GridSpec) -> int:
    return int(math.floor(math.log2(spec.nyquist))) - 1


def vector_radius(*xis):
    """Euclidean norm of the frequency vector (xi_1, ..., xi_l) for n = 1."""
    return np.sqrt(sum(np.asarray(x, dtype=float) ** 2 for x in xis))


@dataclass(frozen=True)
class LpPartition:
    """Partition ``{phi_hat, psi_hat_1..psi_hat_Kmax}`` on a grid.

    ``weights`` scales each piece (index 0 is the low-pass); it exists so
    diagnostics can be exercised on deliberately broken partitions.
    """

    spec: GridSpec
    K_max: int
    total_dimension: int = 1
    weights: tuple = ()

    def __post_init__(self):
        if not self.weights:
            object.__setattr__(self, "weights", (1.0,) * (self.K_max + 1))

    def piece(self, k: int, radius):
        if not 0 <= k <= self.K_max:
            raise IndexError(f"piece {k} outside 0..{self.K_max}")
        base = phi_hat(radius) if k == 0 else psi_hat_k(k, radius)
        return self.weights[k] * base

    def total(self, radius):
        return sum(self.piece(k, radius) for k in range(self.K_max + 1))

    def band_limit(self, radius):
        """Multiplier supported in ``|xi| <= 2^K_max`` and equal to one on half that."""
        return phi_hat(np.asarray(radius, dtype=float) * 2.0 ** (1 - self.K_max))

    @property
    def band(self) -> float:
        return 2.0**self.K_max

    def without(self, k: int) -> "LpPartition":
        w = list(self.weights)
        w[k] = 0.0
        return replace(self, weights=tuple(w))

    def scaled(self, c: float) -> "LpPartition":
        return replace(self, weights=tuple(c * w for w in self.weights))

    def grid_radii(self) -> np.ndarray:
        """|xi_vec| at every point of the (R^n)^l frequency grid."""
        d = self.spec.n * self.total_dimension
        xi = self.spec.xi
        if d == 1:
            return np.abs(xi)
        if self.spec.N**d <= 2**22:
            mesh = np.meshgrid(*([xi] * d), indexing="ij")
            return np.sqrt(sum(m**2 for m in mesh))
        # radial profiles: the set of distinct radii carries the same information
        sq = np.unique((np.arange(self.spec.N // 2 + 1) / self.spec.L) ** 2)
        acc = sq
        for _ in range(d - 1):
            acc = np.unique(np.add.outer(acc, sq).ravel())
        return np.sqrt(acc)


def build_partition(spec: GridSpec, total_dimension: int = 1) -> LpPartition:
    """Partition resolving ``K_max = floor(log2(N / 2L)) - 1`` annuli."""
    if total_dimension < 1:
        raise ValueError("total dimension must be >= 1")
    if spec.nyquist < 8:
        need = 1 << math.ceil(math.log2(16 * spec.L))
        raise ValueError(
            f"grid too coarse: Nyquist {spec.nyquist:g} < 8 resolves fewer than 3 annuli; "
            f"need N >= {need} for L = {spec.L:g}"
        )
    return LpPartition(spec, resolvable_annuli(spec), total_dimension)


@dataclass
class PartitionDiagnostics:
    max_deviation: float
    max_support_violation: float
    smoothness: float
    band: float


def partition_check(p: LpPartition) -> PartitionDiagnostics:
    """Deviation from unity on ``|xi| <= 2^K_max``, support leakage, and the
    largest second difference of any piece along the radial grid."""
    radii = p.grid_radii()
    inside = radii <= p.band
    total = p.total(radii)
    deviation = float(np.max(np.abs(total[inside] - 1.0))) if inside.any() else 0.0

    violation = 0.0
    low = p.piece(0, radii)
    violation = max(violation, float(np.max(np.abs(low[radii > 2.0]), initial=0.0)))
    for k in range(1, p.K_max + 1):
        vals = p.piece(k, radii)
        outside = (radii < 2.0 ** (k - 1)) | (radii > 2.0 ** (k + 1))
        violation = max(violation, float(np.max(np.abs(vals[outside]), initial=0.0)))

    line = np.arange(0, p.spec.nyquist * math.sqrt(p.total_dimension), p.spec.dxi)
    smooth = 0.0
    for k in range(p.K_max + 1):
        vals = p.piece(k, line)
        smooth = max(smooth, float(np.max(np.abs(np.diff(vals, 2)), initial=0.0)))
    return PartitionDiagnostics(deviation, violation, smooth, p.band)
