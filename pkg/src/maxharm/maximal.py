"""Maximal operators over a finite family of axis-parallel cubes.

Cubes are anchored on a lattice of grid indices and wrap around the
periodic box.  For each side length the per-cube quantity (an average, a
product of averages, or a best-constant oscillation) is computed once and
then spread to every grid point the cube contains with a separable sliding
window maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import SPATIAL, GridFunction, GridSpec

DENSE_SIDE_CELLS = 32
COARSE_FRACTION = 8
DESCENT_ROUNDS = 40
SUBSAMPLE = 16
ALL_SAMPLES_LIMIT = 64
_BLOCK = 1 << 21


@dataclass(frozen=True)
class CubeFamily:
    """Cubes of side ``sides[i]`` cells anchored every ``strides[i]`` cells.

    Parameters
    ----------
    spec : GridSpec
        Grid the cubes live on.
    sides : tuple of int
        Side lengths in cells, strictly increasing powers of two.
    strides : tuple of int
        Anchor spacing per side; each divides its side and ``N``.
    dyadic_only : bool
        True when every cube is a dyadic cube (anchor a multiple of its side).
    """

    spec: GridSpec
    sides: tuple
    strides: tuple
    dyadic_only: bool = False

    def __post_init__(self):
        if len(self.sides) == 0:
            raise ValueError("cube family is empty")
        if len(self.sides) != len(self.strides):
            raise ValueError("need one stride per side length")
        if any(b <= a for a, b in zip(self.sides, self.sides[1:])):
            raise ValueError("side lengths must be strictly increasing")
        N = self.spec.N
        for S, st in zip(self.sides, self.strides):
            if S < 1 or S > N or st < 1 or S % st or N % st:
                raise ValueError(f"invalid side/stride pair ({S}, {st}) for N = {N}")

    @classmethod
    def default(cls, spec: GridSpec, min_side: int = 1, max_side: int = None,
                dense_limit: int = DENSE_SIDE_CELLS, coarse_fraction: int = COARSE_FRACTION) -> "CubeFamily":
        """Dyadic sides from ``min_side`` to ``N/2`` cells; every anchor up to
        ``dense_limit`` cells, stride ``side/coarse_fraction`` above."""
        max_side = spec.N // 2 if max_side is None else max_side
        sides = []
        S = min_side
        while S <= max_side:
            sides.append(S)
            S *= 2
        strides = tuple(1 if S <= dense_limit else max(1, S // coarse_fraction) for S in sides)
        return cls(spec, tuple(sides), strides)

    @classmethod
    def full(cls, spec: GridSpec, max_side: int = None) -> "CubeFamily":
        """Every anchor at every dyadic side."""
        return cls.default(spec, max_side=max_side, dense_limit=spec.N)

    @classmethod
    def dyadic(cls, spec: GridSpec, max_side: int = None) -> "CubeFamily":
        """Dyadic cubes; anchors at multiples of the side align with the origin."""
        fam = cls.default(spec, max_side=max_side)
        return cls(spec, fam.sides, fam.sides, True)

    @property
    def side_lengths(self) -> tuple:
        return tuple(S * self.spec.h for S in self.sides)

    def restricted(self, keep) -> "CubeFamily":
        idx = [i for i, S in enumerate(self.sides) if keep(S * self.spec.h)]
        if not idx:
            raise ValueError("restriction leaves no cubes")
        return CubeFamily(self.spec, tuple(self.sides[i] for i in idx),
                          tuple(self.strides[i] for i in idx), self.dyadic_only)

    def small(self, threshold: float = 1.0) -> "CubeFamily":
        return self.restricted(lambda s: s < threshold)

    def large(self, threshold: float = 1.0) -> "CubeFamily":
        return self.restricted(lambda s: s >= threshold)

    def refined(self) -> "CubeFamily":
        """Same sides with halved strides (stride-halving stability check)."""
        return CubeFamily(self.spec, self.sides, tuple(max(1, s // 2) for s in self.strides), False)

    def anchors(self, i: int) -> np.ndarray:
        return np.arange(0, self.spec.N, self.strides[i])

    def cubes(self):
        """Yield ``(side, anchor_tuple)`` for every cube (slow; for oracles)."""
        import itertools

        for i, S in enumerate(self.sides):
            a = self.anchors(i)
            for anchor in itertools.product(a, repeat=self.spec.n):
                yield S, anchor

    def describe(self) -> dict:
        return {"sides": list(self.sides), "strides": list(self.strides), "dyadic_only": self.dyadic_only}


@dataclass(frozen=True, eq=False)
class MaximalField:
    """Nonnegative maximal-function values with provenance."""

    values: GridFunction
    operator: str
    r: float = 1.0
    family: dict = field(default_factory=dict)

    @property
    def samples(self) -> np.ndarray:
        return self.values.samples


def _field(spec: GridSpec, arr: np.ndarray, op: str, r: float, fam: CubeFamily) -> MaximalField:
    return MaximalField(GridFunction(spec, np.maximum(arr, 0.0)), op, r, fam.describe())


# cube sums and spreading ------------------------------------------------------

def _box_sums(a: np.ndarray, S: int) -> np.ndarray:
    """Sum of ``a`` over the wrapped cube of side ``S`` anchored at every index."""
    out = a
    for ax in range(a.ndim):
        N = out.shape[ax]
        ext = np.concatenate([out, np.take(out, np.arange(S), axis=ax)], axis=ax)
        c = np.cumsum(ext, axis=ax)
        zero = np.zeros_like(np.take(c, [0], axis=ax))
        c = np.concatenate([zero, c], axis=ax)
        out = np.take(c, np.arange(S, S + N), axis=ax) - np.take(c, np.arange(N), axis=ax)
    return out


def cube_averages(a: np.ndarray, fam: CubeFamily, i: int) -> np.ndarray:
    """Averages of ``a`` over the family's cubes at scale ``i`` (anchor lattice)."""
    S, st = fam.sides[i], fam.strides[i]
    sums = _box_sums(np.asarray(a, dtype=float), S)
    sl = tuple(slice(0, None, st) for _ in range(a.ndim))
    return np.maximum(sums[sl] / float(S**a.ndim), 0.0)


def spread_to_points(V: np.ndarray, S: int, stride: int, N: int) -> np.ndarray:
    """``field[q] = max`` of ``V`` over anchors of cubes (side S) containing q."""
    W = S // stride
    out = V
    for ax in range(V.ndim):
        acc = out.copy()
        for w in range(1, W):
            acc = np.maximum(acc, np.roll(out, w, axis=ax))
        out = np.repeat(acc, stride, axis=ax)
    return out


def _scale_max(spec: GridSpec, fam: CubeFamily, per_scale) -> np.ndarray:
    best = np.zeros(spec.shape)
    for i, (S, st) in enumerate(zip(fam.sides, fam.strides)):
        best = np.maximum(best, spread_to_points(per_scale(i), S, st, spec.N))
    return best


def _require_family(fam: CubeFamily):
    if fam is None or len(fam.sides) == 0:
        raise ValueError("empty cube family")


# Hardy-Littlewood type maximal functions -----------------------------------

def hl_maximal(f: GridFunction, r: float, fam: CubeFamily) -> MaximalField:
    """``M_r f(x) = max_{Q contains x} (avg_Q |f|^r)^{1/r}``."""
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    _require_family(fam)
    a = np.abs(f.samples) ** r
    best = _scale_max(f.spec, fam, lambda i: cube_averages(a, fam, i))
    return _field(f.spec, best ** (1.0 / r), "hl_maximal", r, fam)


def multisublinear_maximal(fs, r: float, fam: CubeFamily) -> MaximalField:
    """``M_r(f_1..f_l)(x) = max_{Q contains x} prod_j (avg_Q |f_j|^r)^{1/r}``."""
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    _require_family(fam)
    spec = fs[0].spec
    for f in fs:
        if f.spec != spec:
            raise ValueError("grid mismatch among arguments")
    powers = [np.abs(f.samples) ** r for f in fs]

    def per_scale(i):
        out = 1.0
        for a in powers:
            out = out * cube_averages(a, fam, i) ** (1.0 / r)
        return out

    return _field(spec, _scale_max(spec, fam, per_scale), "multisublinear_maximal", r, fam)


def dyadic_maximal(f: GridFunction, fam: CubeFamily) -> MaximalField:
    """``M^dyad f(x)``: largest average of ``|f|`` over dyadic cubes containing x."""
    if not fam.dyadic_only:
        raise ValueError("dyadic_maximal needs a dyadic-only family")
    a = np.abs(f.samples)
    best = _scale_max(f.spec, fam, lambda i: cube_averages(a, fam, i))
    return _field(f.spec, best, "dyadic_maximal", 1.0, fam)


# best constants ------------------------------------------------------------------

def _objective(V: np.ndarray, c: np.ndarray, t: float) -> np.ndarray:
    """``(mean_j |V[:, j] - c|^t)^{1/t}`` per row; ``c`` has shape (rows,)."""
    d = np.abs(V - c[:, None])
    return np.mean(d**t, axis=1) ** (1.0 / t)


def _candidates(V: np.ndarray, t: float) -> np.ndarray:
    rows, S = V.shape
    cands = [np.zeros(rows, dtype=V.dtype), V.mean(axis=1)]
    med = np.median(V.real, axis=1)
    if np.iscomplexobj(V):
        med = med + 1j * np.median(V.imag, axis=1)
    cands.append(med.astype(V.dtype))
    if S <= ALL_SAMPLES_LIMIT:
        cols = range(S)
    else:
        cols = np.unique(np.linspace(0, S - 1, SUBSAMPLE).round().astype(int))
    cands.extend(V[:, j] for j in cols)
    return np.stack(cands, axis=1)


def best_constants(V: np.ndarray, t: float, rounds: int = DESCENT_ROUNDS):
    """Vectorized :func:`best_constant` over the rows of ``V``.

    Returns ``(c, value)`` arrays.  ``t = 2`` returns the mean exactly.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    V = np.asarray(V)
    if V.ndim != 2 or V.shape[1] == 0:
        raise ValueError("need a nonempty sample set per cube")
    if t == 2.0:
        c = V.mean(axis=1)
        return c, _objective(V, c, t)
    C = _candidates(V, t)
    best_val = np.full(V.shape[0], np.inf)
    best_c = np.zeros(V.shape[0], dtype=C.dtype)
    for j in range(C.shape[1]):
        val = _objective(V, C[:, j], t)
        better = val < best_val
        best_val = np.where(better, val, best_val)
        best_c = np.where(better, C[:, j], best_c)
    complex_data = np.iscomplexobj(V)
    step = np.abs(V - best_c[:, None]).max(axis=1)
    dirs = [1.0, -1.0] + ([1j, -1j] if complex_data else [])
    for _ in range(rounds):
        improved = np.zeros(V.shape[0], dtype=bool)
        for d in dirs:
            trial = best_c + d * step
            val = _objective(V, trial, t)
            better = val < best_val
            best_val = np.where(better, val, best_val)
            best_c = np.where(better, trial, best_c)
            improved |= better
        step = np.where(improved, step, step / 2.0)
    return best_c, best_val


def best_constant(values, t: float):
    """Approximate ``argmin_c (avg |f - c|^t)^{1/t}`` over complex ``c``.

    Candidates ``0``, the mean, the componentwise median and sample values
    (all of them for up to 64 samples, a 16-point subsample otherwise) seed
    40 rounds of pattern descent with a halving step.  The returned value
    is attained by the returned constant, so it bounds the infimum above.
    """
    v = np.asarray(values).ravel()
    if v.size == 0:
        raise ValueError("empty sample set")
    c, val = best_constants(v[None, :], t)
    return c[0], float(val[0])


def cube_samples(a: np.ndarray, S: int, anchors: np.ndarray) -> np.ndarray:
    """Samples of every lattice cube of side ``S``, one row per cube."""
    N = a.shape[0]
    offs = np.arange(S)
    idx = (anchors[:, None] + offs[None, :]) % N
    if a.ndim == 1:
        return a[idx]
    rows = a[idx]                      # (M0, S, N)
    block = rows[:, :, idx]            # (M0, S, M1, S)
    block = block.transpose(0, 2, 1, 3)
    M0, M1 = block.shape[:2]
    return block.reshape(M0 * M1, S * S)


def oscillation_per_cube(a: np.ndarray, fam: CubeFamily, i: int, t: float,
                         return_constants: bool = False):
    """``best_constant`` values for every cube at scale ``i`` (anchor lattice).

    With ``return_constants`` the minimizing constants come back as well.
    """
    S = fam.sides[i]
    anchors = fam.anchors(i)
    n = a.ndim
    M = len(anchors)
    per_row = S**n * (M if n == 2 else 1)
    rows = max(1, _BLOCK // per_row)
    vals = np.empty((M,) * n)
    consts = np.empty((M,) * n, dtype=complex)
    for s in range(0, M, rows):
        sub = anchors[s:s + rows]
        if n == 1:
            V = cube_samples(a, S, sub)
        else:
            idx0 = (sub[:, None] + np.arange(S)[None, :]) % a.shape[0]
            idx1 = (anchors[:, None] + np.arange(S)[None, :]) % a.shape[1]
            V = a[idx0][:, :, idx1].transpose(0, 2, 1, 3).reshape(len(sub) * M, S * S)
        c, v = best_constants(V, t)
        vals[s:s + rows] = v.reshape((len(sub),) + (M,) * (n - 1))
        consts[s:s + rows] = c.reshape((len(sub),) + (M,) * (n - 1))
    if return_constants:
        return vals, consts
    return vals


def transferred_power_oscillation(a: np.ndarray, fam: CubeFamily, i: int, t: float):
    """Per-cube pair for the t-power embedding ``0 < t <= 1``.

    Returns ``(lhs, rhs)`` where ``rhs = (avg |f - c|^t)^{1/t}`` at the
    computed best constant ``c`` and ``lhs`` is the smaller of the
    independently optimized ``(inf_d avg ||f|^t - d|)^{1/t}`` and the value
    at ``d = |c|^t``.
    """
    rhs, consts = oscillation_per_cube(a, fam, i, t, return_constants=True)
    ft = np.abs(a) ** t
    own = oscillation_per_cube(ft, fam, i, 1.0)
    S = fam.sides[i]
    anchors = fam.anchors(i)
    if a.ndim == 1:
        V = cube_samples(ft, S, anchors)
        d = np.abs(consts) ** t
        moved = np.mean(np.abs(V - d[:, None]), axis=1)
    else:
        M = len(anchors)
        moved = np.empty((M, M))
        idx1 = (anchors[:, None] + np.arange(S)[None, :]) % a.shape[1]
        for r0, a0 in enumerate(anchors):
            idx0 = (a0 + np.arange(S)) % a.shape[0]
            V = ft[idx0][:, idx1].transpose(1, 0, 2).reshape(M, S * S)
            d = np.abs(consts[r0]) ** t
            moved[r0] = np.mean(np.abs(V - d[:, None]), axis=1)
    lhs = np.minimum(own, moved) ** (1.0 / t)
    return lhs, rhs


# sharp maximal functions ----------------------------------------------------------

def sharp_maximal_homogeneous(f: GridFunction, fam: CubeFamily) -> MaximalField:
    """``max_{Q contains x} inf_c avg_Q |f - c|``."""
    _require_family(fam)
    a = np.asarray(f.samples)
    best = _scale_max(f.spec, fam, lambda i: oscillation_per_cube(a, fam, i, 1.0))
    return _field(f.spec, best, "sharp_maximal_homogeneous", 1.0, fam)


def sharp_maximal_inhomogeneous(f: GridFunction, r: float, fam: CubeFamily,
                                threshold: float = 1.0) -> MaximalField:
    """Max of ``(avg_Q |f|^r)^{1/r}`` over cubes of side >= 1 containing x and
    ``inf_c (avg_Q |f - c|^r)^{1/r}`` over cubes of side < 1 containing x."""
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    _require_family(fam)
    lengths = fam.side_lengths
    if not (min(lengths) < threshold <= max(lengths)):
        raise ValueError(
            f"cube family must contain sides below and at least {threshold:g}; "
            f"has {min(lengths):g}..{max(lengths):g}"
        )
    a = np.asarray(f.samples)
    small, large = fam.small(threshold), fam.large(threshold)
    small_term = _scale_max(f.spec, small, lambda i: oscillation_per_cube(a, small, i, r))
    ar = np.abs(a) ** r
    large_term = _scale_max(f.spec, large, lambda i: cube_averages(ar, large, i)) ** (1.0 / r)
    return _field(f.spec, np.maximum(small_term, large_term), "sharp_maximal_inhomogeneous", r, fam)


def sharp_small_cube_term(f: GridFunction, r: float, fam: CubeFamily, threshold: float = 1.0) -> MaximalField:
    """Only the oscillation part (cubes of side < threshold)."""
    small = fam.small(threshold)
    a = np.asarray(f.samples)
    best = _scale_max(f.spec, small, lambda i: oscillation_per_cube(a, small, i, r))
    return _field(f.spec, best, "sharp_small_cube_term", r, small)


def bmo_seminorm(f: GridFunction, fam: CubeFamily, t: float = 1.0) -> float:
    """``max_Q inf_c (avg_Q |f - c|^t)^{1/t}`` over the family."""
    _require_family(fam)
    a = np.asarray(f.samples)
    return float(max(oscillation_per_cube(a, fam, i, t).max() for i in range(len(fam.sides))))


def power_embedding_fields(f: GridFunction, t: float, fam: CubeFamily, threshold: float = 1.0):
    """``((M#(|f|^t))^{1/t}, M#_t f)`` as fields, for ``0 < t <= 1``.

    Both share the large-cube term ``(avg |f|^t)^{1/t}``; on small cubes
    the left side reuses the right side's constants (see
    :func:`transferred_power_oscillation`), so ``left <= right`` follows from
    ``||a|^t - |b|^t| <= |a - b|^t`` cube by cube.
    """
    if not 0 < t <= 1:
        raise ValueError(f"t must lie in (0, 1], got {t}")
    a = np.asarray(f.samples)
    small, large = fam.small(threshold), fam.large(threshold)
    pairs = [transferred_power_oscillation(a, small, i, t) for i in range(len(small.sides))]
    spread = lambda k: _scale_max(f.spec, small, lambda i: pairs[i][k])
    ar = np.abs(a) ** t
    big = _scale_max(f.spec, large, lambda i: cube_averages(ar, large, i)) ** (1.0 / t)
    lhs = np.maximum(spread(0), big)
    rhs = np.maximum(spread(1), big)
    return (_field(f.spec, lhs, "sharp_of_power", t, fam),
            _field(f.spec, rhs, "sharp_maximal_inhomogeneous", t, fam))
