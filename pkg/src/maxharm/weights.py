"""Weights, Muckenhoupt constants and the multilinear product weight."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, GridSpec
from .maximal import CubeFamily, cube_averages, hl_maximal


@dataclass(frozen=True, eq=False)
class Weight:
    """Strictly positive real density on a grid."""

    values: GridFunction
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.values.samples)
        if np.iscomplexobj(s) and np.any(s.imag != 0):
            raise ValueError("weights are real")
        if not np.all(s.real > 0):
            raise ValueError("weights must be strictly positive")

    @property
    def spec(self) -> GridSpec:
        return self.values.spec

    @property
    def samples(self) -> np.ndarray:
        return np.asarray(self.values.samples).real

    def scaled(self, c: float) -> "Weight":
        return Weight(self.values.with_samples(self.samples * c), dict(self.descriptor, scale=c))


def power_weight(a: float, spec: GridSpec) -> Weight:
    """``max(|x|, h/2)^a`` with ``|x|`` the distance to the origin in the box."""
    if abs(a) >= 8 * spec.n:
        raise ValueError(f"|a| must stay below {8 * spec.n}, got {a}")
    r = np.maximum(spec.radius(), spec.h / 2.0)
    vals = np.ones(spec.shape) if a == 0 else r**a
    return Weight(GridFunction(spec, vals), {"family": "power", "a": a})


def constant_weight(c: float, spec: GridSpec) -> Weight:
    return Weight(GridFunction(spec, np.full(spec.shape, float(c))), {"family": "constant", "c": c})


def ap_constant(w: Weight, p: float, fam: CubeFamily) -> float:
    """``sup_Q avg_Q(w) * avg_Q(w^{-1/(p-1)})^{p-1}`` over the family.

    ``p = 1`` uses ``sup_x M w(x) / w(x)``.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    s = w.samples
    if p == 1:
        Mw = hl_maximal(w.values, 1.0, fam).samples
        return float(np.max(Mw / s))
    dual = s ** (-1.0 / (p - 1.0))
    best = 0.0
    for i in range(len(fam.sides)):
        val = cube_averages(s, fam, i) * cube_averages(dual, fam, i) ** (p - 1.0)
        best = max(best, float(val.max()))
    return best


def conjugate(p: float) -> float:
    return math.inf if p == 1 else p / (p - 1.0)


@dataclass(frozen=True, eq=False)
class WeightTuple:
    """``l`` weights with exponents ``p_1..p_l`` and ``1/p = sum 1/p_j``."""

    weights: tuple
    exponents: tuple

    def __post_init__(self):
        if len(self.weights) != len(self.exponents) or not self.weights:
            raise ValueError("need one exponent per weight")
        for p in self.exponents:
            if not (1.0 < p < math.inf):
                raise ValueError(f"exponents must lie in (1, inf), got {p}")
        spec = self.weights[0].spec
        if any(w.spec != spec for w in self.weights):
            raise ValueError("weights live on different grids")

    @property
    def l(self) -> int:
        return len(self.weights)

    @property
    def p(self) -> float:
        return 1.0 / sum(1.0 / q for q in self.exponents)

    @property
    def spec(self) -> GridSpec:
        return self.weights[0].spec

    def with_exponents(self, exponents) -> "WeightTuple":
        return WeightTuple(self.weights, tuple(exponents))


def product_weight(t: WeightTuple) -> Weight:
    """``v_w = prod_j w_j^{p/p_j}``."""
    p = t.p
    logv = sum((p / pj) * np.log(w.samples) for w, pj in zip(t.weights, t.exponents))
    return Weight(GridFunction(t.spec, np.exp(logv)),
                  {"family": "product", "parts": [w.descriptor for w in t.weights],
                   "exponents": list(t.exponents)})


def multilinear_ap_constant(t: WeightTuple, fam: CubeFamily) -> float:
    """``sup_Q avg_Q(v_w)^{1/p} prod_j avg_Q(w_j^{1 - p_j'})^{1/p_j'}``.

    The dual exponent on each factor makes the bracket invariant under
    ``w_j -> c w_j``.
    """
    v = product_weight(t).samples
    p = t.p
    best = 0.0
    for i in range(len(fam.sides)):
        val = cube_averages(v, fam, i) ** (1.0 / p)
        for w, pj in zip(t.weights, t.exponents):
            pd = conjugate(pj)
            val = val * cube_averages(w.samples ** (1.0 - pd), fam, i) ** (1.0 / pd)
        best = max(best, float(val.max()))
    return best
