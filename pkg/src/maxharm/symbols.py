"""Symbols in the classes S^m_{rho,delta} and their multilinear analogues.

A :class:`Symbol` is stored as a short sum of separable terms
``a_t(x) * b_t(xi_1, ..., xi_l)``, which keeps multilinear quadrature cheap,
or (for anything else) as a general evaluator ``sigma(x, xi_1, ..., xi_l)``.
Only n = 1 symbols are supported; the product frequency space is R^l.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import GridSpec
from .littlewood_paley import LpPartition, phi_hat, vector_radius

TWO_PI = 2.0 * math.pi
DEFAULT_CEILING = 4.0 * math.pi**2 + 1.0


@dataclass(frozen=True)
class SymbolClassParams:
    """Order ``m``, exponents ``rho`` and ``delta``, linearity ``l``, dimension ``n``."""

    m: float
    rho: float
    delta: float
    l: int = 1
    n: int = 1

    def __post_init__(self):
        if not (0.0 <= self.delta <= self.rho < 1.0):
            raise ValueError(
                f"class parameters need 0 <= delta <= rho < 1, got rho={self.rho}, delta={self.delta}"
            )
        if int(self.l) < 1:
            raise ValueError(f"linearity l must be >= 1, got {self.l}")
        if self.n != 1:
            raise ValueError("symbols are implemented for n = 1 only")

    def as_dict(self) -> dict:
        return {"m": self.m, "rho": self.rho, "delta": self.delta, "l": self.l, "n": self.n}


@dataclass(frozen=True)
class SeparableTerm:
    """``x_factor(x) * xi_factor(xi_1, ..., xi_l)``; ``x_factor=None`` means 1."""

    x_factor: Optional[Callable]
    xi_factor: Callable

    def x_values(self, x):
        x = np.asarray(x, dtype=float)
        if self.x_factor is None:
            return np.ones(x.shape, dtype=complex)
        return np.asarray(self.x_factor(x), dtype=complex) * np.ones(x.shape)

    def xi_values(self, *xis):
        shape = np.broadcast(*xis).shape
        return np.asarray(self.xi_factor(*xis), dtype=complex) * np.ones(shape)


@dataclass(frozen=True, eq=False)
class Symbol:
    """A symbol with declared class parameters.

    Parameters
    ----------
    params : SymbolClassParams
        Declared class.
    terms : tuple of SeparableTerm
        Separable representation; empty when ``evaluator`` is used instead.
    evaluator : callable, optional
        ``evaluator(x, xi_1, ..., xi_l)`` with numpy broadcasting.
    descriptor : dict
        Family id, parameters and seed; enough to rebuild the symbol.
    freq_radius : float
        Bound on ``|xi_vec|`` outside which the symbol vanishes.
    """

    params: SymbolClassParams
    terms: tuple = ()
    evaluator: Optional[Callable] = None
    descriptor: dict = field(default_factory=dict)
    freq_radius: float = math.inf
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.terms and self.evaluator is None:
            raise ValueError("a symbol needs separable terms or an evaluator")

    @property
    def l(self) -> int:
        return self.params.l

    @property
    def separable(self) -> bool:
        return self.evaluator is None

    @property
    def x_independent(self) -> bool:
        return self.separable and all(t.x_factor is None for t in self.terms)

    def __call__(self, x, *xis):
        if len(xis) != self.l:
            raise ValueError(f"symbol takes {self.l} frequency arguments, got {len(xis)}")
        if self.evaluator is not None:
            return np.asarray(self.evaluator(x, *xis), dtype=complex)
        out = 0
        for t in self.terms:
            out = out + t.x_values(x) * t.xi_values(*xis)
        return np.asarray(out, dtype=complex)

    # grid tables --------------------------------------------------------
    def xi_axes(self, spec: GridSpec) -> list:
        """Open mesh of the (R^1)^l frequency grid."""
        return list(np.ix_(*([spec.xi] * self.l)))

    def factor_tables(self, spec: GridSpec):
        """Memoized ``(A, B)`` with ``A[t] = a_t(x_grid)``, ``B[t] = b_t(xi_grid)``."""
        if not self.separable:
            raise ValueError("factor tables exist only for separable symbols")
        key = ("factors", spec)
        if key not in self._memo:
            axes = self.xi_axes(spec)
            A = np.stack([t.x_values(spec.x) for t in self.terms])
            B = np.stack([t.xi_values(*axes) for t in self.terms])
            A.setflags(write=False)
            B.setflags(write=False)
            self._memo[key] = (A, B)
        return self._memo[key]

    def table(self, spec: GridSpec, x_index=None) -> np.ndarray:
        """``sigma(x_i, xi_vec)`` for the selected x rows (all rows by default)."""
        xs = spec.x if x_index is None else spec.x[np.asarray(x_index)]
        if self.separable:
            A, B = self.factor_tables(spec)
            A = A if x_index is None else A[:, np.asarray(x_index)]
            return np.tensordot(A.T, B, axes=(1, 0))
        axes = self.xi_axes(spec)
        X = xs.reshape((-1,) + (1,) * self.l)
        return np.asarray(self.evaluator(X, *[a[None, ...] for a in axes]), dtype=complex) * np.ones(
            (len(xs),) + (spec.N,) * self.l
        )

    def frequency_row(self, spec: GridSpec, i: int) -> np.ndarray:
        """``xi_vec -> sigma(x_i, xi_vec)`` at one grid point."""
        return self.table(spec, [i])[0]

    # transforms ----------------------------------------------------------
    def times_xi(self, g: Callable, freq_radius: float, **descr) -> "Symbol":
        """Multiply by an x-independent factor ``g(xi_1, ..., xi_l)``."""
        d = dict(self.descriptor, **descr)
        radius = min(self.freq_radius, freq_radius)
        if self.separable:
            terms = tuple(
                SeparableTerm(t.x_factor, _product_xi(t.xi_factor, g)) for t in self.terms
            )
            return Symbol(self.params, terms, None, d, radius)
        ev = self.evaluator

        def evaluator(x, *xis):
            return ev(x, *xis) * g(*xis)

        return Symbol(self.params, (), evaluator, d, radius)

    def with_params(self, params: SymbolClassParams) -> "Symbol":
        return Symbol(params, self.terms, self.evaluator, dict(self.descriptor), self.freq_radius)


def _product_xi(b: Callable, g: Callable) -> Callable:
    def xi_factor(*xis):
        return b(*xis) * g(*xis)

    return xi_factor


# families -------------------------------------------------------------------

def constant_symbol(value: complex = 1.0, params: Optional[SymbolClassParams] = None, l: int = 1) -> Symbol:
    params = params or SymbolClassParams(0.0, 0.0, 0.0, l)

    def xi_factor(*xis):
        return np.full(np.broadcast(*xis).shape, complex(value))

    return Symbol(params, (SeparableTerm(None, xi_factor),),
                  descriptor={"family": "constant", "value": [complex(value).real, complex(value).imag]})


def multiplier_symbol(func: Callable, params: SymbolClassParams, freq_radius: float = math.inf,
                      name: str = "multiplier") -> Symbol:
    """x-independent symbol ``func(xi_1, ..., xi_l)``."""
    return Symbol(params, (SeparableTerm(None, func),), descriptor={"family": name},
                  freq_radius=freq_radius)


def modulated_multiplier_symbol(v: float, func: Callable, params: SymbolClassParams,
                                freq_radius: float = math.inf) -> Symbol:
    """``e^{2 pi i v x} func(xi_vec)``."""
    def x_factor(x):
        return np.exp(1j * TWO_PI * v * x)

    return Symbol(params, (SeparableTerm(x_factor, func),),
                  descriptor={"family": "modulated_multiplier", "v": v}, freq_radius=freq_radius)


def general_symbol(evaluator: Callable, params: SymbolClassParams, freq_radius: float = math.inf,
                   name: str = "general") -> Symbol:
    return Symbol(params, (), evaluator, {"family": name}, freq_radius)


def modulation_frequency(k: int, rho: float) -> float:
    """``|v_k| = 2^{k rho} / (2 pi)`` so that d/dx brings exactly ``2^{k rho}``."""
    return 2.0 ** (k * rho) / TWO_PI


def unimodular_coefficients(K: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.exp(1j * TWO_PI * rng.random(K))


def max_modulation_order(spec: GridSpec, rho: float) -> int:
    """Largest ``K`` whose modulation and frequency support both fit the grid."""
    K = 0
    while (modulation_frequency(K + 1, rho) <= spec.nyquist
           and 2.0 ** (K + 2) <= spec.nyquist):
        K += 1
    return K


def dyadic_modulation_symbol(params: SymbolClassParams, K: int, seed: int = 0,
                             coefficients=None, spec: Optional[GridSpec] = None) -> Symbol:
    """``sum_{k=1}^K c_k 2^{km} Psi_hat(2^-k xi_vec) e^{2 pi i v_k x}``.

    ``Psi_hat`` is the radial annular profile on R^l, ``v_k = 2^{k rho}/(2 pi)``
    and the ``c_k`` are unimodular, drawn from ``seed`` unless given.

    Raises
    ------
    ValueError
        If, on ``spec``, the top modulation or the frequency support
        ``2^{K+1}`` passes the Nyquist frequency.
    """
    if K < 1:
        raise ValueError("need at least one annulus (K >= 1)")
    if spec is not None:
        top = modulation_frequency(K, params.rho)
        if top > spec.nyquist or 2.0 ** (K + 1) > spec.nyquist:
            raise ValueError(
                f"modulation 2^(K rho)/(2 pi) = {top:.4g} or support 2^(K+1) = {2.0 ** (K + 1):g} "
                f"exceeds Nyquist {spec.nyquist:g}; max admissible K = {max_modulation_order(spec, params.rho)}"
            )
    c = unimodular_coefficients(K, seed) if coefficients is None else np.asarray(coefficients, dtype=complex)
    if c.shape != (K,):
        raise ValueError(f"need {K} coefficients, got shape {c.shape}")
    terms = []
    for k in range(1, K + 1):
        terms.append(SeparableTerm(_modulation(modulation_frequency(k, params.rho), c[k - 1]),
                                   _scaled_annulus(k, 2.0 ** (k * params.m))))
    descr = {"family": "dyadic_modulation", "params": params.as_dict(), "K": K, "seed": seed}
    return Symbol(params, tuple(terms), None, descr, 2.0 ** (K + 1))


def _modulation(v: float, c: complex) -> Callable:
    def x_factor(x):
        return c * np.exp(1j * TWO_PI * v * x)

    return x_factor


def _scaled_annulus(k: int, amplitude: float) -> Callable:
    scale = 2.0**-k

    def xi_factor(*xis):
        r = vector_radius(*xis) * scale
        return amplitude * (phi_hat(r) - phi_hat(2.0 * r))

    return xi_factor


def oscillatory_symbol(m: float, rho: float, spec: Optional[GridSpec] = None) -> Symbol:
    """``(1 - phi_hat(xi)) (1 + |xi|^2)^{m/2} e^{i |xi|^{1-rho}}`` on R^1.

    x-independent, in ``S^m_{rho,0}``.
    """
    if not (0.0 < rho < 1.0):
        raise ValueError(f"rho in (0,1) required, got {rho}")

    def xi_factor(xi):
        a = np.abs(np.asarray(xi, dtype=float))
        return (1.0 - phi_hat(a)) * (1.0 + a**2) ** (m / 2.0) * np.exp(1j * a ** (1.0 - rho))

    params = SymbolClassParams(m, rho, 0.0, 1)
    return Symbol(params, (SeparableTerm(None, xi_factor),),
                  descriptor={"family": "oscillatory", "params": params.as_dict()})


# decomposition and dilation ---------------------------------------------

def band_limit(sigma: Symbol, p: LpPartition) -> Symbol:
    """Restrict ``sigma`` to ``|xi_vec| <= 2^K_max``, where the partition sums to one.

    The cutoff equals one on ``|xi_vec| <= 2^(K_max - 1)``, so the
    Littlewood-Paley pieces of the result add back up to it exactly.
    """
    def cutoff(*xis):
        return p.band_limit(vector_radius(*xis))

    return sigma.times_xi(cutoff, p.band, band_limited=p.K_max)


def lp_pieces(sigma: Symbol, p: LpPartition) -> list:
    """``[sigma * phi_hat, sigma * psi_hat_1, ..., sigma * psi_hat_Kmax]``.

    The pieces sum back to ``sigma`` only where the partition sums to one,
    so ``sigma`` must vanish beyond ``2^K_max`` (see :func:`band_limit`).
    """
    if p.total_dimension != sigma.l * sigma.params.n:
        raise ValueError(
            f"partition dimension {p.total_dimension} does not match symbol dimension "
            f"{sigma.l * sigma.params.n}"
        )
    if sigma.freq_radius > p.band:
        raise ValueError(
            f"symbol frequency support {sigma.freq_radius:g} exceeds the resolvable band "
            f"{p.band:g}; band-limit it first"
        )
    pieces = []
    for k in range(p.K_max + 1):
        hi = 2.0 if k == 0 else 2.0 ** (k + 1)
        pieces.append(sigma.times_xi(_piece_factor(p, k), hi, piece=k))
    return pieces


def _piece_factor(p: LpPartition, k: int) -> Callable:
    def g(*xis):
        return p.piece(k, vector_radius(*xis))

    return g


def dilated_params(params: SymbolClassParams, lam: float) -> SymbolClassParams:
    """Class of ``sigma_k(2^{-lam k} x, 2^{lam k} xi)``."""
    e = (params.rho - lam) / (1.0 - lam)
    return SymbolClassParams(params.m / (1.0 - lam), e, e, params.l, params.n)


def dilate_symbol(sigma_k: Symbol, lam: float, k: int, spec: Optional[GridSpec] = None) -> Symbol:
    """``tau_k(x, xi_vec) = sigma_k(2^{-lam k} x, 2^{lam k} xi_vec)``.

    ``spec`` is the grid of the undilated problem; when given, the dilated
    frequency support must fit inside the Nyquist band of
    ``spec.dilated(2^{lam k})``.
    """
    rho = sigma_k.params.rho
    if not (0.0 <= lam <= rho):
        raise ValueError(f"lambda must lie in [0, rho] = [0, {rho}], got {lam}")
    if lam == 0.0:
        return sigma_k
    s = 2.0 ** (lam * k)
    radius = sigma_k.freq_radius / s
    if spec is not None:
        target = spec.dilated(s)
        if radius > target.nyquist:
            raise ValueError(
                f"dilated frequency support {radius:g} exceeds Nyquist {target.nyquist:g}"
            )
    params = dilated_params(sigma_k.params, lam)
    descr = dict(sigma_k.descriptor, dilation={"lambda": lam, "k": k})
    if sigma_k.separable:
        terms = tuple(
            SeparableTerm(_compress_x(t.x_factor, 1.0 / s), _stretch_xi(t.xi_factor, s))
            for t in sigma_k.terms
        )
        return Symbol(params, terms, None, descr, radius)
    ev = sigma_k.evaluator

    def evaluator(x, *xis):
        return ev(np.asarray(x) / s, *[np.asarray(a) * s for a in xis])

    return Symbol(params, (), evaluator, descr, radius)


def _compress_x(a: Optional[Callable], c: float) -> Optional[Callable]:
    if a is None:
        return None

    def x_factor(x):
        return a(np.asarray(x) * c)

    return x_factor


def _stretch_xi(b: Callable, s: float) -> Callable:
    def xi_factor(*xis):
        return b(*[np.asarray(a) * s for a in xis])

    return xi_factor


# seminorm estimation ------------------------------------------------------

_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
}


@dataclass
class SeminormReport:
    """Estimated ``C_{alpha, beta}`` for ``alpha, beta_j <= max_order``.

    ``entries`` maps ``(alpha, (beta_1, ..., beta_l))`` to the sup over the
    grid of ``|finite-difference derivative| / (1 + sum|xi_j|)^{m + delta alpha - rho |beta|}``.
    """

    entries: dict
    declared: SymbolClassParams
    ceiling: float

    @property
    def max_entry(self) -> float:
        return max(self.entries.values())

    @property
    def passed(self) -> bool:
        return self.max_entry <= self.ceiling

    def entry(self, alpha: int, beta) -> float:
        return self.entries[(alpha, tuple(beta))]


def _stencil(order: int, step: float) -> dict:
    return {o: w / step**order for o, w in _STENCILS[order].items()}


def estimate_seminorms(sigma: Symbol, declared: SymbolClassParams, spec: GridSpec,
                       max_order: int = 2, ceiling: float = DEFAULT_CEILING,
                       x_stride: int = 1, max_block: int = 1 << 22) -> SeminormReport:
    """Finite-difference certification of class membership on ``spec``.

    Central differences use step ``h`` in x and ``1/L`` in each xi_j.  The
    sup runs over x-grid points (every ``x_stride``-th) and the full
    frequency grid; the weight is ``(1 + |xi_1| + ... + |xi_l|)`` raised to
    ``m + delta alpha - rho |beta|``.
    """
    if max_order not in (0, 1, 2):
        raise ValueError("max_order must be 0, 1 or 2")
    l = sigma.l
    if declared.l != l:
        raise ValueError("declared linearity differs from the symbol's")
    xs = spec.x[::x_stride]
    h, d = spec.h, spec.dxi
    axes = sigma.xi_axes(spec)
    l1 = 1.0 + sum(np.abs(a) for a in axes)
    orders = range(max_order + 1)
    entries = {}

    if sigma.separable:
        x_diffs = {a: _x_derivs(sigma.terms, xs, a, h) for a in orders}
        xi_cache = {}
        for beta in itertools.product(orders, repeat=l):
            B = _xi_derivs(sigma.terms, axes, beta, d, xi_cache)
            for alpha in orders:
                expo = declared.m + declared.delta * alpha - declared.rho * sum(beta)
                entries[(alpha, beta)] = _sup_ratio(x_diffs[alpha], B, l1**expo, max_block)
    else:
        for alpha in orders:
            for beta in itertools.product(orders, repeat=l):
                D = _general_derivative(sigma, xs, axes, alpha, beta, h, d, max_block)
                expo = declared.m + declared.delta * alpha - declared.rho * sum(beta)
                entries[(alpha, beta)] = float(np.max(D / l1**expo))
    for key, val in entries.items():
        if not math.isfinite(val):
            raise ValueError(f"non-finite difference quotient at {key}")
    return SeminormReport(entries, declared, ceiling)


def _x_derivs(terms, xs, order: int, h: float) -> np.ndarray:
    """``D^order a_t`` at ``xs`` for every term, shape ``(len(xs), T)``."""
    stencil = _stencil(order, h)
    out = np.zeros((len(xs), len(terms)), dtype=complex)
    for j, t in enumerate(terms):
        if t.x_factor is None:
            out[:, j] = 1.0 if order == 0 else 0.0
            continue
        out[:, j] = sum(w * t.x_values(xs + o * h) for o, w in stencil.items())
    return out


def _xi_derivs(terms, axes, beta, d, cache) -> np.ndarray:
    stencils = [_stencil(b, d) for b in beta]
    shape = np.broadcast(*axes).shape
    out = np.zeros((len(terms),) + shape, dtype=complex)
    for offsets in itertools.product(*[sorted(s) for s in stencils]):
        w = math.prod(s[o] for s, o in zip(stencils, offsets))
        if offsets not in cache:
            shifted = [a + o * d for a, o in zip(axes, offsets)]
            cache[offsets] = np.stack([t.xi_values(*shifted) for t in terms])
        out += w * cache[offsets]
    return out


def _sup_ratio(A: np.ndarray, B: np.ndarray, weight: np.ndarray, max_block: int) -> float:
    """``max_{x, xi} |sum_t A[x, t] B[t, xi]| / weight[xi]``."""
    T = B.shape[0]
    Bf = B.reshape(T, -1)
    wf = np.broadcast_to(weight, B.shape[1:]).reshape(-1)
    live = np.flatnonzero(np.any(Bf != 0, axis=0))
    if live.size == 0:
        return 0.0
    Bw = Bf[:, live] / wf[live]
    if not np.any(A):
        return 0.0
    best = 0.0
    step = max(1, max_block // max(1, A.shape[0]))
    for s in range(0, Bw.shape[1], step):
        block = np.abs(A @ Bw[:, s:s + step])
        best = max(best, float(block.max()))
    return best


def _general_derivative(sigma: Symbol, xs, axes, alpha, beta, h, d, max_block) -> np.ndarray:
    sx = _stencil(alpha, h)
    sxi = [_stencil(b, d) for b in beta]
    shape = np.broadcast(*axes).shape
    size = int(np.prod(shape))
    rows = max(1, max_block // max(1, size))
    best = np.zeros(shape)
    for s in range(0, len(xs), rows):
        xc = xs[s:s + rows].reshape((-1,) + (1,) * len(axes))
        acc = np.zeros((xc.shape[0],) + shape, dtype=complex)
        for ox, wx in sx.items():
            for offsets in itertools.product(*[sorted(t) for t in sxi]):
                w = wx * math.prod(t[o] for t, o in zip(sxi, offsets))
                shifted = [(a + o * d)[None, ...] for a, o in zip(axes, offsets)]
                acc += w * sigma(xc + ox * h, *shifted)
        best = np.maximum(best, np.abs(acc).max(axis=0))
    return best
