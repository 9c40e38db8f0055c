"""Singular two-parameter integrals of the phonon Bose weight.

    T_{m,l}(k)      = int_0^1 int_0^inf mu^l C^m g(C) / (C^{2g} + k^2 mu^2) dC dmu
    J_{m,l}(k, k1)  = int_0^1 int_0^inf mu^l C^m g(C)
                      / ((C^{2g} + k^2 mu^2)(C^{2g} + k1^2 mu^2)) dC dmu

with ``g`` the collision exponent gamma.  The mu-integral is done in closed
form: with ``z = k^2 / C^{2g}``

    int_0^1 mu^l / (C^{2g} + k^2 mu^2) dmu = F_l(z) / C^{2g},
    F_l(z) = int_0^1 mu^l / (1 + z mu^2) dmu,

and the pair kernel reduces to the divided difference ``H_l(z, z1)`` of
``z F_l(z)``.  Both are evaluated without cancellation in every regime, so the
remaining C-integral is smooth apart from a transition near ``C = k^{1/g}``.
That integral uses composite Gauss-Legendre panels, geometric towards
``C = 0`` (where ``g ~ C^-2``) and uniform on the exponentially decaying tail.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DivergentIntegralError, DomainError
from .moments import moment

__all__ = [
    "TIndex",
    "F_mu",
    "H_mu",
    "t_integral",
    "t_zero",
    "t_deficit",
    "j_integral",
    "j_grid",
    "CGrid",
    "c_grid",
]

_SERIES_Z = 0.5
_SERIES_TERMS = 60
_NEAR_EQUAL = 1e-6


@dataclass(frozen=True)
class TIndex:
    """Exponents of a T or J integral: ``C**m``, ``mu**l``, collision exponent."""

    m: float
    l: int
    gamma: float

    def __post_init__(self):
        if self.l < 0 or int(self.l) != self.l:
            raise DomainError("mu exponent l must be a non-negative integer")
        if self.gamma < 0:
            raise DomainError("collision exponent gamma must be >= 0")

    @classmethod
    def of(cls, gamma: float, a: float, b: float, l: int) -> "TIndex":
        """Index ``C**(a*gamma + b)``, the form used throughout the solver."""
        return cls(a * gamma + b, l, gamma)


# ---------------------------------------------------------------------------
# closed-form mu integrals
# ---------------------------------------------------------------------------


def _series_F(l: int, z):
    # sum_j (-z)^j / (l + 2j + 1), |z| <= 0.5
    out = np.zeros_like(z)
    term = np.ones_like(z)
    for j in range(_SERIES_TERMS):
        out += term / (l + 2 * j + 1)
        term = term * (-z)
    return out


def F_mu(l: int, z):
    """``F_l(z) = int_0^1 mu^l / (1 + z mu^2) dmu`` for ``z >= 0`` (array-valued)."""
    z = np.asarray(z, dtype=float)
    small = z <= _SERIES_Z
    out = np.empty_like(z)
    if np.any(small):
        out[small] = _series_F(l, z[small])
    if np.any(~small):
        out[~small] = _large_F(l, z[~small])
    return out


def _large_F(l: int, z):
    # upward recurrence F_l = (1/(l-1) - F_{l-2}) / z is stable for z > 1/2
    if l % 2 == 0:
        r = np.sqrt(z)
        f = np.arctan(r) / r
        start = 0
    else:
        f = np.log1p(z) / (2.0 * z)
        start = 1
    for j in range(start + 2, l + 1, 2):
        f = (1.0 / (j - 1) - f) / z
    return f


def _dF_large(l: int, z):
    # z F_l'(z) = (1/(1+z) - (l+1) F_l(z)) / 2
    return (1.0 / (1.0 + z) - (l + 1) * _large_F(l, z)) / (2.0 * z)


def _phi_large(l: int, z):
    # z F_l(z) rewritten so that it never cancels for z > 1/2
    if l == 0:
        r = np.sqrt(z)
        return r * np.arctan(r)
    if l == 1:
        return 0.5 * np.log1p(z)
    return 1.0 / (l - 1) - _large_F(l - 2, z)


def H_mu(l: int, z, z1):
    """``H_l(z, z1) = int_0^1 mu^l / ((1 + z mu^2)(1 + z1 mu^2)) dmu``.

    Exactly symmetric: arguments are ordered before evaluation.
    """
    z, z1 = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(z1, dtype=float))
    hi = np.maximum(z, z1).ravel()
    lo = np.minimum(z, z1).ravel()
    out = np.empty_like(hi)

    small = hi <= _SERIES_Z
    if np.any(small):
        a, b = hi[small], lo[small]
        # complete homogeneous polynomials h_n(a, b), built from the larger argument
        acc = np.zeros_like(a)
        h = np.ones_like(a)
        bpow = np.ones_like(a)
        sign = 1.0
        for n in range(_SERIES_TERMS):
            acc += sign * h / (l + 2 * n + 1)
            bpow = bpow * b
            h = a * h + bpow
            sign = -sign
        out[small] = acc

    rest = ~small
    if np.any(rest):
        a, b = hi[rest], lo[rest]
        d = a - b
        near = d <= _NEAR_EQUAL * a
        res = np.empty_like(a)
        if np.any(near):
            mid = 0.5 * (a[near] + b[near])
            if l == 0:
                res[near] = 0.5 * (_large_F(0, mid) + 1.0 / (1.0 + mid))
            elif l == 1:
                res[near] = 0.5 / (1.0 + mid)
            else:
                res[near] = -_dF_large(l - 2, mid)
        far = ~near
        if np.any(far):
            a, b, d = a[far], b[far], d[far]
            if l == 1:
                res[far] = 0.5 * np.log1p(d / (1.0 + b)) / d
            elif l == 0:
                res[far] = (_phi_large(0, a) - _phi_x(0, b)) / d
            else:
                res[far] = -(_large_F(l - 2, a) - F_mu(l - 2, b)) / d
        out[rest] = res
    return out.reshape(z.shape)


def _phi_x(l: int, z):
    z = np.asarray(z, dtype=float)
    return z * F_mu(l, z)


# ---------------------------------------------------------------------------
# C quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CGrid:
    """Composite Gauss-Legendre nodes and weights on (c_lo, c_hi)."""

    nodes: np.ndarray
    weights: np.ndarray
    g: np.ndarray  # g(C) at the nodes


@lru_cache(maxsize=16)
def c_grid(c_lo: float = 1e-7, c_mid: float = 16.0, c_hi: float = 110.0,
           ratio: float = 1.2, tail_width: float = 1.0, order: int = 12) -> CGrid:
    """Graded composite Gauss-Legendre rule for integrals over C.

    Panels are geometric on ``[c_lo, c_mid]``, which covers the transition
    ``C ~ k^{1/gamma}`` for every wavenumber used, and uniform above.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    n_geo = int(np.ceil(np.log(c_mid / c_lo) / np.log(ratio)))
    geo = np.geomspace(c_lo, c_mid, n_geo + 1)
    lin = np.arange(c_mid, c_hi + 0.5 * tail_width, tail_width)
    edges = np.unique(np.concatenate((geo, lin)))
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    g = np.exp(-nodes) / np.expm1(-nodes) ** 2
    for arr in (nodes, weights, g):
        arr.setflags(write=False)
    return CGrid(nodes, weights, g)


# ---------------------------------------------------------------------------
# T and J
# ---------------------------------------------------------------------------


def _check_t(idx: TIndex, k):
    if np.any(k == 0) and not idx.m - 2 * idx.gamma > 1:
        raise DivergentIntegralError(
            f"T_({idx.m},{idx.l}) diverges at k = 0 (needs m - 2 gamma > 1)")
    if np.any(k > 0):
        small_c_power = idx.m - 2 if idx.l > 0 else idx.m - idx.gamma - 2
        if idx.gamma == 0:
            small_c_power = idx.m - 2
        if not small_c_power > -1:
            raise DivergentIntegralError(
                f"T_({idx.m},{idx.l}) diverges at C -> 0 for k != 0")


def t_integral(idx: TIndex, k):
    """``T_{m,l}(k)``; accepts a scalar or an array of wavenumbers.

    Depends on ``k`` only through ``|k|``.
    """
    karr = np.abs(np.asarray(k, dtype=float))
    _check_t(idx, karr)
    grid = c_grid()
    c = grid.nodes
    flat = karr.ravel()
    out = np.empty_like(flat)
    zero = flat == 0
    if np.any(zero):
        out[zero] = t_zero(idx)
    pos = ~zero
    if np.any(pos):
        c2g = c ** (2 * idx.gamma)
        base = grid.weights * c ** (idx.m - 2 * idx.gamma) * grid.g
        z = flat[pos, None] ** 2 / c2g[None, :]
        out[pos] = (F_mu(idx.l, z) * base).sum(axis=1)
    out = out.reshape(karr.shape)
    return float(out) if out.ndim == 0 else out


def t_zero(idx: TIndex) -> float:
    """``T_{m,l}(0) = g_{m-2gamma} / (l+1)``."""
    n = idx.m - 2 * idx.gamma
    if not n > 1:
        raise DivergentIntegralError(
            f"T_({idx.m},{idx.l})(0) diverges: m - 2 gamma = {n} <= 1")
    return moment(n) / (idx.l + 1)


def t_deficit(idx: TIndex, k):
    """``T_{m,l}(0) - T_{m,l}(k)`` without cancellation.

    Equals ``k^2 T_{m-2gamma, l+2}(k)``; the integrand uses the complement
    ``1/(l+1) - F_l(z) = z F_{l+2}(z)`` directly.
    """
    karr = np.abs(np.asarray(k, dtype=float))
    t_zero(idx)  # domain check
    grid = c_grid()
    c = grid.nodes
    c2g = c ** (2 * idx.gamma)
    base = grid.weights * c ** (idx.m - 2 * idx.gamma) * grid.g
    z = karr.ravel()[:, None] ** 2 / c2g[None, :]
    comp = np.where(z <= _SERIES_Z, z * F_mu(idx.l + 2, z),
                    1.0 / (idx.l + 1) - F_mu(idx.l, np.maximum(z, _SERIES_Z)))
    out = (comp * base).sum(axis=1).reshape(karr.shape)
    return float(out) if out.ndim == 0 else out


def _check_j(idx: TIndex, hi, lo) -> None:
    lower = TIndex(idx.m - 2 * idx.gamma, idx.l, idx.gamma)
    if np.any(hi == 0):
        # J(0, 0) = T_{m - 2 gamma, l}(0)
        t_zero(lower)
    one_zero = (lo == 0) & (hi > 0)
    if np.any(one_zero):
        # J(0, k1) = T_{m - 2 gamma, l}(k1)
        _check_t(lower, hi[one_zero])
    if np.any(lo > 0):
        # both arguments large at small C: H_l ~ C^{gamma min(l+1, 4)}
        power = idx.m - 2 - 4 * idx.gamma + idx.gamma * min(idx.l + 1, 4)
        if not power > -1:
            raise DivergentIntegralError(
                f"J_({idx.m},{idx.l}) diverges at C -> 0 for k, k1 != 0")


def j_integral(idx: TIndex, k, k1):
    """``J_{m,l}(k, k1)``; broadcasts over ``k`` and ``k1``, symmetric in the pair."""
    ka, kb = np.broadcast_arrays(np.abs(np.asarray(k, dtype=float)),
                                 np.abs(np.asarray(k1, dtype=float)))
    hi = np.maximum(ka, kb)
    lo = np.minimum(ka, kb)
    _check_j(idx, hi, lo)
    grid = c_grid()
    c = grid.nodes
    c2g = c ** (2 * idx.gamma)
    base = grid.weights * c ** (idx.m - 4 * idx.gamma) * grid.g
    flat_hi, flat_lo = hi.ravel(), lo.ravel()
    out = np.empty_like(flat_hi)
    chunk = max(1, 200_000 // c.size)
    for s in range(0, flat_hi.size, chunk):
        zh = flat_hi[s:s + chunk, None] ** 2 / c2g[None, :]
        zl = flat_lo[s:s + chunk, None] ** 2 / c2g[None, :]
        out[s:s + chunk] = (H_mu(idx.l, zh, zl) * base).sum(axis=1)
    out = out.reshape(hi.shape)
    return float(out) if out.ndim == 0 else out


def j_grid(idx: TIndex, k) -> np.ndarray:
    """``J_{m,l}(k_i, k_j)`` on all pairs of a positive wavenumber grid.

    Off-diagonal entries use one of two divided-difference forms,

        J = (k^2 T_{m-2g,l}(k) - k1^2 T_{m-2g,l}(k1)) / (k^2 - k1^2)
        J = -(T_{m,l-2}(k) - T_{m,l-2}(k1)) / (k^2 - k1^2)      (l >= 2)

    picking per pair whichever numerator varies more (less cancellation).
    The diagonal comes from :func:`j_integral`.
    """
    k = np.abs(np.asarray(k, dtype=float))
    if k.ndim != 1 or np.any(k == 0):
        raise DomainError("j_grid needs a 1-D grid of non-zero wavenumbers")
    if np.unique(k).size != k.size:
        raise DomainError("j_grid needs distinct wavenumbers")
    k2 = k * k
    dk2 = k2[:, None] - k2[None, :]
    np.fill_diagonal(dk2, 1.0)

    psi = k2 * np.atleast_1d(t_integral(TIndex(idx.m - 2 * idx.gamma, idx.l, idx.gamma), k))
    num_a = psi[:, None] - psi[None, :]
    scale_a = np.maximum(np.abs(psi)[:, None], np.abs(psi)[None, :])
    out = num_a / dk2
    if idx.l >= 2:
        tb = np.atleast_1d(t_integral(TIndex(idx.m, idx.l - 2, idx.gamma), k))
        num_b = -(tb[:, None] - tb[None, :])
        scale_b = np.maximum(np.abs(tb)[:, None], np.abs(tb)[None, :])
        use_b = np.abs(num_b) * scale_a > np.abs(num_a) * scale_b
        out = np.where(use_b, num_b / dk2, out)
    np.fill_diagonal(out, j_integral(idx, k, k))
    return out
