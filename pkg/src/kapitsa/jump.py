"""Temperature jump by successive approximations in powers of (1 - q).

Each order solves ``Lambda(k) E^(i)(k) = b^(i)(k)`` on a wavenumber grid,

    b^(0) = -B T_1(k) + eps_0 T_2(k),
    b^(i) = eps_i T_2(k) - (1/pi) int_0^inf J(k, k1) E^(i-1)(k1) dk1,

with ``T_1 = (T_{3g+3,2}, -ik T_{2g+3,4})``, ``T_2 = (T_{3g+4,1}, -ik T_{2g+4,3})``
and ``J`` the Neumann matrix.  ``eps_i`` is fixed by requiring the first
source component to vanish at ``k = 0``; this removes the pole that
``Lambda^{-1} = D/(k^2 omega)`` would otherwise create.

Complex vectors are carried in reduced real form: ``E = (E0, i e1)`` with
``E0`` even and ``e1`` odd in ``k``.  The first source component is built
directly from the integral deficits ``T(0) - T(k) = k^2 T_{m-2g,l+2}(k)`` so
it is free of cancellation near ``k = 0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .dispersion import DispersionTables, dispersion_tables
from .errors import DomainError, ResidualSingularityError, SingularOrderError, TruncationError
from .kernels import TIndex, j_grid, t_deficit, t_integral, t_zero
from .moments import moment
from .params import ModelParams, PhysicalParams

__all__ = [
    "KGrid",
    "SpectralVector",
    "JumpReport",
    "SeriesWarning",
    "excitation_energy",
    "phonon_energy",
    "free_particle_energy",
    "epsilon0",
    "epsilon0_bracket_root",
    "zeroth_spectral",
    "next_order",
    "epsilon_T",
    "b_plus_from_flux",
    "jump_coefficient",
    "kapitsa_resistance",
]

# growth faster than k^-(1 + tol) at the smallest nodes counts as a pole
_GROWTH_TOL = 0.05
_TAIL_RTOL = 1e-6


class SeriesWarning(UserWarning):
    """The (1 - q) series shows no sign of convergence."""


# ---------------------------------------------------------------------------
# excitation spectrum
# ---------------------------------------------------------------------------


def excitation_energy(p, phys: PhysicalParams):
    """Bogoliubov energy ``sqrt(u0^2 p^2 + (p^2/2m)^2)`` (SI momentum in, J out)."""
    if phys.m_mass is None:
        raise DomainError("excitation_energy needs the particle mass m_mass")
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise DomainError("momentum must be non-negative")
    out = np.hypot(phys.u0 * p, p * p / (2.0 * phys.m_mass))
    return float(out) if out.ndim == 0 else out


def phonon_energy(p, u0: float):
    """Low-momentum limit ``u0 |p|``."""
    return u0 * np.abs(p)


def free_particle_energy(p, m: float):
    """High-momentum (or ``u0 = 0``) limit ``p^2 / 2m``."""
    return np.asarray(p, dtype=float) ** 2 / (2.0 * m)


# ---------------------------------------------------------------------------
# grid and containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KGrid:
    """Logarithmic wavenumber nodes with Simpson weights in ``ln k``.

    ``weights`` integrate over ``[k_min, k_max]``; the two end intervals
    ``(0, k_min)`` and ``(k_max, inf)`` are handled by power-law corrections
    in :func:`integrate_k`.
    """

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def log(cls, k_min: float = 1e-4, k_max: float = 1e3, n: int = 400) -> "KGrid":
        if not 0 < k_min < k_max or n < 8:
            raise DomainError("need 0 < k_min < k_max and at least 8 nodes")
        u = np.linspace(math.log(k_min), math.log(k_max), n)
        k = np.exp(u)
        w = integrate.simpson(np.diag(k), x=u)
        k.setflags(write=False)
        w.setflags(write=False)
        return cls(k, w)

    @classmethod
    def for_gamma(cls, gamma: float, k_min: float = 1e-4, n: int = 400) -> "KGrid":
        """Default grid: ``k_max = 10^(2 gamma + 1)``, at least 1e7.

        The integrals only reach their large-k power law once ``k^(1/gamma)``
        is well past the peak of ``C^m g(C)``, so the upper cut must scale
        with gamma for the k1-tail to stay below 1e-6 of the integral.
        """
        return cls.log(k_min, max(1e7, 10.0 ** (2.0 * gamma + 1.0)), n)

    @property
    def k_min(self) -> float:
        return float(self.nodes[0])

    @property
    def k_max(self) -> float:
        return float(self.nodes[-1])

    def __len__(self) -> int:
        return self.nodes.size

    def __hash__(self):
        return hash((self.nodes.tobytes(), self.weights.tobytes()))

    def __eq__(self, other):
        return (isinstance(other, KGrid) and np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.weights, other.weights))


def _local_power(f_a, f_b, k_a, k_b):
    """Exponent p of ``f ~ k^p`` between two nodes; ``nan`` where undefined."""
    with np.errstate(divide="ignore", invalid="ignore"):
        same = (f_a * f_b) > 0
        p = np.log(np.abs(f_b) / np.abs(f_a)) / math.log(k_b / k_a)
    return np.where(same, p, np.nan)


def integrate_k(f: np.ndarray, grid: KGrid):
    """``int_0^inf f(k) dk`` along the last axis, with end corrections.

    Returns ``(value, head, tail)``.  The head on ``(0, k_min)`` and the tail
    on ``(k_max, inf)`` assume the local power law measured at the two
    outermost nodes.  A head exponent ``<= -1`` or a tail exponent ``>= -1``
    means the integral diverges and raises :class:`TruncationError`.
    """
    k = grid.nodes
    body = f @ grid.weights
    p0 = _local_power(f[..., 0], f[..., 1], k[0], k[1])
    p0 = np.where(np.isnan(p0), 0.0, p0)
    if np.any(p0 <= -1.0 + 1e-3):
        raise TruncationError(
            f"k1-integral diverges at k1 -> 0 (local exponent {np.min(p0):.3f})",
            tail_bound=math.inf)
    head = f[..., 0] * k[0] / (p0 + 1.0)
    pn = _local_power(f[..., -2], f[..., -1], k[-2], k[-1])
    nonzero = f[..., -1] != 0
    if np.any(nonzero & ~(pn < -1.0)):
        worst = np.nanmax(np.where(nonzero, pn, -np.inf))
        raise TruncationError(
            f"k1-integral tail does not decay fast enough (exponent {worst:.3f})",
            tail_bound=math.inf)
    tail = np.where(nonzero, -f[..., -1] * k[-1] / np.where(nonzero, pn + 1.0, 1.0), 0.0)
    return body + head + tail, head, tail


@dataclass
class SpectralVector:
    """``E(k) = (E0(k), E1(k))`` at the grid nodes; ``E1`` is purely imaginary."""

    grid: KGrid
    e0: np.ndarray
    e1: np.ndarray
    order: int
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def from_reduced(cls, grid, e0, e1_imag, order, diagnostics=None):
        return cls(grid, np.asarray(e0, dtype=complex), 1j * np.asarray(e1_imag, dtype=float),
                   order, dict(diagnostics or {}))

    @property
    def e0_real(self) -> np.ndarray:
        return self.e0.real

    @property
    def e1_imag(self) -> np.ndarray:
        return self.e1.imag

    def check_structure(self, rtol: float = 1e-10) -> None:
        """E0 real and E1 purely imaginary to ``rtol`` of their magnitudes."""
        s0 = max(np.max(np.abs(self.e0)), 1e-300)
        s1 = max(np.max(np.abs(self.e1)), 1e-300)
        if np.max(np.abs(self.e0.imag)) > rtol * s0 or np.max(np.abs(self.e1.real)) > rtol * s1:
            raise DomainError("spectral vector lost its real/imaginary structure")


@dataclass
class JumpReport:
    gamma: float
    q: float
    b_plus: float
    orders_used: int
    epsilon_terms: list[float]
    epsilon_T: float
    C_coeff: float
    R: float | None
    epsilon0_closed_form: float
    converged: bool = True
    diagnostics: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "q": self.q,
            "b_plus": self.b_plus,
            "orders": self.orders_used,
            "epsilon_terms": list(self.epsilon_terms),
            "epsilon_T": self.epsilon_T,
            "epsilon0_closed_form": self.epsilon0_closed_form,
            "C": self.C_coeff,
            "R_SI": self.R,
            "converged": self.converged,
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# zeroth order
# ---------------------------------------------------------------------------


def epsilon0(params: ModelParams) -> float:
    """Zeroth-order jump per unit B+: ``2 g_{g+3} / (3 g_{g+4})``."""
    g = params.gamma
    return 2.0 * moment(g + 3) / (3.0 * moment(g + 4))


def epsilon0_bracket_root(params: ModelParams, k0: float = 1e-4) -> float:
    """eps_0 as the k -> 0 limit of the root of ``T_{3g+3,2}(k) - eps T_{3g+4,1}(k)``.

    The root ``eps(k)`` approaches its limit like a power of ``k``; three
    values at ``k0, k0/2, k0/4`` are combined by Aitken's delta-squared.
    """
    g = params.gamma
    i1 = TIndex.of(g, 3, 3, 2)
    i2 = TIndex.of(g, 3, 4, 1)
    ks = k0 * np.array([1.0, 0.5, 0.25])
    num = t_zero(i1) - t_deficit(i1, ks)
    den = t_zero(i2) - t_deficit(i2, ks)
    s0, s1, s2 = num / den
    d2 = (s2 - s1) - (s1 - s0)
    if d2 == 0:
        return float(s2)
    return float(s2 - (s2 - s1) ** 2 / d2)


def _zeroth_sources(k, gamma: float, b_plus: float, eps0: float):
    """Reduced source ``(b0, beta1)`` for signed ``k``; ``b = (b0, i beta1)``."""
    g = gamma
    g3, g4 = moment(g + 3), moment(g + 4)
    k2 = k * k
    const = -b_plus * g3 / 3.0 + eps0 * g4 / 2.0
    b0 = const + k2 * (b_plus * t_integral(TIndex.of(g, 1, 3, 4), k)
                       - eps0 * t_integral(TIndex.of(g, 1, 4, 3), k))
    beta1 = k * (b_plus * t_integral(TIndex.of(g, 2, 3, 4), k)
                 - eps0 * t_integral(TIndex.of(g, 2, 4, 3), k))
    return b0, beta1


def _solve_reduced(tab: DispersionTables, b0, beta1):
    """``E = D b / (k^2 omega)`` with the explicit powers of k cancelled."""
    k = tab.k
    om = tab.omega()
    e0 = (3.0 * tab.t_g3_4 * b0 / tab.g3 + 3.0 * tab.t_2g3_2 * (beta1 / k) / tab.g3) / om
    e1 = (tab.t_g4_2 * beta1 / tab.g4 - tab.t_2g4_2 * (b0 / k) / tab.g4) / om
    return e0, e1


def zeroth_components(k, params: ModelParams, b_plus: float = 1.0, eps0: float | None = None):
    """Reduced ``(E0, e1)`` of the zeroth order at arbitrary signed ``k != 0``.

    ``E0`` is even and ``e1`` odd in ``k``; ``E1 = i e1``.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(k == 0):
        raise DomainError("k = 0 is excluded; use limits")
    if eps0 is None:
        eps0 = b_plus * epsilon0(params)
    tab = dispersion_tables(np.abs(k), params.gamma)
    tab = DispersionTables(k, tab.gamma, tab.t_g4_2, tab.t_g3_4, tab.t_2g3_2, tab.t_2g4_2,
                           tab.g3, tab.g4)
    b0, beta1 = _zeroth_sources(k, params.gamma, b_plus, eps0)
    return _solve_reduced(tab, b0, beta1)


def _growth_exponent(grid: KGrid, e0, e1) -> float:
    """Largest ``p`` with ``|E| ~ k^-p`` fitted on the three smallest nodes."""
    lk = np.log(grid.nodes[:3])
    scale = max(np.max(np.abs(e0)), np.max(np.abs(e1)))
    worst = -math.inf
    for comp in (e0, e1):
        a = np.abs(comp[:3])
        # components at round-off level carry no growth information
        if np.all(a > 1e-12 * scale):
            slope = np.polyfit(lk, np.log(a), 1)[0]
            worst = max(worst, -slope)
    return float(worst) if worst > -math.inf else 0.0


def _check_growth(grid: KGrid, e0, e1, order: int) -> float:
    p = _growth_exponent(grid, e0, e1)
    if p > 1.0 + _GROWTH_TOL:
        raise ResidualSingularityError(
            f"order-{order} amplitude grows like k^-{p:.3f} as k -> 0", exponent=p)
    return p


def zeroth_spectral(kgrid: KGrid, params: ModelParams, b_plus: float = 1.0,
                    eps0: float | None = None) -> SpectralVector:
    """Zeroth-order amplitude ``E^(0)`` on ``kgrid``.

    ``eps0`` defaults to the pole-eliminating value ``b_plus * epsilon0``.
    """
    if eps0 is None:
        eps0 = b_plus * epsilon0(params)
    e0, e1 = zeroth_components(kgrid.nodes, params, b_plus, eps0)
    p = _check_growth(kgrid, e0, e1, 0)
    g4 = moment(params.gamma + 4)
    residual = abs(-b_plus * moment(params.gamma + 3) / 3.0 + eps0 * g4 / 2.0) / (g4 / 2.0)
    diag = {"order": 0, "epsilon": eps0, "growth_exponent": p,
            "regularity_residual": residual}
    return SpectralVector.from_reduced(kgrid, e0, e1, 0, diag)


# ---------------------------------------------------------------------------
# higher orders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _NeumannTables:
    tab: DispersionTables
    j_2g4_3: np.ndarray
    j_3g3_3: np.ndarray
    j_3g4_3: np.ndarray
    j_4g3_3: np.ndarray
    t_2g4_1: np.ndarray
    t_2g4_3: np.ndarray
    def_3g4_1: np.ndarray


_NEUMANN_CACHE: dict = {}


def _neumann_tables(grid: KGrid, gamma: float) -> _NeumannTables:
    key = (hash(grid), float(gamma))
    hit = _NEUMANN_CACHE.get(key)
    if hit is not None:
        return hit
    g, k = gamma, grid.nodes
    out = _NeumannTables(
        tab=dispersion_tables(k, g),
        j_2g4_3=j_grid(TIndex.of(g, 2, 4, 3), k),
        j_3g3_3=j_grid(TIndex.of(g, 3, 3, 3), k),
        j_3g4_3=j_grid(TIndex.of(g, 3, 4, 3), k),
        j_4g3_3=j_grid(TIndex.of(g, 4, 3, 3), k),
        t_2g4_1=np.atleast_1d(t_integral(TIndex.of(g, 2, 4, 1), k)),
        t_2g4_3=np.atleast_1d(t_integral(TIndex.of(g, 2, 4, 3), k)),
        def_3g4_1=np.atleast_1d(t_deficit(TIndex.of(g, 3, 4, 1), k)),
    )
    if len(_NEUMANN_CACHE) > 8:
        _NEUMANN_CACHE.clear()
    _NEUMANN_CACHE[key] = out
    return out


def _tail_ratio(tail, value) -> float:
    scale = np.max(np.abs(value))
    return float(np.max(np.abs(tail)) / scale) if scale > 0 else 0.0


def next_order(prev: SpectralVector, params: ModelParams, neumann: bool = True):
    """Return ``(eps_i, E^(i))`` from ``E^(i-1)``.

    ``eps_i`` makes the first source component vanish at ``k = 0``:
    ``eps_i g_{g+4}/2 = (1/pi) int J_{4g+4,1}(0,k1) E0(k1) dk1 / g_{g+4}`` with
    ``J_{4g+4,1}(0,k1) = T_{2g+4,1}(k1)``.  ``neumann=False`` zeroes the
    kernel, which must give ``eps_i = 0`` and ``E^(i) = 0``.
    """
    grid = prev.grid
    order = prev.order + 1
    n = len(grid)
    if not neumann:
        zero = np.zeros(n)
        diag = {"order": order, "epsilon": 0.0, "neumann": False}
        return 0.0, SpectralVector.from_reduced(grid, zero, zero, order, diag)

    g = params.gamma
    nt = _neumann_tables(grid, g)
    tab = nt.tab
    g3, g4 = tab.g3, tab.g4
    k = grid.nodes
    e0, e1 = prev.e0_real, prev.e1_imag

    t2_zero = t_zero(TIndex.of(g, 3, 4, 1))
    if not t2_zero > 0:
        raise SingularOrderError("T_{3g+4,1}(0) vanishes; eps_i undetermined")
    eps_int, _, eps_tail = integrate_k(nt.t_2g4_1 * e0, grid)
    eps_i = float(eps_int / (math.pi * g4 * t2_zero))

    # first component, with eps_i's defining bracket removed exactly
    f0 = (k * k)[:, None] * nt.j_2g4_3 * e0[None, :] / g4 \
        - 3.0 * k[:, None] * nt.j_3g3_3 * e1[None, :] / g3
    i0, _, tail0 = integrate_k(f0, grid)
    b0 = -eps_i * nt.def_3g4_1 + i0 / math.pi
    # second component: -ik eps T_{2g+4,3} - (1/pi) int (j22 e1 - j21 E0)
    f1 = 3.0 * nt.j_4g3_3 * e1[None, :] / g3 - k[:, None] * nt.j_3g4_3 * e0[None, :] / g4
    i1, _, tail1 = integrate_k(f1, grid)
    beta1 = -eps_i * k * nt.t_2g4_3 - i1 / math.pi

    tail_ratio = max(_tail_ratio(tail0, i0), _tail_ratio(tail1, i1),
                     abs(float(eps_tail)) / max(abs(float(eps_int)), 1e-300))
    if tail_ratio > _TAIL_RTOL:
        raise TruncationError(
            f"order-{order} k1-tail is {tail_ratio:.2e} of the integral (limit {_TAIL_RTOL:g})",
            tail_bound=tail_ratio)

    e0_new, e1_new = _solve_reduced(tab, b0, beta1)
    p = _check_growth(grid, e0_new, e1_new, order)
    diag = {"order": order, "epsilon": eps_i, "growth_exponent": p,
            "tail_ratio": tail_ratio,
            "source_at_kmin": [float(b0[0]), float(beta1[0])]}
    if p > 1.0 - _GROWTH_TOL:
        diag["note"] = "amplitude has a 1/k pole; the next eps integral diverges at k1 -> 0"
    return eps_i, SpectralVector.from_reduced(grid, e0_new, e1_new, order, diag)


# ---------------------------------------------------------------------------
# assembled outputs
# ---------------------------------------------------------------------------


def _q_factor(q: float) -> float:
    if not 0.0 <= q < 1.0:
        raise DomainError("specular coefficient must satisfy 0 <= q < 1")
    return (1.0 + q) / (1.0 - q)


def epsilon_T(params: ModelParams, orders: int = 2, b_plus: float = 1.0,
              kgrid: KGrid | None = None, neumann: bool = True,
              phys: PhysicalParams | None = None) -> JumpReport:
    """Assemble ``eps_T = (1+q)/(1-q) sum_i eps_i (1-q)^i`` over ``orders`` terms."""
    if int(orders) != orders or orders < 1:
        raise DomainError("orders must be an integer >= 1")
    orders = int(orders)
    q = params.q
    eps0 = b_plus * epsilon0(params)
    terms = [eps0]
    diagnostics = [{"order": 0, "epsilon": eps0}]
    if orders > 1:
        kgrid = kgrid or KGrid.for_gamma(params.gamma)
        vec = zeroth_spectral(kgrid, params, b_plus, eps0)
        diagnostics[0] = vec.diagnostics
        for _ in range(1, orders):
            eps_i, vec = next_order(vec, params, neumann=neumann)
            terms.append(eps_i)
            diagnostics.append(vec.diagnostics)

    converged = True
    mags = [abs(t) for t in terms]
    rising = 0
    for a, b in zip(mags, mags[1:]):
        rising = rising + 1 if b >= a and b > 0 else 0
        if rising >= 3:
            converged = False
    if not converged:
        warnings.warn("series terms did not decrease over three consecutive orders",
                      SeriesWarning, stacklevel=2)

    total = _q_factor(q) * sum(t * (1.0 - q) ** i for i, t in enumerate(terms))
    R = kapitsa_resistance(params, phys) if phys is not None else None
    return JumpReport(gamma=params.gamma, q=q, b_plus=b_plus, orders_used=orders,
                      epsilon_terms=terms, epsilon_T=total,
                      C_coeff=jump_coefficient(params), R=R,
                      epsilon0_closed_form=eps0, converged=converged,
                      diagnostics=diagnostics)


def b_plus_from_flux(Q_x: float, phys: PhysicalParams) -> float:
    """Dimensionless heat-flux amplitude ``6 pi^2 hbar^3 u0^2 Q / (g_3 (2s+1) (k T)^4)``."""
    return (6.0 * math.pi**2 / moment(3.0) * phys.hbar**3 * phys.u0**2 * Q_x
            / (phys.degeneracy * (phys.k_B * phys.T_s) ** 4))


def jump_coefficient(params: ModelParams) -> float:
    """``C(g, q) = 4 pi^2 g_{g+3} / (g_3 g_{g+4}) * (1+q)/(1-q)``."""
    g = params.gamma
    return 4.0 * math.pi**2 * moment(g + 3) / (moment(3.0) * moment(g + 4)) * _q_factor(params.q)


def kapitsa_resistance(params: ModelParams, phys: PhysicalParams) -> float:
    """Zeroth-order ``R = C hbar^3 u0^2 / ((2s+1) k^4 T_s^3)`` in K m^2 / W."""
    return (jump_coefficient(params) * phys.hbar**3 * phys.u0**2
            / (phys.degeneracy * phys.k_B**4 * phys.T_s**3))
