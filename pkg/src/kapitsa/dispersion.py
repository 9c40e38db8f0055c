"""Dispersion matrix of the Fourier-reduced moment system.

Diagonal entries have already been rewritten with the identities
``1 - T_{3g+4,0}/g_{g+4} = k^2 T_{g+4,2}/g_{g+4}`` and
``1 - 3 T_{3g+3,2}/g_{g+3} = 3 k^2 T_{g+3,4}/g_{g+3}``, so every entry is a
cancellation-free product of positive integrals:

    Lambda(k) = [[ k^2 T_{g+4,2}/g_{g+4},  3ik T_{2g+3,2}/g_{g+3} ],
                 [ ik T_{2g+4,2}/g_{g+4},  3k^2 T_{g+3,4}/g_{g+3} ]]

``det Lambda = k^2 omega(k)`` with

    omega(k) = 3/(g_{g+3} g_{g+4}) [k^2 T_{g+4,2} T_{g+3,4} + T_{2g+3,2} T_{2g+4,2}],

which stays finite and positive as ``k -> 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .kernels import TIndex, t_integral
from .moments import moment
from .params import ModelParams

__all__ = [
    "DispersionMatrix",
    "DispersionTables",
    "dispersion_tables",
    "lambda_entries",
    "lambda_matrix",
    "omega",
    "d_matrix",
]


@dataclass(frozen=True)
class DispersionTables:
    """The four T-integrals of Lambda sampled at wavenumbers ``k`` (taken as |k|)."""

    k: np.ndarray
    gamma: float
    t_g4_2: np.ndarray   # T_{g+4,2}
    t_g3_4: np.ndarray   # T_{g+3,4}
    t_2g3_2: np.ndarray  # T_{2g+3,2}
    t_2g4_2: np.ndarray  # T_{2g+4,2}
    g3: float            # g_{g+3}
    g4: float            # g_{g+4}

    def reduced(self):
        """Real coefficients ``(a11, a12, a21, a22)`` with Lambda = [[a11, i a12], [i a21, a22]].

        Off-diagonal coefficients carry the sign of ``k``.
        """
        k = self.k
        a11 = k * k * self.t_g4_2 / self.g4
        a12 = 3.0 * k * self.t_2g3_2 / self.g3
        a21 = k * self.t_2g4_2 / self.g4
        a22 = 3.0 * k * k * self.t_g3_4 / self.g3
        return a11, a12, a21, a22

    def omega(self) -> np.ndarray:
        k2 = self.k * self.k
        return 3.0 / (self.g3 * self.g4) * (k2 * self.t_g4_2 * self.t_g3_4
                                            + self.t_2g3_2 * self.t_2g4_2)


def dispersion_tables(k, gamma: float) -> DispersionTables:
    """Evaluate the integrals entering Lambda at every wavenumber in ``k``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    g = gamma
    return DispersionTables(
        k=k,
        gamma=g,
        t_g4_2=np.atleast_1d(t_integral(TIndex.of(g, 1, 4, 2), k)),
        t_g3_4=np.atleast_1d(t_integral(TIndex.of(g, 1, 3, 4), k)),
        t_2g3_2=np.atleast_1d(t_integral(TIndex.of(g, 2, 3, 2), k)),
        t_2g4_2=np.atleast_1d(t_integral(TIndex.of(g, 2, 4, 2), k)),
        g3=moment(g + 3),
        g4=moment(g + 4),
    )


@dataclass(frozen=True)
class DispersionMatrix:
    k: float
    entries: np.ndarray  # 2x2 complex
    omega: float
    lam: complex

    def inverse(self) -> np.ndarray:
        """``Lambda^{-1} = D / (k^2 omega)``."""
        return _adjugate(self.entries) / (self.k**2 * self.omega)


def _adjugate(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def _require_positive(k: float) -> float:
    k = float(k)
    if not k > 0:
        raise DomainError(f"wavenumber must be positive, got {k}")
    return k


def _check_omega(om, k) -> None:
    bad = ~(np.asarray(om) > 0)
    if np.any(bad):
        kb = np.asarray(k)[bad] if np.ndim(k) else k
        raise NumericalError(f"dispersion function omega(k) not positive at k = {kb}")


def lambda_entries(k, gamma: float) -> np.ndarray:
    """Complex Lambda entries for signed wavenumbers; shape ``k.shape + (2, 2)``.

    Diagonal entries are even in ``k`` and off-diagonal ones odd, so this is
    the function used for parity checks.  ``k = 0`` gives the zero matrix.
    """
    k = np.asarray(k, dtype=float)
    tab = dispersion_tables(k.ravel(), gamma)
    a11, a12, a21, a22 = tab.reduced()
    out = np.empty(k.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a11.reshape(k.shape)
    out[..., 0, 1] = 1j * a12.reshape(k.shape)
    out[..., 1, 0] = 1j * a21.reshape(k.shape)
    out[..., 1, 1] = a22.reshape(k.shape)
    return out


def lambda_matrix(k: float, params: ModelParams) -> DispersionMatrix:
    """Dispersion matrix at a single ``k > 0`` with omega and the determinant."""
    k = _require_positive(k)
    tab = dispersion_tables(k, params.gamma)
    ent = lambda_entries(k, params.gamma)
    om = float(tab.omega()[0])
    _check_omega(om, k)
    lam = ent[0, 0] * ent[1, 1] - ent[0, 1] * ent[1, 0]
    return DispersionMatrix(k=k, entries=ent, omega=om, lam=complex(lam))


def omega(k, params: ModelParams):
    """``omega(k) = det Lambda / k^2`` for ``k > 0`` (scalar or array)."""
    karr = np.asarray(k, dtype=float)
    if np.any(~(karr > 0)):
        raise DomainError("omega requires k > 0")
    om = dispersion_tables(karr.ravel(), params.gamma).omega().reshape(karr.shape)
    _check_omega(om, karr)
    return float(om) if om.ndim == 0 else om


def d_matrix(k: float, params: ModelParams) -> np.ndarray:
    """Adjugate ``D(k)`` with ``Lambda D = det(Lambda) I``."""
    k = _require_positive(k)
    return _adjugate(lambda_entries(k, params.gamma))
