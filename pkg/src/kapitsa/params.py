"""Problem parameters: dimensionless model inputs and dimensional constants."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from scipy import constants

from .errors import DomainError

__all__ = ["ModelParams", "PhysicalParams", "PhononRegimeWarning"]


class PhononRegimeWarning(UserWarning):
    """Inputs fall outside the phonon-dominated regime the model assumes."""


@dataclass(frozen=True)
class ModelParams:
    """Collision exponent ``gamma`` (rate ~ C**gamma) and specular fraction ``q``."""

    gamma: float = 3.0
    q: float = 0.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if not 0.0 <= self.q < 1.0:
            raise DomainError(f"specular coefficient must satisfy 0 <= q < 1, got {self.q}")
        if self.gamma < 3:
            warnings.warn(f"gamma = {self.gamma} < 3 is outside the phonon-dominated regime",
                          PhononRegimeWarning, stacklevel=3)

    @property
    def phonon_regime(self) -> bool:
        return self.gamma >= 3


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional constants in SI units.

    ``T_s`` wall temperature (K), ``u0`` sound speed (m/s), ``s`` particle
    spin.  The optional scattering length ``a`` (m), concentration ``n_conc``
    (1/m^3) and mass ``m_mass`` (kg) are used for the consistency check
    ``u0**2 = 4 pi hbar**2 a n / m**2`` and the degeneracy-regime warning.
    """

    T_s: float = 1e-7
    u0: float = 1e-2
    s: float = 0.0
    a: float | None = None
    n_conc: float | None = None
    m_mass: float | None = None
    hbar: float = field(default=constants.hbar)
    k_B: float = field(default=constants.k)
    u0_rtol: float = 1e-6

    def __post_init__(self):
        if not self.T_s > 0:
            raise DomainError("T_s must be positive")
        if not self.u0 > 0:
            raise DomainError("u0 must be positive")
        if not self.s >= 0 or (2 * self.s) != int(2 * self.s):
            raise DomainError("spin must be a non-negative half-integer")
        for name in ("a", "n_conc", "m_mass"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{name} must be positive")
        u0_micro = self.u0_from_microscopic()
        if u0_micro is not None and abs(u0_micro - self.u0) > self.u0_rtol * self.u0:
            raise DomainError(
                f"u0 = {self.u0} inconsistent with 4 pi hbar^2 a n / m^2 -> {u0_micro}")
        if self.m_mass is not None and self.k_B * self.T_s > 0.1 * self.m_mass * self.u0**2:
            warnings.warn("k_B T_s is not small compared with m u0^2; phonon limit is marginal",
                          PhononRegimeWarning, stacklevel=3)

    def u0_from_microscopic(self) -> float | None:
        if self.a is None or self.n_conc is None or self.m_mass is None:
            return None
        return math.sqrt(4 * math.pi * self.hbar**2 * self.a * self.n_conc) / self.m_mass

    @property
    def degeneracy(self) -> float:
        return 2.0 * self.s + 1.0
