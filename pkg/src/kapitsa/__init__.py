"""Temperature jump and Kapitsa resistance for a phonon-dominated Bose gas."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DivergentIntegralError,
    DomainError,
    GridError,
    KapitsaError,
    NumericalError,
    ResidualSingularityError,
    SingularOrderError,
    TruncationError,
)
from .params import ModelParams, PhysicalParams
from .moments import g_kernel, moment, moment_closed_form, MomentTable, MOMENTS
from .kernels import TIndex, t_integral, t_zero, t_deficit, j_integral, j_grid
from .dispersion import DispersionMatrix, lambda_matrix, omega, d_matrix
from .jump import (
    JumpReport,
    KGrid,
    SpectralVector,
    b_plus_from_flux,
    epsilon0,
    epsilon_T,
    excitation_energy,
    jump_coefficient,
    kapitsa_resistance,
    next_order,
    zeroth_spectral,
)
from .halfspace import (
    HalfspaceField,
    HalfspaceGrid,
    extract_temperature_jump,
    solve_halfspace,
    temperature_profile,
)
