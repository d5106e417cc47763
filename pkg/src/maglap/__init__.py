"""Limiting absorption and decay toolkit for the Dirichlet magnetic half-plane."""

from .bands import BandTable, asymptotic_check, default_k_grid, table_from_sweep
from .cauchy import DensityFunction, boundary_value, cquad, epsilon_sweep, holder_constant, offaxis_cauchy
from .decay import (
    agmon_envelope,
    analytic_continuation,
    decay_certificate,
    overlap_kernel,
    tail_mass,
    theorem_beta_bound,
)
from .errors import MaglapError
from .fiber import Discretization, fiber_sweep, landau_level, solve_fiber
from .lap import (
    ResolventQuery,
    holder_certificate,
    resolvent_element,
    rn_boundary,
    rn_value,
    spectral_projector_element,
)
from .modes import (
    ModeFunction,
    gaussian_bump,
    membership_report,
    mode_from_descriptor,
    project_mode,
    smooth_bump,
    synthesize_grid,
    threshold_mode,
)

__version__ = "0.1.0"
