"""Radial Lagrangian simulator for the vacuum free boundary problem of the
degenerate (shallow-water type) compressible Navier-Stokes equations.

The solver is a Sturm-Liouville Galerkin discretization in the mass coordinate,
stepped by the implicit midpoint rule inside a Picard iteration on the flow
map, with weighted energy and bound monitors evaluated along the trajectory.
"""
from .diagnostics import (BoundsReport, EnergyReport, bounds_monitor, energy_functionals,
                          fundamental_energy_balance, initial_energy, select_epsilon0)
from .errors import (ArtifactIOError, ConfigurationError, ContinuationError, DegeneracyError, DomainError,
                     LagvacError, NonConvergenceError, NumericalError, ShapeError)
from .eulerian import eulerian_fields, invert_flow, radial_md_norms
from .galerkin import BackgroundFlow, GalerkinSystem, solve_linearized, step_linear
from .grid import RadialGrid, build_grid, cutoff, zeta
from .initial_data import BumpSpec, InitialFields, PhysicalParams, make_initial_fields, validate_admissibility
from .lagrangian import (LagrangianState, Trajectory, density_from_flow, effective_velocity,
                         effective_velocity_closed_form)
from .picard import PicardConfig, contraction_energy, picard_window, solve_global
from .sturm_liouville import EigenBasis, project, reconstruct, solve_eigenpairs

__version__ = "0.1.0"
