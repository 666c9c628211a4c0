"""Lagrange-Poincare reduction for mechanical and lattice gauge systems with symmetry."""
from .dynamics import (IntegratorConfig, ReducedState, Trajectory, integrate, momentum_from_velocity,
                       reconstruct_group, rhs_full, rhs_special_case)
from .errors import (ChartDomainError, ConfigError, FDInconsistent, GaugeSingular, GridMismatch, MetricSingular,
                     NoConvergence, NotPositiveDefinite, ReductionError, SingularOperator, UnknownTerm)
from .frame import AdaptedPoint, basis_change_matrices, forward_jacobian, from_adapted, to_adapted
from .geometry import Geometry
from .lie import SO2, SO3, SU2, LieGroup, ProductGroup, make_group
from .reference import FullState, compare, integrate_el, map_to_reduced
from .system import SystemDef, faddeev_popov, killing, projectors
from .systems import builtin_system

__version__ = "0.1.0"
