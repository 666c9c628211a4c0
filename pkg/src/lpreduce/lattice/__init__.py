"""Yang-Mills plus scalar field on a Dirichlet site lattice."""
from .config import LatticeConfig
from .evolve import (CoulombProjector, GaugeTrajectory, coulomb_state, evolve_gauge, from_reduced_state,
                     gauge_energy, gauge_rhs_special_case, retract, to_reduced_state)
from .model import LatticeModel, build_system, fp_solve, orbit_solve
from .snapshot import load_snapshot, save_snapshot
from .terms import GaugeFieldState, GaugeTerms, LatticeGeometry, assemble_term, gauge_accelerations

__all__ = [
    "LatticeConfig", "LatticeModel", "build_system", "fp_solve", "orbit_solve",
    "GaugeFieldState", "GaugeTerms", "LatticeGeometry", "assemble_term", "gauge_accelerations",
    "CoulombProjector", "GaugeTrajectory", "coulomb_state", "evolve_gauge", "gauge_energy",
    "gauge_rhs_special_case", "retract", "to_reduced_state", "from_reduced_state",
    "load_snapshot", "save_snapshot",
]
