"""Lattice checks: term-by-term equality with the generic engine, force and operator sanity."""
from __future__ import annotations

import numpy as np

from .. import fd
from ..checks import InvariantReport
from ..geometry import Geometry
from ..terms import BLOCKS, twelve_blocks
from .config import LatticeConfig
from .evolve import coulomb_state
from .model import LatticeModel, build_system
from .terms import GaugeFieldState, GaugeTerms, LatticeGeometry

TOLERANCES = {
    "twelve_term_equality": 1e-8,
    "force_fd_consistency": 1e-6,
    "fp_free_laplacian": 1e-12,
    "fp_solve_residual": 1e-10,
    "coulomb_constraint": 1e-12,
}
BLOCK_FLOOR = 1e-6


def block_errors(generic: dict[str, dict[str, np.ndarray]],
                 lattice: dict[str, dict[str, np.ndarray]]) -> dict[str, float]:
    """Relative error per block, each piece scaled by the largest piece in its block.

    Some pieces, and for uncharged fields whole blocks, vanish identically up
    to rounding; the block scale is floored at BLOCK_FLOOR times the largest
    block so that noise is not divided by noise.
    """
    sizes = {name: max(np.abs(v).max() for v in generic[name].values()) for name in BLOCKS}
    floor = max(BLOCK_FLOOR * max(sizes.values()), 1e-300)
    out = {}
    for name in BLOCKS:
        pieces = generic[name]
        scale = max(sizes[name], floor)
        err = max(np.abs(pieces[k] - lattice[name][k].ravel()).max() for k in pieces)
        out[name] = float(err / scale)
    return out


def term_equality(model: LatticeModel, state: GaugeFieldState, system=None) -> dict[str, float]:
    """Compare every named block of the gauge-field equations with the generic contraction."""
    system = system or build_system(model.cfg)
    geo = Geometry(system, state.a.ravel(), state.f.ravel())
    w = np.concatenate([state.a_dot.ravel(), state.f_dot.ravel()])
    generic = twelve_blocks(geo, w, model.cfg.volume * state.p.ravel())
    lattice = GaugeTerms(LatticeGeometry(model, state.a, state.f), state).all_terms()
    return block_errors(generic, lattice)


def force_consistency(model: LatticeModel, state: GaugeFieldState) -> float:
    """Analytic gradient of the discretized potential against central differences, relative."""
    n_p = model.n_p
    x = np.concatenate([state.a.ravel(), state.f.ravel()])
    num = fd.jacobian(lambda y: np.array(model.potential(model.gauge(y[:n_p]), model.scalar(y[n_p:]))), x)
    ga, gf = model.potential_grad(state.a, state.f)
    exact = np.concatenate([ga.ravel(), gf.ravel()])
    return float(np.abs(num - exact).max() / max(np.abs(exact).max(), 1e-300))


def fp_free_laplacian(model: LatticeModel) -> float:
    """At A = 0 the Faddeev-Popov operator is sum_i C_i C_i on every algebra component."""
    import scipy.sparse as sp
    from .operators import derivative_ops

    cfg = model.cfg
    lap = sum(c @ c for c in derivative_ops(cfg.dim, cfg.size, cfg.h, cfg.boundary))
    expect = sp.kron(lap, sp.identity(model.group.dim_g))
    got = model.fp_operator(np.zeros((model.n_sites, model.dim, model.group.dim_g)))
    return float(np.abs((got - expect).toarray()).max()) if model.n_group <= 4000 else float("nan")


def potential_invariance(model: LatticeModel, state: GaugeFieldState, rng: np.random.Generator,
                         amplitude: float = 0.3) -> float:
    """|V(g.x) - V(x)| / max(|V(x)|, 1) for a random site-dependent gauge transformation.

    The central-difference discretization is only exactly invariant for an
    abelian group without scalar field.
    """
    g = amplitude * rng.standard_normal((model.n_sites, model.group.dim_g))
    a2, f2 = model.transform(state.a, state.f, g)
    v0 = model.potential(state.a, state.f)
    return float(abs(model.potential(a2, f2) - v0) / max(abs(v0), 1.0))


def fp_solve_residual(model: LatticeModel, state: GaugeFieldState, rng: np.random.Generator) -> float:
    rhs = rng.standard_normal(model.n_group)
    factor = model.fp_factor(state.a)
    x = factor.solve(rhs)
    return float(np.linalg.norm(factor.op @ x - rhs) / np.linalg.norm(rhs))


def validate_lattice(cfg: LatticeConfig, n_states: int = 5, seed: int = 0, tolerance_scale: float = 1.0,
                     tolerances: dict[str, float] | None = None) -> InvariantReport:
    """Twelve-term equality at ``n_states`` random Coulomb states plus operator checks."""
    tol = dict(TOLERANCES)
    if tolerances:
        tol.update(tolerances)
    model = LatticeModel(cfg)
    system = build_system(cfg)
    rng = np.random.default_rng(seed)
    states = [coulomb_state(model, rng) for _ in range(n_states)]
    per_block = {name: 0.0 for name in BLOCKS}
    force = solve = constraint = invariance = 0.0
    for s in states:
        for name, val in term_equality(model, s, system).items():
            per_block[name] = max(per_block[name], val)
        force = max(force, force_consistency(model, s))
        solve = max(solve, fp_solve_residual(model, s, rng))
        constraint = max(constraint, float(np.abs(model.divergence(s.a)).max()))
        invariance = max(invariance, potential_invariance(model, s, rng))

    report = InvariantReport("validate", "gauge-lattice")
    report.add("twelve_term_equality", max(per_block.values()), tol["twelve_term_equality"] * tolerance_scale)
    report.add("force_fd_consistency", force, tol["force_fd_consistency"] * tolerance_scale)
    report.add("fp_free_laplacian", fp_free_laplacian(model), tol["fp_free_laplacian"] * tolerance_scale)
    report.add("fp_solve_residual", solve, tol["fp_solve_residual"] * tolerance_scale)
    report.add("coulomb_constraint", constraint, tol["coulomb_constraint"] * tolerance_scale)
    report.diagnostics = {
        "config": cfg.to_dict(),
        "states": n_states,
        "seed": seed,
        "term_errors": {k: per_block[k] for k in BLOCKS},
        "potential_invariance": invariance,
    }
    return report
