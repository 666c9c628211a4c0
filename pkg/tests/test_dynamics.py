import numpy as np
import pytest

from lpreduce.dynamics import (IntegratorConfig, ReducedState, constraint_residuals, horizontal_residuals,
                               initial_state, integrate, reconstruct_group, reduced_energy, retract, rhs_full,
                               rhs_special_case)
from lpreduce.reference import FullState, integrate_el, map_state, map_to_reduced, compare
from lpreduce.system import projectors
from lpreduce.systems import builtin_system, random_section_point


def _reduced(system, rng, with_a=True):
    q, f = random_section_point(system, rng)
    pr = projectors(system, q, f)
    a = rng.uniform(-0.5, 0.5, system.dim_g) if with_a else None
    return ReducedState(q, f, pr.p_perp @ rng.normal(scale=0.5, size=system.n_p),
                        rng.normal(scale=0.5, size=system.n_v), rng.normal(scale=0.5, size=system.dim_g), a)


def test_full_rhs_solves_both_horizontal_equations(system, rng):
    s = _reduced(system, rng)
    ds = rhs_full(system, s)
    r1, r2 = horizontal_residuals(system, s, ds)
    assert np.abs(r1).max() < 1e-12 and np.abs(r2).max() < 1e-12
    # the acceleration keeps w_q tangent to the gauge surface
    tangency = system.chi_jac(s.q_star) @ ds.omega_q + np.einsum(
        "bAB,A,B->b", system.chi_hess(s.q_star), s.omega_q, s.omega_q)
    assert np.abs(tangency).max() < 1e-12


def test_special_case_agrees_with_full_after_n_projection(system, rng):
    s = _reduced(system, rng)
    full = rhs_full(system, s)
    special = rhs_special_case(system, s)
    pr = projectors(system, s.q_star, s.f_tilde)
    assert np.allclose(pr.n_qq @ (full.omega_q - special.omega_q), 0, atol=1e-12)
    assert np.allclose(full.mom, special.mom, atol=1e-14)


def test_energy_and_constraints_are_preserved(system, rng):
    s0 = _reduced(system, rng)
    traj = integrate(system, s0, IntegratorConfig(dt=1e-3, t_end=0.2))
    assert traj.error is None and len(traj) == 201
    assert np.abs(traj.energy - traj.energy[0]).max() < 1e-9
    assert traj.constraint.max() < 1e-12
    assert traj.tangency.max() < 1e-12


def test_abelian_momentum_is_exactly_constant(rng):
    system = builtin_system("so2-bead")
    traj = integrate(system, _reduced(system, rng), IntegratorConfig(dt=1e-3, t_end=0.2))
    assert np.abs(traj.mom - traj.mom[0]).max() < 1e-12


def test_retraction_restores_the_gauge_surface(system, rng):
    s = _reduced(system, rng)
    bumped = ReducedState(s.q_star + 1e-3 * rng.standard_normal(system.n_p), s.f_tilde,
                          s.omega_q + 1e-3 * rng.standard_normal(system.n_p), s.omega_v, s.mom, s.a)
    chi, tan = constraint_residuals(system, retract(system, bumped))
    assert chi < 1e-13 and tan < 1e-13


def test_group_reconstruction_matches_coupled_integration(system, rng):
    s0 = _reduced(system, rng)
    traj = integrate(system, s0, IntegratorConfig(dt=1e-3, t_end=0.1))
    a = reconstruct_group(system, traj, s0.a)
    assert np.abs(a - traj.a).max() < 1e-6


def test_reduced_energy_equals_full_energy(system, rng):
    q, f = random_section_point(system, rng)
    s = FullState(q + 0.1, f, rng.standard_normal(system.n_p), rng.standard_normal(system.n_v))
    from lpreduce.reference import full_energy
    r = ReducedState(*map_state(system, s))
    assert np.isclose(reduced_energy(system, r), full_energy(system, s), rtol=1e-12)


def test_momentum_convention_is_settled_by_the_direct_oracle():
    """Short LP-vs-EL run: the full orbit metric d reproduces the direct dynamics, gamma does not."""
    system = builtin_system("so3-two-vector")
    rng = np.random.default_rng(3)
    q = np.array([1.0, 0.2, -0.1, 0.1, 1.1, 0.3])
    s0 = FullState(q, np.array([0.3, -0.4, 0.2]), rng.normal(scale=0.5, size=6), rng.normal(scale=0.5, size=3))
    el = integrate_el(system, s0, 1e-3, 0.1)
    errors = {}
    for conv in ("d", "gamma"):
        ref = map_to_reduced(system, el, conv)
        lp = integrate(system, ref.state(0), IntegratorConfig(dt=1e-3, t_end=0.1))
        errors[conv] = compare(lp, ref).max_rel_error
    assert errors["d"] < 1e-8
    assert errors["gamma"] > 1e-3


def test_solver_failure_returns_partial_trajectory():
    system = builtin_system("so2-bead")
    s0 = initial_state(system, [0.05, 0.0], [0.1, 0.0], [-5.0, 0.0], [0.0, 0.0], [0.0])
    traj = integrate(system, s0, IntegratorConfig(dt=1e-2, t_end=0.5))
    assert traj.error is not None and "GaugeSingular" in traj.error
    assert 1 <= len(traj) < 51
    assert np.all(np.isfinite(traj.energy))


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(equation_set="other")
    assert IntegratorConfig(dt=1e-4, t_end=1.0).n_steps == 10000
