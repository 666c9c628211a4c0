import dataclasses

import numpy as np
import pytest

from lpreduce.dynamics import Trajectory
from lpreduce.errors import GridMismatch
from lpreduce.reference import (FullState, compare, full_energy, integrate_el, map_to_reduced, noether_charges,
                                unmap)
from lpreduce.systems import random_section_point


def _el(system, rng, t_end=0.2):
    q, f = random_section_point(system, rng)
    s0 = FullState(q, f, rng.normal(scale=0.5, size=system.n_p), rng.normal(scale=0.5, size=system.n_v))
    return integrate_el(system, s0, 1e-3, t_end)


def test_direct_dynamics_conserve_energy_and_noether_charges(system, rng):
    el = _el(system, rng)
    assert np.abs(el.energy - el.energy[0]).max() < 1e-10
    j = np.array([noether_charges(system, FullState(el.q[i], el.f[i], el.qdot[i], el.fdot[i]))
                  for i in range(len(el))])
    assert np.abs(j - j[0]).max() < 1e-10
    assert np.isclose(el.energy[0], full_energy(system, FullState(el.q[0], el.f[0], el.qdot[0], el.fdot[0])))


def test_mapping_round_trip(system, rng):
    el = _el(system, rng, t_end=0.05)
    red = map_to_reduced(system, el)
    q, f = unmap(system, red)
    assert np.allclose(q, el.q, atol=1e-10) and np.allclose(f, el.f, atol=1e-10)
    assert max(np.abs(system.chi(qs)).max() for qs in red.q_star) < 1e-12


def test_compare_identical_and_mismatched_grids(system, rng):
    red = map_to_reduced(system, _el(system, rng, t_end=0.02))
    rep = compare(red, red)
    assert rep.max_rel_error == 0.0 and rep.passed
    short = Trajectory(red.system, red.t[:-1], red.q_star[:-1], red.f_tilde[:-1], red.omega_q[:-1],
                       red.omega_v[:-1], red.mom[:-1], red.energy[:-1])
    with pytest.raises(GridMismatch):
        compare(red, short)
    shifted = dataclasses.replace(red, t=red.t * 2)
    with pytest.raises(GridMismatch):
        compare(red, shifted)


def test_compare_reports_relative_errors_per_variable(system, rng):
    red = map_to_reduced(system, _el(system, rng, t_end=0.02))
    bumped = dataclasses.replace(red, q_star=red.q_star * (1 + 1e-7))
    rep = compare(bumped, red, tolerance=1e-6)
    assert rep.rel_errors["q_star"] == pytest.approx(1e-7, rel=1e-3)
    assert rep.rel_errors["mom"] == 0.0 and rep.passed
    assert not compare(bumped, red, tolerance=1e-8).passed
