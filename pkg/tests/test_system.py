import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpreduce import fd
from lpreduce.errors import GaugeSingular, MetricSingular
from lpreduce.system import faddeev_popov, projectors
from lpreduce.systems import builtin_system, random_section_point

seeds = st.integers(0, 2**32 - 1)


def _sample(system, seed):
    rng = np.random.default_rng(seed)
    q, f = random_section_point(system, rng)
    return q, f, rng.uniform(-1, 1, system.dim_g), rng


def test_killing_fields_are_orbit_tangents(system, rng):
    q, f = random_section_point(system, rng)
    a0 = np.zeros(system.dim_g)
    assert np.allclose(fd.jacobian(lambda a: system.action(q, a), a0), system.killing_q(q), atol=1e-8)
    assert np.allclose(fd.jacobian(lambda a: system.group.rep_v(a) @ f, a0), system.killing_v(f), atol=1e-8)


def test_analytic_derivatives_match_finite_differences(system, rng):
    q, f = random_section_point(system, rng)
    q = q + 0.1 * rng.standard_normal(q.shape)
    assert np.allclose(fd.jacobian(system.killing_q, q), system.killing_q_jac(q), atol=1e-8)
    assert np.allclose(fd.jacobian(system.chi, q), system.chi_jac(q), atol=1e-8)
    assert np.allclose(fd.jacobian(system.chi_jac, q), system.chi_hess(q), atol=1e-8)
    a = rng.uniform(-1, 1, system.dim_g)
    assert np.allclose(fd.jacobian(lambda y: system.action(y, a), q), system.action_jac(q, a), atol=1e-8)
    x = np.concatenate([q, f])
    num = fd.jacobian(lambda y: np.array(system.potential(y[:system.n_p], y[system.n_p:])), x)
    assert np.allclose(num, np.concatenate(system.potential_grad(q, f)), atol=1e-7)


@pytest.mark.parametrize("name", ["so2-bead", "so3-two-vector"])
@settings(max_examples=25, deadline=None)
@given(seed=seeds)
def test_action_is_a_right_action_preserving_metric_and_potential(name, seed):
    system = builtin_system(name)
    q, f, a, rng = _sample(system, seed)
    b = rng.uniform(-1, 1, system.dim_g)
    lhs = system.action(system.action(q, a), b)
    assert np.allclose(lhs, system.action(q, system.group.compose(a, b)), atol=1e-12)
    res = system.invariance_residuals(q, f, a)
    assert max(res.values()) < 1e-12
    assert system.killing_equation_residual(q) < 1e-12


@pytest.mark.parametrize("name", ["so2-bead", "so3-two-vector"])
@settings(max_examples=25, deadline=None)
@given(seed=seeds)
def test_projector_identities(name, seed):
    system = builtin_system(name)
    q, f, _, _ = _sample(system, seed)
    pr = projectors(system, q, f)
    kq, chi_a = system.killing_q(q), system.chi_jac(q)
    assert np.allclose(pr.n_qq @ pr.n_qq, pr.n_qq, atol=1e-12)
    assert np.allclose(pr.p_perp @ pr.p_perp, pr.p_perp, atol=1e-12)
    assert np.allclose(pr.n_qq @ pr.p_perp, pr.p_perp, atol=1e-12)
    assert np.allclose(pr.p_perp @ pr.n_qq, pr.n_qq, atol=1e-12)
    assert np.allclose(pr.n_qq @ kq, 0, atol=1e-12)
    assert np.allclose(chi_a @ pr.p_perp, 0, atol=1e-12)
    assert np.allclose(pr.phi @ pr.phi_inv, np.eye(system.dim_g), atol=1e-12)
    # P_perp is orthogonal in the metric G.
    g = system.metric_q(q)
    assert np.allclose(g @ pr.p_perp, pr.p_perp.T @ g, atol=1e-12)


def test_faddeev_popov_singular_off_the_good_section():
    system = builtin_system("so2-bead")
    with pytest.raises(GaugeSingular) as err:
        faddeev_popov(system, np.array([0.0, 0.4]))
    assert err.value.condition == np.inf or err.value.condition > 1e12


def test_singular_metric_is_reported():
    system = builtin_system("so2-bead", mass_q=0.0)
    with pytest.raises(MetricSingular):
        system.metric_q_inv(np.array([1.0, 0.0]))
