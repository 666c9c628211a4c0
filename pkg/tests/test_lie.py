import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from lpreduce import fd
from lpreduce.errors import ChartDomainError
from lpreduce.lie import SO2, SO3, SU2, ProductGroup, killing_form, levi_civita, make_group

GROUPS = [SO2(), SO3(), SU2("adjoint"), SU2("fundamental")]
small3 = arrays(float, 3, elements=st.floats(-1.5, 1.5))


@pytest.mark.parametrize("group", GROUPS, ids=lambda g: f"{g.name}-{g.dim_v}")
def test_structure_constants_and_representations_close(group):
    res = group.structure_residuals()
    assert max(res.values()) < 1e-14


def test_su2_structure_constants_are_minus_epsilon():
    g = SU2()
    eps = levi_civita()
    assert np.array_equal(g.c[2, 0, 1], -eps[0, 1, 2])
    # Killing form of su(2) with c = -eps is -2 delta.
    assert np.allclose(killing_form(g.c), -2 * np.eye(3))


def test_so2_is_abelian_and_so3_is_not():
    assert SO2().abelian
    assert not SO3().abelian
    assert np.allclose(SO2().k, 0.0)


def test_make_group_names():
    assert make_group("SU(2)", "fundamental").dim_v == 4
    assert make_group("so3").dim_g == 3
    with pytest.raises(ValueError):
        make_group("e8")


@pytest.mark.parametrize("group", [SO3(), SU2()], ids=lambda g: g.name)
@settings(max_examples=40, deadline=None)
@given(a=small3, b=small3)
def test_field_rep_is_a_right_action(group, a, b):
    # [J_a, J_b] = -c^g_ab J_g makes Dbar reverse products.
    ab = group.compose(a, b)
    assert np.allclose(group.rep_v(ab), group.rep_v(b) @ group.rep_v(a), atol=1e-10)


@pytest.mark.parametrize("group", [SO3(), SU2()], ids=lambda g: g.name)
@settings(max_examples=40, deadline=None)
@given(a=small3)
def test_from_matrix_inverts_matrix_rep(group, a):
    assert np.allclose(group.from_matrix(group.matrix_rep(a)), a, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(a=small3)
def test_v_and_vbar_are_differentials_of_composition(a):
    group = SO3()
    jac = fd.jacobian(lambda x: group.compose(a, x), np.zeros(3), h=1e-5)
    assert np.allclose(jac, group.v(a), atol=1e-7)
    jac = fd.jacobian(lambda x: group.compose(x, a), np.zeros(3), h=1e-5)
    assert np.allclose(jac, group.vbar(a), atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(a=small3)
def test_u_and_v_are_inverse_and_ubar_mirrors_u(a):
    group = SU2()
    assert np.allclose(group.u(a) @ group.v(a), np.eye(3), atol=1e-12)
    assert np.allclose(group.ubar(a), group.u(-a), atol=1e-12)
    assert np.allclose(group.rho(a) @ group.rho_bar(a), np.eye(3), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(a=small3)
def test_rho_is_the_adjoint_action(a):
    group = SU2()
    t = group.generators
    g = expm(np.tensordot(a, t, axes=1))
    for beta in range(3):
        conj = g @ t[beta] @ np.linalg.inv(g)
        expect = np.tensordot(group.rho(a)[:, beta], t, axes=1)
        assert np.allclose(conj, expect, atol=1e-12)


def test_chart_radius_is_enforced():
    group = SU2()
    with pytest.raises(ChartDomainError):
        group.v(np.array([2 * np.pi, 0.0, 0.0]))
    with pytest.raises(ChartDomainError):
        group.from_matrix(-np.eye(2))


def test_product_group_is_blockwise():
    base = SU2()
    prod = ProductGroup(base, 3)
    assert prod.dim_g == 9
    a = np.linspace(-0.5, 0.7, 9)
    rho = prod.rho(a)
    assert np.allclose(rho[3:6, 3:6], base.rho(a[3:6]))
    assert np.allclose(rho[:3, 3:6], 0.0)
    assert max(prod.structure_residuals().values()) < 1e-14
