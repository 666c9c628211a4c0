import numpy as np
import pytest
import scipy.sparse as sp

from lpreduce import fd
from lpreduce.dynamics import IntegratorConfig, integrate, reduced_energy
from lpreduce.errors import ConfigError, SingularOperator
from lpreduce.lattice import (CoulombProjector, GaugeFieldState, LatticeConfig, LatticeModel, build_system,
                              coulomb_state, evolve_gauge, fp_solve, gauge_energy, load_snapshot, orbit_solve,
                              save_snapshot, to_reduced_state)
from lpreduce.lattice.operators import Factorized, central_difference
from lpreduce.lattice.validate import force_consistency, potential_invariance, term_equality
from lpreduce.reference import compare


@pytest.fixture(scope="module")
def su2():
    return LatticeModel(LatticeConfig(dim=3, size=2, h=0.8, group="su2"))


def _sine_basis(size: int, h: float):
    """Unitary eigenvectors i^j sin(j theta_k) of the Dirichlet central difference, eigenvalues i cos(theta_k)/h."""
    j = np.arange(1, size + 1)
    theta = np.pi * j / (size + 1)
    u = (1j ** j)[:, None] * np.sin(np.outer(j, theta)) / np.sqrt((size + 1) / 2)
    return u, 1j * np.cos(theta) / h


@pytest.mark.parametrize("dim,size,h", [(2, 4, 0.5), (3, 2, 1.0), (2, 6, 1.3)])
def test_free_faddeev_popov_solve_matches_the_sine_basis(dim, size, h):
    model = LatticeModel(LatticeConfig(dim=dim, size=size, h=h, group="su2"))
    u, mu = _sine_basis(size, h)
    assert np.allclose(central_difference(size, h).toarray() @ u, u * mu, atol=1e-12)
    assert np.allclose(u.conj().T @ u, np.eye(size), atol=1e-12)
    lam = (mu ** 2).real
    v, eig = u, lam
    for _ in range(dim - 1):
        v = np.kron(v, u)
        eig = np.add.outer(eig, lam).ravel()
    rhs = np.random.default_rng(0).standard_normal((model.n_sites, 3))
    expect = (v @ ((v.conj().T @ rhs) / eig[:, None])).real
    got = fp_solve(model, np.zeros((model.n_sites, dim, 3)), rhs)
    assert np.allclose(got, expect, atol=1e-12)


def test_config_validation():
    with pytest.raises(ConfigError):
        LatticeConfig(size=3)
    with pytest.raises(ConfigError):
        LatticeConfig(dim=4)
    with pytest.raises(ConfigError):
        LatticeConfig(group="e8")
    with pytest.raises(ConfigError):
        LatticeConfig.from_dict({"size": 2, "spacing": 1.0})
    assert LatticeConfig(dim=2, size=4, h=0.5).volume == 0.25


def test_killing_matrix_generates_gauge_transformations(su2):
    rng = np.random.default_rng(1)
    s = GaugeFieldState.zeros(su2)
    a, f = rng.standard_normal(s.a.shape), rng.standard_normal(s.f.shape)

    def act(g):
        a2, f2 = su2.transform(a, f, su2.algebra(g))
        return np.concatenate([a2.ravel(), f2.ravel()])

    num = fd.jacobian(act, np.zeros(su2.n_group))
    assert np.allclose(su2.killing_matrix(a, f).toarray(), num, atol=1e-8)


def test_potential_gradient_matches_finite_differences(su2):
    s = coulomb_state(su2, np.random.default_rng(2))
    assert force_consistency(su2, s) < 1e-6


def test_twelve_blocks_match_the_generic_engine(su2):
    s = coulomb_state(su2, np.random.default_rng(3))
    errors = term_equality(su2, s)
    assert max(errors.values()) < 1e-8


def test_orbit_green_function_against_dense_inverse(su2):
    s = coulomb_state(su2, np.random.default_rng(4))
    rhs = np.random.default_rng(5).standard_normal((su2.n_sites, 3))
    dense = su2.orbit_operator(s.a, s.f).toarray()
    assert np.allclose(dense @ orbit_solve(su2, s.a, s.f, rhs).ravel(), rhs.ravel(), atol=1e-10)
    system = build_system(su2.cfg)
    from lpreduce.geometry import Geometry
    geo = Geometry(system, s.a.ravel(), s.f.ravel())
    assert np.allclose(geo.d, su2.cfg.volume * dense, atol=1e-10)


def test_coulomb_surface_and_projection(su2):
    s = coulomb_state(su2, np.random.default_rng(6))
    assert np.abs(su2.divergence(s.a)).max() < 1e-12
    proj = CoulombProjector(su2)
    v = proj(np.random.default_rng(7).standard_normal(s.a.shape))
    assert np.abs(su2.divergence(v)).max() < 1e-12
    assert np.allclose(proj(v), v, atol=1e-12)


def test_abelian_pure_gauge_potential_is_invariant():
    model = LatticeModel(LatticeConfig(group="so2"))
    rng = np.random.default_rng(8)
    s = coulomb_state(model, rng, scalar=False)
    assert potential_invariance(model, s, rng) < 1e-12


@pytest.mark.xfail(strict=True, reason="central differences do not commute with site-local non-abelian "
                                       "gauge transformations, so the discretized potential is not invariant")
def test_non_abelian_potential_is_invariant(su2):
    rng = np.random.default_rng(9)
    s = coulomb_state(su2, rng)
    assert potential_invariance(su2, s, rng) < 1e-10


def test_lattice_energy_matches_generic_energy(su2):
    s = coulomb_state(su2, np.random.default_rng(10))
    system = build_system(su2.cfg)
    assert np.isclose(gauge_energy(su2, s), reduced_energy(system, to_reduced_state(su2, s)), rtol=1e-12)


def test_abelian_evolution_matches_generic_engine():
    cfg = LatticeConfig(group="so2")
    model = LatticeModel(cfg)
    s0 = coulomb_state(model, np.random.default_rng(11), scalar=False, momentum=False)
    icfg = IntegratorConfig(dt=1e-2, t_end=0.5, equation_set="special", drop_killing_terms=True)
    lat = evolve_gauge(model, s0, icfg)
    gen = integrate(build_system(cfg), to_reduced_state(model, s0), IntegratorConfig(dt=1e-2, t_end=0.5))
    assert lat.error is None and gen.error is None
    assert compare(lat.to_reduced(model), gen).max_rel_error < 1e-10
    assert lat.constraint.max() < 1e-12


def test_snapshot_round_trip(tmp_path, su2):
    s = coulomb_state(su2, np.random.default_rng(12))
    path = tmp_path / "state.bin"
    save_snapshot(path, su2.cfg, s, t=0.25)
    cfg, back, t = load_snapshot(path)
    assert cfg == su2.cfg and t == 0.25
    assert np.array_equal(back.to_vector(), s.to_vector())
    (tmp_path / "junk.bin").write_bytes(b'{"format": "other"}\n')
    with pytest.raises(ConfigError):
        load_snapshot(tmp_path / "junk.bin")


def test_singular_operator_is_detected():
    op = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SingularOperator):
        Factorized(op, "test").solve(np.ones(2))
    pseudo = Factorized(op, "test", pseudo=True)
    assert np.allclose(op @ pseudo.solve(np.ones(2)), np.ones(2))
