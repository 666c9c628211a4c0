import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpreduce.checks import TOLERANCES, point_residuals
from lpreduce.errors import NotPositiveDefinite
from lpreduce.geometry import Geometry, check_pathways
from lpreduce.systems import builtin_system, random_section_point


def _geo(system, rng, off_section=False):
    q, f = random_section_point(system, rng)
    if off_section:
        q = q + 0.2 * rng.standard_normal(q.shape)
    return Geometry(system, q, f)


def test_orbit_metric_and_connection(system, rng):
    geo = _geo(system, rng)
    g = system.dim_g
    assert np.allclose(geo.d, geo.d.T, atol=1e-14)
    assert np.linalg.eigvalsh(geo.d).min() > 0
    assert np.allclose(geo.d @ geo.dinv, np.eye(g), atol=1e-12)
    assert np.allclose(geo.A @ geo.K, np.eye(g), atol=1e-12)
    assert np.allclose(geo.GH @ geo.K, 0.0, atol=1e-12)


def test_horizontal_metric_is_degenerate_exactly_along_orbits(system, rng):
    geo = _geo(system, rng)
    eig = np.linalg.eigvalsh(geo.GH)
    assert np.allclose(geo.GH, geo.GH.T, atol=1e-14)
    assert np.sum(np.abs(eig) < 1e-10) == system.dim_g
    assert eig.min() > -1e-12


def test_christoffel_symmetry_and_curvature_antisymmetry(system, rng):
    geo = _geo(system, rng, off_section=True)
    low = geo.gamma_lower
    assert np.allclose(low, low.transpose(1, 0, 2), atol=1e-13)
    assert np.allclose(geo.F, -geo.F.transpose(0, 2, 1), atol=1e-13)


def test_closed_form_matches_finite_differences(system, rng):
    geo = _geo(system, rng, off_section=True)
    assert geo.closed_form_available
    res = check_pathways(geo)
    assert res["connection_partials"] < 1e-6
    assert max(res.values()) < 1e-5


def test_two_connection_partial_forms_agree(system, rng):
    geo = _geo(system, rng, off_section=True)
    assert np.allclose(geo.connection_partial_alt_v(), geo.dA[:, :system.n_p, system.n_p:], atol=1e-12)


@pytest.mark.parametrize("name", ["so2-bead", "so3-two-vector"])
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_identity_suite_at_random_points(name, seed):
    system = builtin_system(name)
    rng = np.random.default_rng(seed)
    q, f = random_section_point(system, rng)
    res = point_residuals(system, q, f, rng.uniform(-1, 1, system.dim_g), pathways=False)
    failed = {k: v for k, v in res.items() if v >= TOLERANCES[k]}
    assert not failed


def test_degenerate_orbit_is_rejected():
    system = builtin_system("so2-bead")
    with pytest.raises(NotPositiveDefinite):
        Geometry(system, np.zeros(2), np.zeros(2)).d


def test_energy_splits_into_horizontal_and_vertical_parts(system, rng):
    """With w horizontal and p from the orbit velocity, E equals the full kinetic energy plus V."""
    geo = _geo(system, rng)
    xi = rng.standard_normal(system.dim_g)
    w = geo.GH @ rng.standard_normal(system.n)
    w = np.linalg.lstsq(geo.G, w, rcond=None)[0]          # a horizontal vector G^-1 G^H z
    assert np.allclose(geo.A @ w, 0, atol=1e-12)
    v = w + geo.K @ xi
    full = 0.5 * v @ geo.G @ v + system.potential(geo.q, geo.f)
    assert np.isclose(geo.energy(w, geo.d @ xi), full, rtol=1e-12)
