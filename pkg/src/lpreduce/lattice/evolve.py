"""Time evolution of the gauge-field equations with Coulomb-gauge retraction."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..dynamics import IntegratorConfig, ReducedState, Trajectory
from ..errors import ReductionError
from .model import LatticeModel
from .operators import Factorized
from .terms import GaugeFieldState, LatticeGeometry, gauge_accelerations

RETRACTION_TOL = 1e-13
RETRACTION_ITERS = 20


def vertical_density(model: LatticeModel, geo: LatticeGeometry, s: GaugeFieldState) -> np.ndarray:
    """dp_b/dt = -c^n_{mb} P^m p_n + c^n_{sb} (A w)^s p_n at every site."""
    big_p = geo.green(s.p)
    aw = geo.conn(s.a_dot, s.f_dot)
    c = model.c
    return -np.einsum("nmb,xm,xn->xb", c, big_p, s.p) + np.einsum("nsb,xs,xn->xb", c, aw, s.p)


def gauge_rhs_special_case(model: LatticeModel, s: GaugeFieldState,
                           drop_killing_terms: bool = True) -> GaugeFieldState:
    """Time derivatives of (A*, f~, dA*/dt, df~/dt, p) from the gauge-field equations."""
    geo = LatticeGeometry(model, s.a, s.f)
    s_a, s_f = gauge_accelerations(model, s, geo, drop_killing_terms)
    return GaugeFieldState(s.a_dot.copy(), s.f_dot.copy(), -s_a, -s_f, vertical_density(model, geo, s))


def gauge_energy(model: LatticeModel, s: GaugeFieldState) -> float:
    """h^D [1/2 w G^H w + 1/2 p O^-1 p] + V."""
    geo = LatticeGeometry(model, s.a, s.f)
    kw_a = geo.kappa(s.a_dot)
    kw_f = geo.gv(s.f_dot)
    flat = np.sum(s.a_dot * kw_a) + np.sum(s.f_dot * kw_f)
    proj = geo.Dt(kw_a) + geo.Jft(kw_f)
    kin = 0.5 * (flat - np.sum(proj * geo.green(proj)))
    mom = 0.5 * np.sum(s.p * geo.green(s.p))
    return float(model.cfg.volume * (kin + mom) + model.potential(s.a, s.f))


class CoulombProjector:
    """Orthogonal projection of gauge velocities onto the tangent of the Coulomb surface."""

    def __init__(self, model: LatticeModel):
        self.model = model
        chi = model.divergence_matrix()
        ginv = sp.kron(sp.identity(model.n_sites * model.dim), model.kappa_inv, format="csr")
        self.chi = chi
        self.ginv_chi_t = (ginv @ chi.T).tocsr()
        self.factor = Factorized(chi @ self.ginv_chi_t, "Coulomb projector",
                                 pseudo=model.cfg.boundary == "periodic")

    def __call__(self, a_dot: np.ndarray) -> np.ndarray:
        v = a_dot.ravel()
        return self.model.gauge(v - self.ginv_chi_t @ self.factor.solve(self.chi @ v))


def retract(model: LatticeModel, s: GaugeFieldState, proj: CoulombProjector | None = None) -> GaugeFieldState:
    """Move (A*, f~) back onto the Coulomb surface along the orbit, then project dA*/dt."""
    a, f = s.a.copy(), s.f.copy()
    for _ in range(RETRACTION_ITERS):
        r = model.divergence(a)
        if np.abs(r).max() < RETRACTION_TOL:
            break
        xi = model.algebra(model.fp_factor(a).solve(r.ravel()))
        a = a - model.covariant(a, xi)
        f = f - model.charge(f, xi)
    proj = proj or CoulombProjector(model)
    return GaugeFieldState(a, f, proj(s.a_dot), s.f_dot.copy(), s.p.copy())


@dataclass
class GaugeTrajectory:
    t: np.ndarray
    states: list[GaugeFieldState]
    energy: np.ndarray
    constraint: np.ndarray
    error: str | None = None
    extra: dict = field(default_factory=dict)

    def to_reduced(self, model: LatticeModel) -> Trajectory:
        """Flatten into a reduced trajectory with finite-dimensional momenta."""
        vol = model.cfg.volume
        rows = [(s.a.ravel(), s.f.ravel(), s.a_dot.ravel(), s.f_dot.ravel(), vol * s.p.ravel()) for s in self.states]
        cols = [np.array(c) for c in zip(*rows)]
        return Trajectory("gauge-lattice", self.t.copy(), cols[0], cols[1], cols[2], cols[3], cols[4],
                          self.energy.copy(), constraint=self.constraint.copy(), error=self.error)


def to_reduced_state(model: LatticeModel, s: GaugeFieldState) -> ReducedState:
    return ReducedState(s.a.ravel().copy(), s.f.ravel().copy(), s.a_dot.ravel().copy(), s.f_dot.ravel().copy(),
                        model.cfg.volume * s.p.ravel())


def from_reduced_state(model: LatticeModel, r: ReducedState) -> GaugeFieldState:
    return GaugeFieldState(model.gauge(r.q_star).copy(), model.scalar(r.f_tilde).copy(),
                           model.gauge(r.omega_q).copy(), model.scalar(r.omega_v).copy(),
                           model.algebra(r.mom / model.cfg.volume).copy())


def evolve_gauge(model: LatticeModel, s0: GaugeFieldState, cfg: IntegratorConfig,
                 drop_killing_terms: bool = True) -> GaugeTrajectory:
    """Fixed-step RK4 of the gauge-field equations, retracting onto the Coulomb surface each step."""
    proj = CoulombProjector(model) if cfg.retraction else None

    def rhs(y):
        return gauge_rhs_special_case(model, GaugeFieldState.from_vector(model, y), drop_killing_terms).to_vector()

    states = [s0]
    error = None
    y = s0.to_vector()
    dt = cfg.dt
    for k in range(cfg.n_steps):
        try:
            k1 = rhs(y)
            k2 = rhs(y + dt / 2 * k1)
            k3 = rhs(y + dt / 2 * k2)
            k4 = rhs(y + dt * k3)
            s = GaugeFieldState.from_vector(model, y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
            if cfg.retraction:
                s = retract(model, s, proj)
        except (ReductionError, np.linalg.LinAlgError) as exc:
            error = f"step {k + 1}: {type(exc).__name__}: {exc}"
            break
        if not np.all(np.isfinite(s.to_vector())):
            error = f"step {k + 1}: non-finite state"
            break
        states.append(s)
        y = s.to_vector()
    energy = np.array([gauge_energy(model, s) for s in states])
    constraint = np.array([np.abs(model.divergence(s.a)).max() for s in states])
    return GaugeTrajectory(dt * np.arange(len(states)), states, energy, constraint, error)


def coulomb_state(model: LatticeModel, rng: np.random.Generator, amplitude: float = 0.3,
                  scalar: bool = True, momentum: bool = True) -> GaugeFieldState:
    """A random state on the Coulomb surface with tangent gauge velocity."""
    s = GaugeFieldState.zeros(model)
    s.a = amplitude * rng.standard_normal(s.a.shape)
    if scalar:
        s.f = rng.standard_normal(s.f.shape)
        s.f_dot = amplitude * rng.standard_normal(s.f.shape)
    s.a_dot = amplitude * rng.standard_normal(s.a.shape)
    if momentum:
        s.p = amplitude * rng.standard_normal(s.p.shape)
    return retract(model, s)
