"""Reduced Lagrange-Poincare equations and their fixed-step integration."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geom
from .errors import GaugeSingular, ReductionError
from .frame import AdaptedPoint
from .geometry import Geometry
from .system import SystemDef, faddeev_popov_from, projectors
from .terms import KILLING_FREE_Q, assemble_s, compact_acceleration, twelve_blocks

RETRACTION_TOL = 1e-13
RETRACTION_ITERS = 20


@dataclass
class ReducedState:
    q_star: np.ndarray
    f_tilde: np.ndarray
    omega_q: np.ndarray
    omega_v: np.ndarray
    mom: np.ndarray
    a: np.ndarray | None = None

    @property
    def point(self) -> AdaptedPoint:
        a = self.a if self.a is not None else np.zeros(self.mom.size)
        return AdaptedPoint(self.q_star, self.f_tilde, a)

    def to_vector(self) -> np.ndarray:
        parts = [self.q_star, self.f_tilde, self.omega_q, self.omega_v, self.mom]
        if self.a is not None:
            parts.append(self.a)
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, y: np.ndarray, n_p: int, n_v: int, g: int, with_a: bool) -> "ReducedState":
        i = np.cumsum([n_p, n_v, n_p, n_v, g])
        return cls(y[:i[0]], y[i[0]:i[1]], y[i[1]:i[2]], y[i[2]:i[3]], y[i[3]:i[4]],
                   y[i[4]:i[4] + g] if with_a else None)


@dataclass
class IntegratorConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    scheme: str = "rk4"
    retraction: bool = True
    equation_set: str = "full"
    drop_killing_terms: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be non-negative")
        if self.scheme != "rk4":
            raise ValueError(f"unsupported scheme {self.scheme!r}")
        if self.equation_set not in ("full", "special"):
            raise ValueError(f"equation_set must be 'full' or 'special', got {self.equation_set!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    system: str
    t: np.ndarray
    q_star: np.ndarray
    f_tilde: np.ndarray
    omega_q: np.ndarray
    omega_v: np.ndarray
    mom: np.ndarray
    energy: np.ndarray
    a: np.ndarray | None = None
    constraint: np.ndarray | None = None
    tangency: np.ndarray | None = None
    error: str | None = None
    extra: dict = field(default_factory=dict)

    def state(self, i: int) -> ReducedState:
        a = None if self.a is None else self.a[i]
        return ReducedState(self.q_star[i], self.f_tilde[i], self.omega_q[i], self.omega_v[i], self.mom[i], a)

    def __len__(self) -> int:
        return self.t.size


# -- right-hand sides ---------------------------------------------------------

def _accelerations(system: SystemDef, geo: Geometry, w: np.ndarray, p: np.ndarray):
    """S on both sectors, from the piecewise blocks or from finite differences."""
    if geo.closed_form_available:
        s = compact_acceleration(geo, w, p)
        return s[:system.n_p], s[system.n_p:]
    x = geo.x
    gam = geom.christoffel_fd(system, x)
    gf = geom.raised_curvature_fd(system, x)
    gdd = np.einsum("AR,Rks->Aks", geo.Ginv, geom.covariant_dd_fd(system, x))
    s = (np.einsum("ABM,B,M->A", gam, w, w) + np.einsum("AaQ,Q,a->A", gf, w, p)
         + 0.5 * np.einsum("Aks,k,s->A", gdd, p, p) + geo.force())
    return s[:system.n_p], s[system.n_p:]


def vertical_rhs(geo: Geometry, w: np.ndarray, p: np.ndarray) -> np.ndarray:
    """dp_b/dt = -c^n_{mb} (d^-1 p)^m p_n + c^n_{sb} (A w)^s p_n."""
    c = geo.c
    return (-np.einsum("nmb,m,n->b", c, geo.dinv @ p, p)
            + np.einsum("nsb,s,n->b", c, geo.A @ w, p))


def _group_rate(system: SystemDef, geo: Geometry, s: ReducedState) -> np.ndarray:
    w = np.concatenate([s.omega_q, s.omega_v])
    return system.group.vbar(s.a) @ (geo.dinv @ s.mom - geo.A @ w)


def rhs_full(system: SystemDef, s: ReducedState) -> ReducedState:
    """Time derivative of the reduced state under the full horizontal and vertical equations.

    The first horizontal equation fixes only the N-projected acceleration; the
    Killing-direction remainder comes from differentiating chi_A w^A = 0.
    """
    geo = Geometry(system, s.q_star, s.f_tilde)
    w = np.concatenate([s.omega_q, s.omega_v])
    s_q, s_v = _accelerations(system, geo, w, s.mom)
    kq = geo.K[:system.n_p]
    chi_a = system.chi_jac(s.q_star)
    _, phi_inv, _ = faddeev_popov_from(chi_a, kq)
    hess = system.chi_hess(s.q_star)
    z = phi_inv @ (chi_a @ s_q - np.einsum("bAB,A,B->b", hess, s.omega_q, s.omega_q))
    kv = geo.K[system.n_p:]
    da = _group_rate(system, geo, s) if s.a is not None else None
    return ReducedState(s.omega_q.copy(), s.omega_v.copy(), -s_q + kq @ z, -s_v + kv @ z,
                        vertical_rhs(geo, w, s.mom), da)


def rhs_special_case(system: SystemDef, s: ReducedState, drop_killing_terms: bool = False) -> ReducedState:
    """Horizontal equations without the outer N projection and without N^r_A couplings.

    With ``drop_killing_terms`` the Q*-sector keeps only the pieces that are
    not proportional to a Killing vector, as in the gauge-field form.
    """
    geo = Geometry(system, s.q_star, s.f_tilde)
    w = np.concatenate([s.omega_q, s.omega_v])
    if geo.closed_form_available:
        blocks = twelve_blocks(geo, w, s.mom)
        sel = KILLING_FREE_Q if drop_killing_terms else None
        s_q, s_v = assemble_s(blocks, geo.force(), system.n_p, selection=sel)
    else:
        if drop_killing_terms:
            raise ReductionError("dropping Killing terms needs closed-form geometry")
        s_q, s_v = _accelerations(system, geo, w, s.mom)
    da = _group_rate(system, geo, s) if s.a is not None else None
    return ReducedState(s.omega_q.copy(), s.omega_v.copy(), -s_q, -s_v, vertical_rhs(geo, w, s.mom), da)


def horizontal_residuals(system: SystemDef, s: ReducedState, ds: ReducedState) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of the two horizontal equations in their projected form.

    ``N^B_A (dw^A + S^A)`` and ``N^r_A dw^A + dw^r + S^r`` with S built from the
    same blocks; both vanish for the output of rhs_full.
    """
    geo = Geometry(system, s.q_star, s.f_tilde)
    w = np.concatenate([s.omega_q, s.omega_v])
    s_q, s_v = _accelerations(system, geo, w, s.mom)
    proj = projectors(system, s.q_star, s.f_tilde)
    r1 = proj.n_qq @ (ds.omega_q + s_q)
    r2 = proj.n_vq @ (ds.omega_q + s_q) + ds.omega_v + s_v
    return r1, r2


def reduced_energy(system: SystemDef, s: ReducedState) -> float:
    geo = Geometry(system, s.q_star, s.f_tilde)
    return geo.energy(np.concatenate([s.omega_q, s.omega_v]), s.mom)


# -- constraint maintenance ---------------------------------------------------

def retract(system: SystemDef, s: ReducedState) -> ReducedState:
    """Pull (Q*, f~) back onto chi = 0 along the orbit and project w_q onto T Sigma."""
    q = s.q_star.copy()
    f = s.f_tilde.copy()
    for _ in range(RETRACTION_ITERS):
        r = system.chi(q)
        if np.abs(r).max() < RETRACTION_TOL:
            break
        proj = projectors(system, q, f)
        step = proj.phi_inv @ r
        q = q - system.killing_q(q) @ step
        f = f - system.killing_v(f) @ step
    proj = projectors(system, q, f)
    return replace(s, q_star=q, f_tilde=f, omega_q=proj.p_perp @ s.omega_q)


def constraint_residuals(system: SystemDef, s: ReducedState) -> tuple[float, float]:
    chi = float(np.abs(system.chi(s.q_star)).max())
    tan = float(np.abs(system.chi_jac(s.q_star) @ s.omega_q).max())
    return chi, tan


# -- integration -------------------------------------------------------------------

def _axpy(s: ReducedState, h: float, ds: ReducedState) -> ReducedState:
    return ReducedState(
        s.q_star + h * ds.q_star, s.f_tilde + h * ds.f_tilde, s.omega_q + h * ds.omega_q,
        s.omega_v + h * ds.omega_v, s.mom + h * ds.mom,
        None if s.a is None else s.a + h * ds.a,
    )


def rk4_step(rhs, s: ReducedState, dt: float) -> ReducedState:
    k1 = rhs(s)
    k2 = rhs(_axpy(s, dt / 2, k1))
    k3 = rhs(_axpy(s, dt / 2, k2))
    k4 = rhs(_axpy(s, dt, k3))
    y = s.to_vector() + dt / 6 * (k1.to_vector() + 2 * k2.to_vector() + 2 * k3.to_vector() + k4.to_vector())
    return ReducedState.from_vector(y, s.q_star.size, s.f_tilde.size, s.mom.size, s.a is not None)


def _rhs_for(system: SystemDef, cfg: IntegratorConfig):
    if cfg.equation_set == "full":
        return lambda s: rhs_full(system, s)
    return lambda s: rhs_special_case(system, s, cfg.drop_killing_terms)


def integrate(system: SystemDef, s0: ReducedState, cfg: IntegratorConfig) -> Trajectory:
    """Fixed-step RK4 with optional retraction after each step.

    A solver failure mid-run stops the integration; the samples computed so
    far are returned with the diagnostic in ``error``.
    """
    rhs = _rhs_for(system, cfg)
    n = cfg.n_steps
    states = [s0]
    error = None
    s = s0
    for k in range(n):
        try:
            s = rk4_step(rhs, s, cfg.dt)
            if cfg.retraction:
                s = retract(system, s)
            if s.a is not None:
                system.group.vbar(s.a)  # raises ChartDomainError outside the chart
            if system.section_sheet is not None and not system.section_sheet(s.q_star):
                raise GaugeSingular("left the preferred sheet of the gauge surface")
        except (ReductionError, np.linalg.LinAlgError) as exc:
            error = f"step {k + 1}: {type(exc).__name__}: {exc}"
            break
        if not np.all(np.isfinite(s.to_vector())):
            error = f"step {k + 1}: non-finite state"
            break
        states.append(s)
    return _collect(system, states, cfg.dt, error)


def _collect(system: SystemDef, states: list[ReducedState], dt: float, error: str | None) -> Trajectory:
    t = dt * np.arange(len(states))
    energy = np.array([reduced_energy(system, s) for s in states])
    res = np.array([constraint_residuals(system, s) for s in states])
    with_a = states[0].a is not None
    return Trajectory(
        system=system.name, t=t,
        q_star=np.array([s.q_star for s in states]), f_tilde=np.array([s.f_tilde for s in states]),
        omega_q=np.array([s.omega_q for s in states]), omega_v=np.array([s.omega_v for s in states]),
        mom=np.array([s.mom for s in states]), energy=energy,
        a=np.array([s.a for s in states]) if with_a else None,
        constraint=res[:, 0], tangency=res[:, 1], error=error,
    )


# -- momentum and reconstruction ------------------------------------------------

def momentum_from_velocity(system: SystemDef, p: AdaptedPoint, omega_g: np.ndarray,
                           convention: str = "d") -> np.ndarray:
    """p_s = M_{as} rho^a_e w^e with M the full orbit metric d or the Q-sector gamma."""
    geo = Geometry(system, p.q_star, p.f_tilde)
    if convention == "d":
        m = geo.d
    elif convention == "gamma":
        kq = geo.K[:system.n_p]
        m = kq.T @ system.metric_q(p.q_star) @ kq
    else:
        raise ValueError(f"unknown momentum convention {convention!r}")
    return m.T @ (system.group.rho(p.a) @ omega_g)


def group_velocity(system: SystemDef, s: ReducedState) -> np.ndarray:
    """Invert the momentum map: w^a = rho_bar (d^-1 p)."""
    geo = Geometry(system, s.q_star, s.f_tilde)
    return system.group.rho_bar(s.a) @ (geo.dinv @ s.mom)


def reconstruct_group(system: SystemDef, traj: Trajectory, a0: np.ndarray) -> np.ndarray:
    """Integrate da/dt = v (w^a - A~ w) along a stored trajectory.

    Stage values between samples use linear interpolation of the stored
    reduced variables, so the result is second order in dt.
    """
    group = system.group
    n = len(traj)
    out = np.empty((n, group.dim_g))
    out[0] = a = np.asarray(a0, dtype=float)

    def rate(i0, frac, a):
        def lerp(arr):
            return arr[i0] if frac == 0 else (1 - frac) * arr[i0] + frac * arr[i0 + 1]
        geo = Geometry(system, lerp(traj.q_star), lerp(traj.f_tilde))
        w = np.concatenate([lerp(traj.omega_q), lerp(traj.omega_v)])
        return group.vbar(a) @ (geo.dinv @ lerp(traj.mom) - geo.A @ w)

    for i in range(n - 1):
        dt = traj.t[i + 1] - traj.t[i]
        k1 = rate(i, 0.0, a)
        k2 = rate(i, 0.5, a + dt / 2 * k1)
        k3 = rate(i, 0.5, a + dt / 2 * k2)
        k4 = rate(i, 1.0, a + dt * k3)
        a = a + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = a
    return out


def initial_state(system: SystemDef, q_star, f_tilde, omega_q, omega_v, mom, a=None) -> ReducedState:
    """Build a ReducedState and make it consistent with the gauge surface."""
    s = ReducedState(np.asarray(q_star, float), np.asarray(f_tilde, float), np.asarray(omega_q, float),
                     np.asarray(omega_v, float), np.asarray(mom, float),
                     None if a is None else np.asarray(a, float))
    return retract(system, s)
