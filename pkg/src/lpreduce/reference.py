"""Direct Euler-Lagrange integration in the original coordinates and comparison tools."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import fd
from .dynamics import Trajectory, momentum_from_velocity
from .errors import GridMismatch
from .frame import basis_change_matrices, from_adapted, to_adapted
from .geometry import Geometry
from .system import SystemDef


@dataclass
class FullState:
    q: np.ndarray
    f: np.ndarray
    qdot: np.ndarray
    fdot: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.f, self.qdot, self.fdot])


@dataclass
class FullTrajectory:
    system: str
    t: np.ndarray
    q: np.ndarray
    f: np.ndarray
    qdot: np.ndarray
    fdot: np.ndarray
    energy: np.ndarray

    def __len__(self) -> int:
        return self.t.size


def _christoffel(system: SystemDef, q: np.ndarray) -> np.ndarray:
    """Gamma^A_{BC} of metric_q as [A, B, C]."""
    n = system.n_p
    if system.flat_metric:
        return np.zeros((n, n, n))
    dg = fd.jacobian(system.metric_q, q)  # [A, B, C] = G_{AB,C}
    low = 0.5 * (np.einsum("ABC->BCA", dg) + np.einsum("ACB->BCA", dg) - np.einsum("BCA->BCA", dg))
    return np.einsum("AD,BCD->ABC", system.metric_q_inv(q), low)


def el_rhs(system: SystemDef, s: FullState) -> tuple[np.ndarray, np.ndarray]:
    """Accelerations (Q'', f'') of the Euler-Lagrange equations."""
    gq, gf = system.potential_grad(s.q, s.f)
    qdd = -np.einsum("ABC,B,C->A", _christoffel(system, s.q), s.qdot, s.qdot) - system.metric_q_inv(s.q) @ gq
    fdd = -np.linalg.solve(system.metric_v, gf)
    return qdd, fdd


def full_energy(system: SystemDef, s: FullState) -> float:
    kin = 0.5 * s.qdot @ system.metric_q(s.q) @ s.qdot + 0.5 * s.fdot @ system.metric_v @ s.fdot
    return float(kin + system.potential(s.q, s.f))


def noether_charges(system: SystemDef, s: FullState) -> np.ndarray:
    """J_a = K^A_a G_AB xdot^B on P x V."""
    x = np.concatenate([s.q, s.f])
    xdot = np.concatenate([s.qdot, s.fdot])
    return system.killing_combined(x).T @ system.metric(s.q) @ xdot


def _deriv(system: SystemDef, y: np.ndarray) -> np.ndarray:
    n_p, n_v = system.n_p, system.n_v
    s = FullState(y[:n_p], y[n_p:n_p + n_v], y[n_p + n_v:2 * n_p + n_v], y[2 * n_p + n_v:])
    qdd, fdd = el_rhs(system, s)
    return np.concatenate([s.qdot, s.fdot, qdd, fdd])


def integrate_el(system: SystemDef, s0: FullState, dt: float, t_end: float) -> FullTrajectory:
    """Fixed-step RK4 on the Euler-Lagrange equations."""
    n_steps = int(round(t_end / dt))
    n_p, n_v = system.n_p, system.n_v
    ys = np.empty((n_steps + 1, 2 * (n_p + n_v)))
    ys[0] = y = s0.to_vector()
    for k in range(n_steps):
        k1 = _deriv(system, y)
        k2 = _deriv(system, y + dt / 2 * k1)
        k3 = _deriv(system, y + dt / 2 * k2)
        k4 = _deriv(system, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[k + 1] = y
    q, f = ys[:, :n_p], ys[:, n_p:n_p + n_v]
    qd, fd_ = ys[:, n_p + n_v:2 * n_p + n_v], ys[:, 2 * n_p + n_v:]
    energy = np.array([full_energy(system, FullState(*row)) for row in zip(q, f, qd, fd_)])
    return FullTrajectory(system.name, dt * np.arange(n_steps + 1), q, f, qd, fd_, energy)


def map_state(system: SystemDef, s: FullState, a0: np.ndarray | None = None, convention: str = "d"):
    """One full-space sample in reduced variables: (Q*, f~, w_q, w_v, p, a)."""
    pt = to_adapted(system, s.q, s.f, a0)
    bc = basis_change_matrices(system, pt)
    wq = bc.dqstar_dq @ s.qdot
    wv = bc.dftilde_dq @ s.qdot + bc.dftilde_df @ s.fdot
    adot = bc.da_dq @ s.qdot
    geo = Geometry(system, pt.q_star, pt.f_tilde)
    group = system.group
    omega_g = group.u(pt.a) @ adot + group.rho_bar(pt.a) @ (geo.A @ np.concatenate([wq, wv]))
    mom = momentum_from_velocity(system, pt, omega_g, convention)
    return pt.q_star, pt.f_tilde, wq, wv, mom, pt.a


def map_to_reduced(system: SystemDef, traj: FullTrajectory, convention: str = "d") -> Trajectory:
    """Push every sample of a full trajectory into reduced variables.

    The group solve at each sample is warm-started from the previous one so
    the group coordinate stays continuous.
    """
    rows = []
    a = None
    for i in range(len(traj)):
        s = FullState(traj.q[i], traj.f[i], traj.qdot[i], traj.fdot[i])
        rows.append(map_state(system, s, a, convention))
        a = rows[-1][5]
    cols = [np.array(c) for c in zip(*rows)]
    return Trajectory(system=system.name, t=traj.t.copy(), q_star=cols[0], f_tilde=cols[1],
                      omega_q=cols[2], omega_v=cols[3], mom=cols[4], energy=traj.energy.copy(), a=cols[5])


def unmap(system: SystemDef, traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """(Q, f) samples from a reduced trajectory carrying group coordinates."""
    if traj.a is None:
        raise ValueError("trajectory has no group coordinates")
    from .frame import AdaptedPoint
    out = [from_adapted(system, AdaptedPoint(qs, ft, a)) for qs, ft, a in zip(traj.q_star, traj.f_tilde, traj.a)]
    return np.array([o[0] for o in out]), np.array([o[1] for o in out])


# -- comparison ---------------------------------------------------------------------

VARIABLES = ("q_star", "f_tilde", "omega_q", "omega_v", "mom", "energy")


@dataclass
class ComparisonReport:
    rel_errors: dict[str, float]
    abs_errors: dict[str, float]
    energy_drift: dict[str, float]
    tolerance: float

    @property
    def max_rel_error(self) -> float:
        return max(self.rel_errors.values())

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def to_dict(self) -> dict:
        return {"rel_errors": self.rel_errors, "abs_errors": self.abs_errors,
                "energy_drift": self.energy_drift, "max_rel_error": self.max_rel_error,
                "tolerance": self.tolerance, "passed": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def compare(a: Trajectory, b: Trajectory, tolerance: float = 1e-6) -> ComparisonReport:
    """Per-variable max error of ``a`` against ``b``.

    The relative error of a variable group is its max absolute deviation
    divided by the max magnitude of that group in ``b`` (floored at 1e-12).
    """
    if a.t.shape != b.t.shape:
        raise GridMismatch(f"time grids differ in length: {a.t.size} vs {b.t.size}")
    scale_t = max(np.abs(b.t).max(initial=0.0), 1.0)
    if np.abs(a.t - b.t).max(initial=0.0) > 1e-9 * scale_t:
        raise GridMismatch("time grids differ")
    rel, absolute = {}, {}
    for name in VARIABLES:
        xa, xb = np.asarray(getattr(a, name)), np.asarray(getattr(b, name))
        if xa.shape != xb.shape:
            raise GridMismatch(f"{name} has shape {xa.shape} vs {xb.shape}")
        if xa.size == 0:
            rel[name] = absolute[name] = 0.0
            continue
        err = float(np.abs(xa - xb).max())
        absolute[name] = err
        rel[name] = err / max(float(np.abs(xb).max()), 1e-12)
    drift = {"a": float(np.abs(a.energy - a.energy[0]).max()), "b": float(np.abs(b.energy - b.energy[0]).max())}
    return ComparisonReport(rel, absolute, drift, tolerance)
