"""Adapted bundle coordinates (Q*, f~, a) built from the gauge surface."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GaugeSingular, NoConvergence
from .system import SystemDef, faddeev_popov, projectors

MAX_ITER = 50
MAX_HALVINGS = 8
TOL = 1e-12


@dataclass(frozen=True)
class AdaptedPoint:
    q_star: np.ndarray
    f_tilde: np.ndarray
    a: np.ndarray


@dataclass(frozen=True)
class ChartJacobian:
    f_ab: np.ndarray
    f_check: np.ndarray


@dataclass(frozen=True)
class BasisChange:
    """Coefficients expressing d/dQ^B and d/df^m in adapted coordinates.

    ``dqstar_dq[A, B]``, ``da_dq[alpha, B]`` and ``dftilde_dq[m, B]`` multiply
    d/dQ*^A, d/da^alpha and d/df~^m in the expansion of d/dQ^B;
    ``dftilde_df`` is D(a) acting on the field coordinates.
    """

    jac: ChartJacobian
    dqstar_dq: np.ndarray
    da_dq: np.ndarray
    dftilde_dq: np.ndarray
    dftilde_df: np.ndarray

    def inverse_jacobian(self) -> np.ndarray:
        """d(Q*, f~, a) / d(Q, f) as one matrix."""
        n_p = self.dqstar_dq.shape[0]
        n_v = self.dftilde_df.shape[0]
        g = self.da_dq.shape[0]
        out = np.zeros((n_p + n_v + g, n_p + n_v))
        out[:n_p, :n_p] = self.dqstar_dq
        out[n_p:n_p + n_v, :n_p] = self.dftilde_dq
        out[n_p:n_p + n_v, n_p:] = self.dftilde_df
        out[n_p + n_v:, :n_p] = self.da_dq
        return out


def _newton(system: SystemDef, q: np.ndarray, a: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    group = system.group
    qs = system.action(q, group.inverse(a))
    r = system.chi(qs)
    res = float(np.abs(r).max())
    for it in range(max_iter):
        if res < tol:
            return a
        _, phi_inv, _ = faddeev_popov(system, qs)
        delta = -phi_inv @ r
        step = 1.0
        for _ in range(MAX_HALVINGS + 1):
            a_new = group.compose(-step * delta, a)
            qs_new = system.action(q, group.inverse(a_new))
            r_new = system.chi(qs_new)
            res_new = float(np.abs(r_new).max())
            if res_new < res:
                break
            step *= 0.5
        a, qs, r, res = a_new, qs_new, r_new, res_new
    if res < tol:
        return a
    raise NoConvergence("gauge alignment did not converge", max_iter, res)


def solve_group_element(system: SystemDef, q: np.ndarray, a0: np.ndarray | None = None,
                        tol: float = TOL, max_iter: int = MAX_ITER) -> np.ndarray:
    """Find ``a`` with chi(F(Q, a^-1)) = 0 on the preferred sheet of the surface.

    Damped Newton in group coordinates; the update ``a <- exp(-delta) a`` moves
    Q* along its orbit by ``exp(delta)`` with ``delta = -Phi^-1 chi``.
    """
    q = np.asarray(q, dtype=float)
    if a0 is None:
        a0 = system.initial_guess(q) if system.initial_guess is not None else system.group.identity()
    a = _newton(system, q, np.asarray(a0, dtype=float), tol, max_iter)
    if system.section_sheet is None or system.section_sheet(system.action(q, system.group.inverse(a))):
        return a
    for flip in system.sheet_flips:
        cand = _newton(system, q, system.group.compose(system.group.inverse(flip), a), tol, max_iter)
        if system.section_sheet(system.action(q, system.group.inverse(cand))):
            return cand
    raise NoConvergence("no solution on the preferred sheet of the gauge surface", max_iter, 0.0)


def to_adapted(system: SystemDef, q: np.ndarray, f: np.ndarray, a0: np.ndarray | None = None) -> AdaptedPoint:
    a = solve_group_element(system, q, a0)
    a_inv = system.group.inverse(a)
    return AdaptedPoint(system.action(q, a_inv), system.group.rep_v(a_inv) @ f, a)


def from_adapted(system: SystemDef, p: AdaptedPoint) -> tuple[np.ndarray, np.ndarray]:
    return system.action(p.q_star, p.a), system.group.rep_v(p.a) @ p.f_tilde


def chart_jacobian(system: SystemDef, p: AdaptedPoint) -> ChartJacobian:
    f_ab = system.action_jac(p.q_star, p.a)
    return ChartJacobian(f_ab, np.linalg.inv(f_ab))


def basis_change_matrices(system: SystemDef, p: AdaptedPoint) -> BasisChange:
    jac = chart_jacobian(system, p)
    proj = projectors(system, p.q_star, p.f_tilde)
    lam_f = proj.lam @ jac.f_check
    return BasisChange(
        jac=jac,
        dqstar_dq=proj.n_qq @ jac.f_check,
        da_dq=system.group.vbar(p.a) @ lam_f,
        dftilde_dq=proj.n_vq @ jac.f_check,
        dftilde_df=system.group.rep_v(system.group.inverse(p.a)),
    )


def forward_jacobian(system: SystemDef, p: AdaptedPoint) -> np.ndarray:
    """d(Q, f) / d(Q*, f~, a) evaluated in closed form."""
    group = system.group
    n_p, n_v = system.n_p, system.n_v
    f_ab = system.action_jac(p.q_star, p.a)
    dbar = group.rep_v(p.a)
    ub = group.ubar(p.a)
    out = np.zeros((n_p + n_v, n_p + n_v + group.dim_g))
    out[:n_p, :n_p] = f_ab
    out[:n_p, n_p + n_v:] = f_ab @ system.killing_q(p.q_star) @ ub
    out[n_p:, n_p:n_p + n_v] = dbar
    out[n_p:, n_p + n_v:] = dbar @ system.killing_v(p.f_tilde) @ ub
    return out


__all__ = [
    "AdaptedPoint", "ChartJacobian", "BasisChange", "GaugeSingular",
    "solve_group_element", "to_adapted", "from_adapted", "chart_jacobian",
    "basis_change_matrices", "forward_jacobian",
]
