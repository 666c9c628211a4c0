"""Symmetric mechanical systems: Killing fields, gauge matrix and projectors.

A system lives on ``P x V`` with coordinates ``(Q, f)``.  The group acts on
the right, ``Q -> F(Q, a)`` and ``f -> Dbar(a) f``, and the gauge surface is
``chi(Q) = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import fd
from .errors import GaugeSingular, MetricSingular
from .lie import LieGroup

# Faddeev-Popov matrices with a larger condition number are treated as singular.
GAUGE_CONDITION_LIMIT = 1e12

Array = np.ndarray


@dataclass
class SystemDef:
    """Metric, action, gauge condition and potential of a mechanical system.

    All ``*_fn`` derivative hooks are optional; missing ones fall back to
    Richardson-refined central differences.  ``flat_metric`` declares that
    ``metric_q`` is constant, which enables the closed-form geometry.
    """

    name: str
    group: LieGroup
    n_p: int
    metric_q: Callable[[Array], Array]
    metric_v: Array
    action: Callable[[Array, Array], Array]
    chi: Callable[[Array], Array]
    potential: Callable[[Array, Array], float]
    killing_q_fn: Callable[[Array], Array] | None = None
    killing_q_jac_fn: Callable[[Array], Array] | None = None
    chi_jac_fn: Callable[[Array], Array] | None = None
    chi_hess_fn: Callable[[Array], Array] | None = None
    potential_grad_fn: Callable[[Array, Array], tuple[Array, Array]] | None = None
    action_jac_fn: Callable[[Array, Array], Array] | None = None
    flat_metric: bool = False
    initial_guess: Callable[[Array], Array] | None = None
    section_sheet: Callable[[Array], bool] | None = None
    sheet_flips: Sequence[Array] = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.metric_v = np.atleast_2d(np.asarray(self.metric_v, dtype=float))
        if self.group.dim_v != self.n_v:
            raise ValueError(f"field representation has dim {self.group.dim_v}, metric_v has {self.n_v}")

    @property
    def n_v(self) -> int:
        return self.metric_v.shape[0]

    @property
    def dim_g(self) -> int:
        return self.group.dim_g

    @property
    def n(self) -> int:
        return self.n_p + self.n_v

    # -- derivatives with finite-difference fallback ------------------------

    def killing_q(self, q: Array) -> Array:
        """K^A_alpha(Q) as an (n_p, dim_g) array."""
        if self.killing_q_fn is not None:
            return np.asarray(self.killing_q_fn(q), dtype=float)
        return fd.jacobian(lambda a: self.action(q, a), self.group.identity(), h=1e-6)

    def killing_v(self, f: Array) -> Array:
        """K^p_alpha(f) = (Jbar_alpha f)^p as an (n_v, dim_g) array."""
        return np.einsum("apm,m->pa", self.group.jbar, f)

    def killing_q_jac(self, q: Array) -> Array:
        """K^A_{alpha,B} as (n_p, dim_g, n_p)."""
        if self.killing_q_jac_fn is not None:
            return np.asarray(self.killing_q_jac_fn(q), dtype=float)
        return fd.jacobian(self.killing_q, q)

    def chi_jac(self, q: Array) -> Array:
        if self.chi_jac_fn is not None:
            return np.atleast_2d(np.asarray(self.chi_jac_fn(q), dtype=float))
        return fd.jacobian(self.chi, q)

    def chi_hess(self, q: Array) -> Array:
        if self.chi_hess_fn is not None:
            return np.asarray(self.chi_hess_fn(q), dtype=float)
        return fd.jacobian(self.chi_jac, q)

    def potential_grad(self, q: Array, f: Array) -> tuple[Array, Array]:
        if self.potential_grad_fn is not None:
            gq, gf = self.potential_grad_fn(q, f)
            return np.asarray(gq, dtype=float), np.asarray(gf, dtype=float)
        x = np.concatenate([q, f])
        g = fd.jacobian(lambda y: np.array(self.potential(y[:self.n_p], y[self.n_p:])), x)
        return g[:self.n_p], g[self.n_p:]

    def action_jac(self, q: Array, a: Array) -> Array:
        """F^A_B(Q, a) = dF^A/dQ^B."""
        if self.action_jac_fn is not None:
            return np.asarray(self.action_jac_fn(q, a), dtype=float)
        return fd.jacobian(lambda y: self.action(y, a), q)

    def metric_q_inv(self, q: Array) -> Array:
        g = self.metric_q(q)
        try:
            return np.linalg.inv(g)
        except np.linalg.LinAlgError as exc:
            raise MetricSingular(f"metric_q singular at Q={q}") from exc

    def metric(self, q: Array) -> Array:
        """Block-diagonal metric on P x V."""
        g = np.zeros((self.n, self.n))
        g[:self.n_p, :self.n_p] = self.metric_q(q)
        g[self.n_p:, self.n_p:] = self.metric_v
        return g

    def metric_inv(self, q: Array) -> Array:
        g = np.zeros((self.n, self.n))
        g[:self.n_p, :self.n_p] = self.metric_q_inv(q)
        g[self.n_p:, self.n_p:] = np.linalg.inv(self.metric_v)
        return g

    def killing_combined(self, x: Array) -> Array:
        """Killing vectors on P x V as an (n, dim_g) array."""
        return np.vstack([self.killing_q(x[:self.n_p]), self.killing_v(x[self.n_p:])])

    def killing_combined_jac(self, x: Array) -> Array:
        """K^{A~}_{alpha,B~} on P x V as (n, dim_g, n)."""
        n_p = self.n_p
        dk = np.zeros((self.n, self.dim_g, self.n))
        dk[:n_p, :, :n_p] = self.killing_q_jac(x[:n_p])
        dk[n_p:, :, n_p:] = self.group.jbar.transpose(1, 0, 2)
        return dk

    # -- sampled invariance checks ---------------------------------------------

    def invariance_residuals(self, q: Array, f: Array, a: Array) -> dict[str, float]:
        """Potential and metric invariance plus F(Q, e) = Q at one sample."""
        q2 = self.action(q, a)
        f2 = self.group.rep_v(a) @ f
        v_res = abs(self.potential(q2, f2) - self.potential(q, f))
        jac = self.action_jac(q, a)
        pull = jac.T @ self.metric_q(q2) @ jac
        m_res = float(np.abs(pull - self.metric_q(q)).max())
        dv = self.group.rep_v(a)
        mv_res = float(np.abs(dv.T @ self.metric_v @ dv - self.metric_v).max()) if self.n_v else 0.0
        e_res = float(np.abs(self.action(q, self.group.identity()) - q).max())
        return {"potential": float(v_res), "metric": max(m_res, mv_res), "identity": e_res}

    def killing_equation_residual(self, q: Array) -> float:
        """Max entry of the Lie derivative of G_AB along each Killing field."""
        k = self.killing_q(q)
        dk = self.killing_q_jac(q)
        g = self.metric_q(q)
        dg = np.zeros((self.n_p, self.n_p, self.n_p)) if self.flat_metric else fd.jacobian(self.metric_q, q)
        lie = (np.einsum("abc,ck->kab", dg, k) + np.einsum("cb,cka->kab", g, dk)
               + np.einsum("ac,ckb->kab", g, dk))
        return float(np.abs(lie).max())


@dataclass(frozen=True)
class KillingField:
    kq: Array
    kv: Array


@dataclass(frozen=True)
class Projectors:
    """Faddeev-Popov matrix and the projectors built from it.

    Matrices follow ``[upper, lower]`` index order, so ``n_qq @ v`` applies
    ``N^A_C v^C``.  In this form the mixed identities read
    ``n_qq @ p_perp = p_perp`` and ``p_perp @ n_qq = n_qq``.
    """

    phi: Array
    phi_inv: Array
    lam: Array
    n_qq: Array
    n_vq: Array
    p_perp: Array
    gamma: Array
    condition: float


def killing(system: SystemDef, q: Array, f: Array) -> KillingField:
    return KillingField(system.killing_q(q), system.killing_v(f))


def faddeev_popov(system: SystemDef, q: Array) -> tuple[Array, Array, float]:
    """Phi^beta_mu = chi^beta_{,A} K^A_mu and its inverse.

    Raises GaugeSingular when Phi is numerically singular.
    """
    return faddeev_popov_from(system.chi_jac(q), system.killing_q(q))


def faddeev_popov_from(chi_a: Array, kq: Array) -> tuple[Array, Array, float]:
    return _invert_phi(chi_a @ kq)


def _invert_phi(phi: Array) -> tuple[Array, Array, float]:
    if not np.all(np.isfinite(phi)):
        raise GaugeSingular("Faddeev-Popov matrix is not finite")
    cond = float(np.linalg.cond(phi)) if phi.size else 1.0
    if not np.isfinite(cond) or cond > GAUGE_CONDITION_LIMIT:
        raise GaugeSingular("Faddeev-Popov matrix is singular", cond)
    import scipy.linalg as sla
    lu = sla.lu_factor(phi)
    return phi, sla.lu_solve(lu, np.eye(phi.shape[0])), cond


def projectors(system: SystemDef, q: Array, f: Array) -> Projectors:
    kq = system.killing_q(q)
    kv = system.killing_v(f)
    chi_a = system.chi_jac(q)
    phi, phi_inv, cond = _invert_phi(chi_a @ kq)
    lam = phi_inv @ chi_a
    n_qq = np.eye(system.n_p) - kq @ lam
    n_vq = -kv @ lam
    g = system.metric_q(q)
    ginv = system.metric_q_inv(q)
    gamma = kq.T @ g @ kq
    # (chi^T)^A_mu = G^{AB} gamma_{mu nu} chi^nu_B
    chi_t = ginv @ chi_a.T @ gamma.T
    p_perp = np.eye(system.n_p) - chi_t @ np.linalg.solve(chi_a @ chi_t, chi_a)
    return Projectors(phi, phi_inv, lam, n_qq, n_vq, p_perp, gamma, cond)
