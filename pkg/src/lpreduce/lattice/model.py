"""Yang-Mills plus scalar field on a site lattice, as structured operators and as a SystemDef.

Array layouts: gauge fields ``A[x, i, alpha]``, scalar fields ``f[x, a]`` and
group-valued fields ``xi[x, alpha]``; flattening is C-order, so alpha runs
fastest, then the direction i, then the row-major site index.

Two conventions matter when comparing with the finite-dimensional engine.
Lattice sums carry the cell volume h^D, so the flat metric is h^D (kappa x 1).
Momenta here are densities: the finite-dimensional momentum is h^D p.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.linalg import block_diag

from ..lie import ProductGroup
from ..system import SystemDef
from .config import LatticeConfig
from .operators import Factorized, derivative_ops


class LatticeModel:
    """Fixed lattice data: difference operators, group and metric constants."""

    def __init__(self, cfg: LatticeConfig):
        self.cfg = cfg
        self.group = cfg.base_group()
        self.c = self.group.c
        self.jbar = self.group.jbar
        self.kappa = cfg.kappa()
        self.kappa_inv = np.linalg.inv(self.kappa)
        self.gv = cfg.scalar_metric * np.eye(self.group.dim_v)
        self.gv_inv = np.linalg.inv(self.gv)
        self.ops = derivative_ops(cfg.dim, cfg.size, cfg.h, cfg.boundary)
        self.n_sites = cfg.n_sites
        self.dim = cfg.dim
        self.g = self.group.dim_g
        self.dv = self.group.dim_v

    # -- shapes ------------------------------------------------------------------

    @property
    def n_p(self) -> int:
        return self.n_sites * self.dim * self.g

    @property
    def n_v(self) -> int:
        return self.n_sites * self.dv

    @property
    def n_group(self) -> int:
        return self.n_sites * self.g

    def gauge(self, flat: np.ndarray) -> np.ndarray:
        return np.asarray(flat).reshape(self.n_sites, self.dim, self.g)

    def scalar(self, flat: np.ndarray) -> np.ndarray:
        return np.asarray(flat).reshape(self.n_sites, self.dv)

    def algebra(self, flat: np.ndarray) -> np.ndarray:
        return np.asarray(flat).reshape(self.n_sites, self.g)

    # -- derivatives on site fields ------------------------------------------------

    def d(self, i: int, phi: np.ndarray) -> np.ndarray:
        """Central difference along axis i of a site field of any trailing shape."""
        shape = phi.shape
        return (self.ops[i] @ phi.reshape(self.n_sites, -1)).reshape(shape)

    def d_t(self, i: int, phi: np.ndarray) -> np.ndarray:
        shape = phi.shape
        return (self.ops[i].T @ phi.reshape(self.n_sites, -1)).reshape(shape)

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """(c x y)^alpha = c^alpha_{mu nu} x^mu y^nu, sitewise."""
        return np.einsum("amn,...m,...n->...a", self.c, x, y)

    def covariant(self, a: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """(D_i xi)^mu = C_i xi^mu + c^mu_{nu alpha} A^nu_i xi^alpha, shape (S, D, g)."""
        out = np.stack([self.d(i, xi) for i in range(self.dim)], axis=1)
        return out + self.bracket(a, xi[:, None, :])

    def covariant_t(self, a: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """Adjoint of ``covariant`` under the plain site sum, shape (S, g)."""
        out = sum(self.d_t(i, eta[:, i]) for i in range(self.dim))
        return out + np.einsum("mna,xin,xim->xa", self.c, a, eta)

    def charge(self, f: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """(Jbar_alpha f) xi^alpha, shape (S, V)."""
        return np.einsum("apm,xm,xa->xp", self.jbar, f, xi)

    def charge_t(self, f: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """(Jbar_alpha f) . eta, shape (S, g)."""
        return np.einsum("apm,xm,xp->xa", self.jbar, f, eta)

    # -- field strength and potential -----------------------------------------------------

    def field_strength(self, a: np.ndarray) -> np.ndarray:
        """F[x, i, j, alpha] = C_i A_j - C_j A_i + c A_i A_j."""
        da = np.stack([self.d(i, a) for i in range(self.dim)], axis=1)  # [x, i, j, alpha]
        return da - da.transpose(0, 2, 1, 3) + np.einsum("amn,xim,xjn->xija", self.c, a, a)

    def scalar_gradient(self, a: np.ndarray, f: np.ndarray) -> np.ndarray:
        """(nabla_i f) = C_i f - Jbar_alpha A^alpha_i f, shape (S, D, V)."""
        df = np.stack([self.d(i, f) for i in range(self.dim)], axis=1)
        return df - np.einsum("apm,xia,xm->xip", self.jbar, a, f)

    def potential_density(self, a: np.ndarray, f: np.ndarray) -> float:
        """Sum over sites of 1/4 kappa F F + 1/2 G |nabla f|^2 + quartic f^4 (no h^D)."""
        cfg = self.cfg
        fs = self.field_strength(a)
        nf = self.scalar_gradient(a, f)
        ym = 0.25 * np.einsum("ab,xija,xijb->", self.kappa, fs, fs)
        kin = 0.5 * np.einsum("pq,xip,xiq->", self.gv, nf, nf)
        r2 = np.einsum("xp,xp->x", f, f)
        v0 = 0.25 * cfg.quartic * np.sum((r2 - cfg.vev ** 2) ** 2)
        return float(ym + kin + v0)

    def potential(self, a: np.ndarray, f: np.ndarray) -> float:
        return self.cfg.volume * self.potential_density(a, f)

    def potential_grad_density(self, a: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Exact gradient of ``potential_density`` in (A, f)."""
        cfg = self.cfg
        fs = self.field_strength(a)
        kf = np.einsum("ab,xijb->xija", self.kappa, fs)
        # sum_i [C_i^T (kappa F_ik) + c^a_{m g} A^m_i (kappa F_ik)_a]
        ga = np.stack([sum(self.d_t(i, kf[:, i, k]) for i in range(self.dim))
                       + np.einsum("amg,xim,xia->xg", self.c, a, kf[:, :, k])
                       for k in range(self.dim)], axis=1)
        nf = self.scalar_gradient(a, f)
        gnf = np.einsum("pq,xiq->xip", self.gv, nf)
        ga = ga - np.einsum("apm,xm,xip->xia", self.jbar, f, gnf)
        gf = sum(self.d_t(i, gnf[:, i]) for i in range(self.dim))
        gf = gf - np.einsum("apm,xia,xip->xm", self.jbar, a, gnf)
        r2 = np.einsum("xp,xp->x", f, f)
        gf = gf + cfg.quartic * (r2 - cfg.vev ** 2)[:, None] * f
        return ga, gf

    def potential_grad(self, a: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ga, gf = self.potential_grad_density(a, f)
        return self.cfg.volume * ga, self.cfg.volume * gf

    def force(self, a: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Raised gradient G^{-1} grad V: gauge part -D_j F_ji plus current, scalar part."""
        ga, gf = self.potential_grad_density(a, f)
        return ga @ self.kappa_inv.T, gf @ self.gv_inv.T

    # -- gauge transformations and constraint ---------------------------------------------------

    def transform(self, a: np.ndarray, f: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """A_i -> rho(-g) A_i + u(g) C_i g and f -> Dbar(g) f at every site."""
        grp = self.group
        dg = np.stack([self.d(i, g) for i in range(self.dim)], axis=1)
        a2 = np.empty_like(a)
        f2 = np.empty_like(f)
        for x in range(self.n_sites):
            rho_inv = grp.rho(-g[x])
            u = grp.u(g[x])
            a2[x] = a[x] @ rho_inv.T + dg[x] @ u.T
            f2[x] = grp.rep_v(g[x]) @ f[x]
        return a2, f2

    def divergence(self, a: np.ndarray) -> np.ndarray:
        """Coulomb condition sum_i C_i A_i, shape (S, g)."""
        return sum(self.d(i, a[:, i]) for i in range(self.dim))

    # -- sparse operators -----------------------------------------------------------------

    @cached_property
    def _derivative_blocks(self) -> sp.csr_matrix:
        """Sparse map xi[x, alpha] -> (C_i xi)[x, i, alpha]."""
        eye_g = sp.identity(self.g, format="csr")
        rows = []
        for i in range(self.dim):
            rows.append(sp.kron(self.ops[i], eye_g, format="csr"))
        stacked = sp.vstack(rows, format="csr")  # ordering (i, x, alpha)
        return stacked[self._site_major]

    @cached_property
    def _site_major(self) -> np.ndarray:
        """Positions of the (x, i, alpha) ordering inside the (i, x, alpha) ordering."""
        return np.arange(self.n_p).reshape(self.dim, self.n_sites, self.g).transpose(1, 0, 2).ravel()

    def killing_matrix(self, a: np.ndarray, f: np.ndarray) -> sp.csr_matrix:
        """Sparse Killing matrix K, rows (A then f), columns group field."""
        loc = np.einsum("mna,xin->xima", self.c, a)  # [x, i, mu, alpha]
        s, dd, g = self.n_sites, self.dim, self.g
        rows = (np.arange(s * dd * g).reshape(s, dd, g)[:, :, :, None] * np.ones((1, 1, 1, g), int)).ravel()
        cols = (np.arange(s)[:, None, None, None] * g + np.arange(g)[None, None, None, :]
                + np.zeros((1, dd, g, 1), int)).ravel()
        ka = self._derivative_blocks + sp.csr_matrix((loc.ravel(), (rows, cols)), shape=(self.n_p, self.n_group))
        jf = np.einsum("apm,xm->xpa", self.jbar, f)  # [x, p, alpha]
        rows_v = (np.arange(s * self.dv).reshape(s, self.dv)[:, :, None] * np.ones((1, 1, g), int)).ravel()
        cols_v = (np.arange(s)[:, None, None] * g + np.arange(g)[None, None, :] + np.zeros((1, self.dv, 1), int)).ravel()
        kv = sp.csr_matrix((jf.ravel(), (rows_v, cols_v)), shape=(self.n_v, self.n_group))
        return sp.vstack([ka, kv], format="csr")

    def metric_density(self) -> sp.csr_matrix:
        """kappa x 1 on gauge slots, G_ab x 1 on scalar slots, without the cell volume."""
        return sp.block_diag([sp.kron(sp.identity(self.n_sites * self.dim), self.kappa),
                              sp.kron(sp.identity(self.n_sites), self.gv)], format="csr")

    def divergence_matrix(self) -> sp.csr_matrix:
        """chi as a sparse map from flat A to the flat group field."""
        eye_g = sp.identity(self.g, format="csr")
        blocks = [sp.kron(self.ops[i], eye_g, format="csr") for i in range(self.dim)]
        stacked = sp.hstack(blocks, format="csc")  # columns ordered (i, x, alpha)
        return stacked[:, self._site_major].tocsr()

    def fp_operator(self, a: np.ndarray) -> sp.csr_matrix:
        """Faddeev-Popov operator sum_i C_i D_i[A] on group fields."""
        k = self.killing_matrix(a, np.zeros((self.n_sites, self.dv)))[:self.n_p]
        return (self.divergence_matrix() @ k).tocsr()

    def orbit_operator(self, a: np.ndarray, f: np.ndarray) -> sp.csr_matrix:
        """D^T kappa D + (Jbar f)^T G (Jbar f): the orbit metric density."""
        k = self.killing_matrix(a, f)
        return (k.T @ self.metric_density() @ k).tocsr()

    def fp_factor(self, a: np.ndarray) -> Factorized:
        return Factorized(self.fp_operator(a), "Faddeev-Popov operator",
                          pseudo=self.cfg.boundary == "periodic")

    def orbit_factor(self, a: np.ndarray, f: np.ndarray) -> Factorized:
        return Factorized(self.orbit_operator(a, f), "orbit operator",
                          pseudo=self.cfg.boundary == "periodic")


def fp_solve(model: LatticeModel, a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (sum_i C_i D_i[A]) xi = rhs for a group field xi."""
    return model.algebra(model.fp_factor(a).solve(np.ravel(rhs)))


def orbit_solve(model: LatticeModel, a: np.ndarray, f: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Apply the Green function of the orbit operator to a group field."""
    return model.algebra(model.orbit_factor(a, f).solve(np.ravel(rhs)))


# -- dense SystemDef ---------------------------------------------------------------

def dense_killing(model: LatticeModel, a_flat: np.ndarray) -> np.ndarray:
    """K^{(mu,i,x)}_{(alpha,y)} = C_i[x, y] delta^mu_alpha + c^mu_{nu alpha} A^nu_i(x) delta_xy."""
    a = model.gauge(a_flat)
    s, dd, g = model.n_sites, model.dim, model.g
    k = np.zeros((s, dd, g, s, g))
    for i in range(dd):
        ci = model.ops[i].toarray()
        for mu in range(g):
            k[:, i, mu, :, mu] += ci
    loc = np.einsum("mna,xin->xima", model.c, a)
    for x in range(s):
        k[x, :, :, x, :] += loc[x]
    return k.reshape(s * dd * g, s * g)


def dense_killing_jac(model: LatticeModel) -> np.ndarray:
    """K^{(mu,i,x)}_{(alpha,y),(nu,j,z)} = c^mu_{nu alpha} delta_ij delta_xy delta_xz."""
    s, dd, g = model.n_sites, model.dim, model.g
    out = np.zeros((s, dd, g, s, g, s, dd, g))
    for x in range(s):
        for i in range(dd):
            out[x, i, :, x, :, x, i, :] = model.c.transpose(0, 2, 1)
    return out.reshape(s * dd * g, s * g, s * dd * g)


def build_system(cfg: LatticeConfig) -> SystemDef:
    """The lattice as a finite-dimensional symmetric system for the generic engine."""
    model = LatticeModel(cfg)
    grp = ProductGroup(model.group, model.n_sites)
    vol = cfg.volume
    gq = vol * np.kron(np.eye(model.n_sites * model.dim), model.kappa)
    gv = vol * np.kron(np.eye(model.n_sites), model.gv)
    chi_mat = model.divergence_matrix().toarray()
    kjac = dense_killing_jac(model)

    def action(q, g):
        a2, _ = model.transform(model.gauge(q), np.zeros((model.n_sites, model.dv)), model.algebra(g))
        return a2.ravel()

    def action_jac(q, g):
        blocks = [np.kron(np.eye(model.dim), model.group.rho(-gx)) for gx in model.algebra(g)]
        return block_diag(*blocks)

    def potential(q, f):
        return model.potential(model.gauge(q), model.scalar(f))

    def potential_grad(q, f):
        ga, gf = model.potential_grad(model.gauge(q), model.scalar(f))
        return ga.ravel(), gf.ravel()

    return SystemDef(
        name="gauge-lattice",
        group=grp,
        n_p=model.n_p,
        metric_q=lambda q: gq,
        metric_v=gv,
        action=action,
        chi=lambda q: chi_mat @ q,
        potential=potential,
        killing_q_fn=lambda q: dense_killing(model, q),
        killing_q_jac_fn=lambda q: kjac,
        chi_jac_fn=lambda q: chi_mat,
        chi_hess_fn=lambda q: np.zeros((model.n_group, model.n_p, model.n_p)),
        potential_grad_fn=potential_grad,
        action_jac_fn=action_jac,
        flat_metric=True,
        initial_guess=lambda q: np.zeros(model.n_group),
        params=dict(cfg.to_dict()),
    )
