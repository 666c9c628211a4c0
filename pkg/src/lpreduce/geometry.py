"""Orbit metric, mechanical connection, curvature and horizontal Christoffels.

Everything is computed on the combined space ``x = (Q*, f~)`` of dimension
``n = n_p + n_v``.  Arrays use these layouts:

* ``K[A, alpha]``              Killing vectors
* ``dK[A, alpha, B]``          their partials K^A_{alpha,B}
* ``A[alpha, B]``              connection components
* ``dA[alpha, Q, R]``          partial of A^alpha_Q along R
* ``F[alpha, S, P]``           curvature
* ``gamma_r[A, B, M]``         raised Christoffels G^{AR} Gamma_{BMR}
* ``gf[A, alpha, Q]``          raised curvature G^{AE} F^alpha_{QE}
* ``gdd[A, kappa, sigma]``     raised covariant derivative G^{AR} D_R d^{kappa sigma}

Two pathways are provided: closed forms built from Killing vectors and their
first derivatives (constant metric only), and Richardson-refined finite
differences of the pointwise quantities.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from . import fd
from .errors import FDInconsistent, NotPositiveDefinite
from .system import SystemDef

FD_STEP = 1e-5
TOL_FIRST = 1e-6
TOL_SECOND = 1e-5


class Geometry:
    """Pointwise reduction geometry at ``(Q*, f~)``."""

    def __init__(self, system: SystemDef, q_star: np.ndarray, f_tilde: np.ndarray):
        self.system = system
        self.q = np.asarray(q_star, dtype=float)
        self.f = np.asarray(f_tilde, dtype=float)
        self.x = np.concatenate([self.q, self.f])
        self.n_p = system.n_p
        self.K = system.killing_combined(self.x)
        self.G = system.metric(self.q)
        self.Ginv = system.metric_inv(self.q)
        self.GK = self.G @ self.K
        self.d = self.K.T @ self.GK
        try:
            chol = np.linalg.cholesky(self.d)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("orbit metric is not positive definite") from None
        if np.min(np.abs(np.diag(chol))) < 1e-7 * max(1.0, np.max(np.abs(np.diag(chol)))):
            raise NotPositiveDefinite("orbit metric is numerically degenerate")
        eye = np.eye(self.d.shape[0])
        self.dinv = np.linalg.solve(chol.T, np.linalg.solve(chol, eye))
        self.A = self.dinv @ self.GK.T
        self.GH = self.G - self.GK @ self.A

    # -- block views -------------------------------------------------------

    @property
    def a_q(self) -> np.ndarray:
        return self.A[:, :self.n_p]

    @property
    def a_v(self) -> np.ndarray:
        return self.A[:, self.n_p:]

    @property
    def gh_qq(self) -> np.ndarray:
        return self.GH[:self.n_p, :self.n_p]

    @property
    def gh_qv(self) -> np.ndarray:
        return self.GH[:self.n_p, self.n_p:]

    @property
    def gh_vv(self) -> np.ndarray:
        return self.GH[self.n_p:, self.n_p:]

    @property
    def c(self) -> np.ndarray:
        return self.system.group.c

    @cached_property
    def dK(self) -> np.ndarray:
        return self.system.killing_combined_jac(self.x)

    @property
    def closed_form_available(self) -> bool:
        s = self.system
        return s.flat_metric and s.killing_q_jac_fn is not None

    # -- closed forms ------------------------------------------------------

    @cached_property
    def KdK(self) -> np.ndarray:
        """(K^D_nu K^A_{beta,D}) stored as [A, beta, nu]."""
        return np.einsum("abd,dn->abn", self.dK, self.K)

    @cached_property
    def dA(self) -> np.ndarray:
        """Closed-form partials A^alpha_{Q,R} as [alpha, Q, R]."""
        gka = self.GK @ self.A
        t1 = np.einsum("ae,seR,sQ->aQR", self.dinv, self.dK, gka)
        t2 = np.einsum("ad,dmR,mQ->aQR", self.A, self.dK, self.A)
        t3 = np.einsum("am,dmR,dQ->aQR", self.dinv, self.dK, self.G)
        return -t1 - t2 + t3

    def connection_partial_alt_v(self) -> np.ndarray:
        """Second printed form of A^beta_{B,m} (f-derivative of the Q-sector potential).

        2 d^{bm} (K^q_m K^p_{f,q}) G_{pm'} A^f_B + c^s_{fm} d^{bm} K^p_s A^f_B G_{pm'}
        returned as [beta, B, m'] with B over Q and m' over f.
        """
        n_p = self.n_p
        kv = self.K[n_p:]
        kdk_v = self.KdK[n_p:][:, :, :]  # [p, phi, mu] = K^q_mu K^p_{phi,q}
        gv = self.G[n_p:, n_p:]
        aq = self.A[:, :n_p]
        t1 = 2 * np.einsum("bm,pfm,pn,fB->bBn", self.dinv, kdk_v, gv, aq)
        t2 = np.einsum("sfm,bm,ps,fB,pn->bBn", self.c, self.dinv, kv, aq, gv)
        return t1 + t2

    @cached_property
    def F(self) -> np.ndarray:
        """Curvature F^alpha_{SP} from the closed-form partials."""
        return (self.dA.transpose(0, 2, 1) - self.dA
                + np.einsum("ans,nS,sP->aSP", self.c, self.A, self.A))

    @cached_property
    def gamma_raised(self) -> np.ndarray:
        """G^{AR} Gamma_{BMR} as [A, B, M]."""
        sym = self.dA + self.dA.transpose(0, 2, 1)
        t1 = -0.5 * np.einsum("am,mBM->aBM", self.K, sym)
        t2 = -(np.einsum("mM,amB->aBM", self.A, self.dK) + np.einsum("mB,amM->aBM", self.A, self.dK))
        t3 = 0.5 * (np.einsum("abn,bB,nM->aBM", self.KdK, self.A, self.A)
                    + np.einsum("abn,nB,bM->aBM", self.KdK, self.A, self.A))
        return t1 + t2 + t3

    @cached_property
    def gamma_lower(self) -> np.ndarray:
        """Gamma_{BMT} as [B, M, T]."""
        return np.einsum("ta,aBM->BMt", self.G, self.gamma_raised)

    @cached_property
    def gf(self) -> np.ndarray:
        """G^{AE} F^alpha_{QE} as [A, alpha, Q]."""
        t1 = -np.einsum("sfQ,fa,ms,Am->AaQ", self.dK, self.dinv, self.A, self.K)
        t1 -= np.einsum("sfQ,fm,as,Am->AaQ", self.dK, self.dinv, self.A, self.K)
        t2 = -np.einsum("Aen,ae,nQ->AaQ", self.KdK, self.dinv, self.A)
        t2 -= np.einsum("Aen,an,eQ->AaQ", self.KdK, self.dinv, self.A)
        t3 = 2 * np.einsum("am,AmQ->AaQ", self.dinv, self.dK)
        t4 = np.einsum("anm,nQ,mf,Af->AaQ", self.c, self.A, self.dinv, self.K)
        return t1 + t2 + t3 + t4

    @cached_property
    def gdd(self) -> np.ndarray:
        """G^{AR} D_R d^{kappa sigma}, symmetrised in (kappa, sigma)."""
        t1 = 2 * np.einsum("Amb,bk,ms->Aks", self.KdK, self.dinv, self.dinv)
        t2 = 2 * np.einsum("kbm,be,ms,Ae->Aks", self.c, self.dinv, self.dinv, self.K)
        t = t1 + t2
        return 0.5 * (t + t.transpose(0, 2, 1))

    @cached_property
    def dd_partials(self) -> np.ndarray:
        """Closed-form partials d_{mu nu, R} as [R, mu, nu] (constant metric)."""
        t = np.einsum("smR,sn->Rmn", self.dK, self.GK)
        return t + t.transpose(0, 2, 1)

    @cached_property
    def dd_upper(self) -> np.ndarray:
        """D_R d^{kappa sigma} as [R, kappa, sigma]."""
        ddinv = -np.einsum("km,Rmn,ns->Rks", self.dinv, self.dd_partials, self.dinv)
        return covariant_dinv(ddinv, self.A, self.c, self.dinv)

    @cached_property
    def dd_lower(self) -> np.ndarray:
        """D_R d_{alpha beta} as [R, alpha, beta]."""
        t = np.einsum("mR,nma,nb->Rab", self.A, self.c, self.d)
        return self.dd_partials - t - t.transpose(0, 2, 1)

    # -- energy ------------------------------------------------------------

    def energy(self, w: np.ndarray, p: np.ndarray) -> float:
        pot = self.system.potential(self.q, self.f)
        return float(0.5 * w @ self.GH @ w + 0.5 * p @ self.dinv @ p + pot)

    def force(self) -> np.ndarray:
        """G^{AR} V_{,R} on the combined space."""
        gq, gf_ = self.system.potential_grad(self.q, self.f)
        return self.Ginv @ np.concatenate([gq, gf_])


def covariant_dinv(ddinv: np.ndarray, a: np.ndarray, c: np.ndarray, dinv: np.ndarray) -> np.ndarray:
    """partial_R d^{ks} + A^a_R c^k_{an} d^{ns} + A^a_R c^s_{an} d^{nk}."""
    t = np.einsum("aR,kan,ns->Rks", a, c, dinv)
    return ddinv + t + t.transpose(0, 2, 1)


# -- finite-difference pathway -----------------------------------------------

def _pointwise(system: SystemDef, x: np.ndarray) -> Geometry:
    return Geometry(system, x[:system.n_p], x[system.n_p:])


def connection_partials_fd(system: SystemDef, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    return fd.jacobian(lambda y: _pointwise(system, y).A, x, h=h)


def curvature_fd(system: SystemDef, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    da = connection_partials_fd(system, x, h)
    geo = _pointwise(system, x)
    return da.transpose(0, 2, 1) - da + np.einsum("ans,nS,sP->aSP", geo.c, geo.A, geo.A)


def christoffel_fd(system: SystemDef, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """G^{AR} Gamma_{BMR} from finite differences of G^H."""
    dgh = fd.jacobian(lambda y: _pointwise(system, y).GH, x, h=h)  # [B, D, M]
    low = 0.5 * (np.einsum("BDM->BMD", dgh) + np.einsum("MDB->BMD", dgh) - dgh)
    geo = _pointwise(system, x)
    return np.einsum("AD,BMD->ABM", geo.Ginv, low)


def dinv_partials_fd(system: SystemDef, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    return fd.jacobian(lambda y: _pointwise(system, y).dinv, x, h=h).transpose(2, 0, 1)


def covariant_dd_fd(system: SystemDef, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    geo = _pointwise(system, x)
    return covariant_dinv(dinv_partials_fd(system, x, h), geo.A, geo.c, geo.dinv)


def raised_curvature_fd(system: SystemDef, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """G^{AE} F^alpha_{QE} from the finite-difference curvature."""
    f = curvature_fd(system, x, h)
    geo = _pointwise(system, x)
    return np.einsum("AE,aQE->AaQ", geo.Ginv, f)


def pathway_disagreement(geo: Geometry, h: float = FD_STEP) -> dict[str, float]:
    """Max abs difference between closed-form and finite-difference results."""
    s, x = geo.system, geo.x
    gdd_fd = np.einsum("AR,Rks->Aks", geo.Ginv, covariant_dd_fd(s, x, h))
    return {
        "connection_partials": float(np.abs(geo.dA - connection_partials_fd(s, x, h)).max()),
        "christoffel": float(np.abs(geo.gamma_raised - christoffel_fd(s, x, h)).max()),
        "curvature": float(np.abs(geo.gf - raised_curvature_fd(s, x, h)).max()),
        "covariant_dd": float(np.abs(geo.gdd - gdd_fd).max()),
    }


def check_pathways(geo: Geometry, h: float = FD_STEP) -> dict[str, float]:
    """Like pathway_disagreement but raises FDInconsistent beyond tolerance."""
    res = pathway_disagreement(geo, h)
    limits = {"connection_partials": TOL_FIRST, "christoffel": TOL_SECOND,
              "curvature": TOL_SECOND, "covariant_dd": TOL_SECOND}
    for key, value in res.items():
        if value > limits[key]:
            raise FDInconsistent(f"{key} pathways disagree by {value:.3e}")
    return res


# -- operation-style entry points -----------------------------------------------

def geometry(system: SystemDef, q_star: np.ndarray, f_tilde: np.ndarray) -> Geometry:
    return Geometry(system, q_star, f_tilde)


def orbit_metric(system: SystemDef, p) -> tuple[np.ndarray, np.ndarray]:
    geo = Geometry(system, p.q_star, p.f_tilde)
    return geo.d, geo.dinv


def connection(system: SystemDef, p) -> tuple[np.ndarray, np.ndarray]:
    geo = Geometry(system, p.q_star, p.f_tilde)
    return geo.a_q, geo.a_v


def horizontal_metric(system: SystemDef, p) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    geo = Geometry(system, p.q_star, p.f_tilde)
    return geo.gh_qq, geo.gh_qv, geo.gh_vv


def christoffel_h(system: SystemDef, p, pathway: str = "fd") -> np.ndarray:
    geo = Geometry(system, p.q_star, p.f_tilde)
    if pathway == "closed":
        return geo.gamma_raised
    return christoffel_fd(system, geo.x)


def curvature(system: SystemDef, p, pathway: str = "closed") -> np.ndarray:
    geo = Geometry(system, p.q_star, p.f_tilde)
    if pathway == "closed" and geo.closed_form_available:
        return geo.F
    return curvature_fd(system, geo.x)


def covariant_derivative_d(system: SystemDef, p, pathway: str = "closed") -> np.ndarray:
    geo = Geometry(system, p.q_star, p.f_tilde)
    if pathway == "closed" and geo.closed_form_available:
        return geo.dd_upper
    return covariant_dd_fd(system, geo.x)


def connection_partials(system: SystemDef, p, pathway: str = "closed") -> np.ndarray:
    geo = Geometry(system, p.q_star, p.f_tilde)
    if pathway == "closed" and geo.closed_form_available:
        return geo.dA
    return connection_partials_fd(system, geo.x)
