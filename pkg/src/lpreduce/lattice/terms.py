"""Gauge-field forms of the twelve horizontal-equation blocks, built from lattice operators.

Every piece is written with site fields and the two Green functions (the
orbit operator and, for the projectors, the Faddeev-Popov operator).  The
notation inside the functions follows the field expressions:

* ``D(xi)``         covariant derivative D_i xi of a group field
* ``Jf(xi)``        charge rotation (Jbar_alpha f) xi^alpha of the scalar
* ``Dt``/``Jft``    their adjoints (site sums, no cell volume)
* ``conn(w)``       connection applied to a velocity, O^{-1}(D^T kappa wA + (Jbar f)^T G wf)
* ``P``             O^{-1} p, the group velocity carried by the momentum density

Gauge-sector pieces return (S, D, g) arrays, scalar-sector pieces (S, V).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UnknownTerm
from ..terms import BLOCKS, KILLING_FREE_Q, WEIGHTS
from .model import LatticeModel
from .operators import Factorized


@dataclass
class GaugeFieldState:
    """Lattice state in adapted variables; ``p`` is a momentum density."""

    a: np.ndarray
    f: np.ndarray
    a_dot: np.ndarray
    f_dot: np.ndarray
    p: np.ndarray

    def copy(self) -> "GaugeFieldState":
        return GaugeFieldState(self.a.copy(), self.f.copy(), self.a_dot.copy(), self.f_dot.copy(), self.p.copy())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([x.ravel() for x in (self.a, self.f, self.a_dot, self.f_dot, self.p)])

    @classmethod
    def from_vector(cls, model: LatticeModel, y: np.ndarray) -> "GaugeFieldState":
        sizes = [model.n_p, model.n_v, model.n_p, model.n_v, model.n_group]
        parts = np.split(y, np.cumsum(sizes)[:-1])
        return cls(model.gauge(parts[0]).copy(), model.scalar(parts[1]).copy(), model.gauge(parts[2]).copy(),
                   model.scalar(parts[3]).copy(), model.algebra(parts[4]).copy())

    @classmethod
    def zeros(cls, model: LatticeModel) -> "GaugeFieldState":
        s, d, g, v = model.n_sites, model.dim, model.g, model.dv
        return cls(np.zeros((s, d, g)), np.zeros((s, v)), np.zeros((s, d, g)), np.zeros((s, v)), np.zeros((s, g)))


class LatticeGeometry:
    """Factorized operators at one adapted configuration (A*, f~); immutable after construction."""

    def __init__(self, model: LatticeModel, a: np.ndarray, f: np.ndarray):
        self.model = model
        self.a = a
        self.f = f
        self.orbit: Factorized = model.orbit_factor(a, f)

    def green(self, rhs: np.ndarray) -> np.ndarray:
        """Orbit-operator Green function applied to a group field."""
        return self.model.algebra(self.orbit.solve(rhs.ravel()))

    def D(self, xi: np.ndarray) -> np.ndarray:
        return self.model.covariant(self.a, xi)

    def Dt(self, eta: np.ndarray) -> np.ndarray:
        return self.model.covariant_t(self.a, eta)

    def Jf(self, xi: np.ndarray) -> np.ndarray:
        return self.model.charge(self.f, xi)

    def Jft(self, eta: np.ndarray) -> np.ndarray:
        return self.model.charge_t(self.f, eta)

    def kappa(self, w_a: np.ndarray) -> np.ndarray:
        return w_a @ self.model.kappa.T

    def gv(self, w_f: np.ndarray) -> np.ndarray:
        return w_f @ self.model.gv.T

    def conn(self, w_a: np.ndarray, w_f: np.ndarray) -> np.ndarray:
        return self.green(self.Dt(self.kappa(w_a)) + self.Jft(self.gv(w_f)))

    def conn_t(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Transpose of the connection acting on a momentum density."""
        x = self.green(p)
        return self.kappa(self.D(x)), self.gv(self.Jf(x))

    # derivatives of the Killing fields along a velocity (w_a, w_f)
    def adw(self, w_a: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """c^mu_{nu alpha} w^nu_i xi^alpha."""
        return self.model.bracket(w_a, xi[:, None, :])

    def adw_t(self, w_a: np.ndarray, eta: np.ndarray) -> np.ndarray:
        return np.einsum("mna,xin,xim->xa", self.model.c, w_a, eta)

    def jw(self, w_f: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return self.model.charge(w_f, xi)

    def jw_t(self, w_f: np.ndarray, eta: np.ndarray) -> np.ndarray:
        return self.model.charge_t(w_f, eta)


class GaugeTerms:
    """All twelve blocks at one lattice state, each split into its named pieces."""

    def __init__(self, geo: LatticeGeometry, state: GaugeFieldState):
        self.geo = geo
        self.s = state
        self.ad = state.a_dot
        self.fd = state.f_dot
        zero_a = np.zeros_like(state.a_dot)
        zero_f = np.zeros_like(state.f_dot)
        self.aw_q = geo.conn(self.ad, zero_f)   # A^(a,x) of w_q
        self.aw_v = geo.conn(zero_a, self.fd)   # A^(a,x) of w_p
        self.P = geo.green(state.p)
        self._zero_a = zero_a
        self._zero_f = zero_f

    # -- shared pieces ----------------------------------------------------------------

    def _k(self, xi):
        """Killing vector applied to a group field: gauge and scalar parts."""
        return self.geo.D(xi), self.geo.Jf(xi)

    def _dk_t(self, w_a, w_f, eta_a, eta_f):
        """(K_{,w})^T applied to a covector (eta_a, eta_f)."""
        g = self.geo
        out = 0.0
        if w_a is not None:
            out = out + g.adw_t(w_a, eta_a)
        if w_f is not None:
            out = out + g.jw_t(w_f, eta_f)
        return out

    def _dk(self, w_a, w_f, xi):
        """K_{,w} applied to a group field."""
        g = self.geo
        ra = g.adw(w_a, xi) if w_a is not None else self._zero_a
        rf = g.jw(w_f, xi) if w_f is not None else self._zero_f
        return ra, rf

    def _t1(self, aw1, w2):
        """Green[(K_{,w2})^T G K A w1]."""
        ka, kf = self._k(aw1)
        return self.geo.green(self._dk_t(*w2, self.geo.kappa(ka), self.geo.gv(kf)))

    def _t2(self, aw1, w2):
        """A[K_{,w2} A w1]."""
        ra, rf = self._dk(*w2, aw1)
        return self.geo.conn(ra, rf)

    def _t3(self, w1, w2):
        """Green[(K_{,w2})^T G w1]."""
        return self.geo.green(self._dk_t(*w2, self.geo.kappa(w1[0]) if w1[0] is not None else None,
                                         self.geo.gv(w1[1]) if w1[1] is not None else None))

    def _kk(self, xi, w_other):
        """K_{,(K xi)} A w: rotation of the Killing field along another Killing direction."""
        ka, kf = self._k(xi)
        return self._dk(ka, kf, w_other)

    # -- Christoffel blocks ---------------------------------------------------------------

    def _gamma_diag(self, w, aw, lead_minus2: bool, rows: str):
        g = self.geo
        k_rows = (lambda xi: g.D(xi)) if rows == "q" else (lambda xi: g.Jf(xi))
        pick = 0 if rows == "q" else 1
        out = {
            "I_1": k_rows(self._t1(aw, w)),
            "I_2": k_rows(self._t2(aw, w)),
            "I_3": -k_rows(self._t3(w, w)),
        }
        rot = self._kk(aw, aw)[pick]
        if lead_minus2:
            out["II"] = -2 * self._dk(*w, aw)[pick]
            out["III"] = rot
        else:
            out["II"] = rot
        return out

    def _gamma_mixed(self, rows: str):
        g = self.geo
        k_rows = (lambda xi: g.D(xi)) if rows == "q" else (lambda xi: g.Jf(xi))
        pick = 0 if rows == "q" else 1
        wq, wv = (self.ad, None), (None, self.fd)
        if rows == "q":
            ii = -self._dk(*wq, self.aw_v)[0]
        else:
            ii = -self._dk(*wv, self.aw_q)[1]
        return {
            "I_1": 0.5 * k_rows(self._t1(self.aw_q, wv)),
            "I_2": 0.5 * k_rows(self._t2(self.aw_q, wv)),
            "I_3": 0.5 * k_rows(self._t1(self.aw_v, wq)),
            "I_4": 0.5 * k_rows(self._t2(self.aw_v, wq)),
            "II": ii,
            "III": 0.5 * (self._kk(self.aw_v, self.aw_q)[pick] + self._kk(self.aw_q, self.aw_v)[pick]),
        }

    # -- curvature and orbit-metric blocks ------------------------------------------------

    def _curvature(self, w, aw, rows: str, with_2dk: bool):
        g = self.geo
        m = g.model
        k_rows = (lambda xi: g.D(xi)) if rows == "q" else (lambda xi: g.Jf(xi))
        pick = 0 if rows == "q" else 1
        P, p = self.P, self.s.p
        dkp = self._dk(*w, P)
        at_a, at_f = g.conn_t(p)
        out = {
            "I_1": -k_rows(g.conn(*dkp)),
            "I_2": -k_rows(g.green(self._dk_t(*w, at_a, at_f))),
            "II_1": -self._kk(aw, P)[pick],
            "II_2": -self._kk(P, aw)[pick],
        }
        cterm = k_rows(g.green(np.einsum("anm,xa,xn->xm", m.c, p, aw)))
        if with_2dk:
            out["III"] = 2 * dkp[pick]
            out["IV"] = cterm
        else:
            out["III"] = cterm
        return out

    def _dd(self, rows: str):
        g = self.geo
        m = g.model
        k_rows = (lambda xi: g.D(xi)) if rows == "q" else (lambda xi: g.Jf(xi))
        pick = 0 if rows == "q" else 1
        P, p = self.P, self.s.p
        s = np.einsum("kbm,xk,xm->xb", m.c, p, P)
        return {"I": 2 * self._kk(P, P)[pick], "II": 2 * k_rows(g.green(s))}

    # -- public ----------------------------------------------------------------------------

    def term(self, term_id: str) -> dict[str, np.ndarray]:
        wq, wv = (self.ad, None), (None, self.fd)
        table = {
            "hq_BM": lambda: self._gamma_diag(wq,  self.aw_q, True, "q"),
            "hq_Bm": lambda: self._gamma_mixed("q"),
            "hq_pq": lambda: self._gamma_diag(wv,  self.aw_v, False, "q"),
            "hv_AB": lambda: self._gamma_diag(wq,  self.aw_q, False, "v"),
            "hv_pB": lambda: self._gamma_mixed("v"),
            "hv_pq": lambda: self._gamma_diag(wv,  self.aw_v, True, "v"),
            "fq_Q": lambda: self._curvature(wq, self.aw_q, "q", True),
            "fq_q": lambda: self._curvature(wv, self.aw_v, "q", False),
            "fv_Q": lambda: self._curvature(wq, self.aw_q, "v", False),
            "fv_q": lambda: self._curvature(wv, self.aw_v, "v", True),
            "dq": lambda: self._dd("q"),
            "dv": lambda: self._dd("v"),
        }
        try:
            build = table[term_id]
        except KeyError:
            raise UnknownTerm(f"unknown term {term_id!r}; expected one of {BLOCKS}") from None
        return build()

    def all_terms(self) -> dict[str, dict[str, np.ndarray]]:
        return {name: self.term(name) for name in BLOCKS}


def assemble_term(model: LatticeModel, term_id: str, state: GaugeFieldState,
                           geo: LatticeGeometry | None = None) -> dict[str, np.ndarray]:
    """One named block at ``state`` as a dict of pieces (force densities)."""
    geo = geo or LatticeGeometry(model, state.a, state.f)
    return GaugeTerms(geo, state).term(term_id)


def gauge_accelerations(model: LatticeModel, state: GaugeFieldState, geo: LatticeGeometry | None = None,
                        drop_killing_terms: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """S for the gauge and scalar sectors, including the potential force."""
    geo = geo or LatticeGeometry(model, state.a, state.f)
    terms = GaugeTerms(geo, state).all_terms()
    s_a, s_f = model.force(state.a, state.f)
    for name in BLOCKS:
        pieces = terms[name]
        if name[1] == "q":
            keep = KILLING_FREE_Q.get(name, ()) if drop_killing_terms else tuple(pieces)
            s_a = s_a + WEIGHTS[name] * sum((pieces[k] for k in keep), np.zeros_like(s_a))
        else:
            s_f = s_f + WEIGHTS[name] * sum(pieces.values())
    return s_a, s_f
