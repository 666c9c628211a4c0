"""The twelve contracted blocks of the horizontal equations, piece by piece.

Each block is a dict mapping a piece label (Roman numeral, with a suffix when
the piece splits) to an array.  Blocks with ``q`` rows act in the Q* sector
and return ``n_p`` vectors, ``v`` blocks return ``n_v`` vectors.  Labels:

==========  =========================================================
hq_BM       G^{AR} Gamma_{BMR} w^B w^M
hq_Bm       G^{AR} Gamma_{BmR} w^B w^m
hq_pq       G^{AR} Gamma_{pqR} w^p w^q
hv_AB       G^{rm} Gamma_{ABm} w^A w^B
hv_pB       G^{rm} Gamma_{pBm} w^p w^B
hv_pq       G^{rm} Gamma_{pqm} w^p w^q
fq_Q        G^{AR} F^a_{QR} w^Q p_a
fq_q        G^{AR} F^a_{qR} w^q p_a
fv_Q        G^{rm} F^a_{Qm} w^Q p_a
fv_q        G^{rm} F^a_{qm} w^q p_a
dq          G^{AR} D_R d^{ks} p_k p_s
dv          G^{rm} D_m d^{ks} p_k p_s
==========  =========================================================

The mixed Christoffel blocks are returned once; the equations use them with
a factor two.
"""
from __future__ import annotations

import numpy as np

from .errors import UnknownTerm
from .geometry import Geometry

BLOCKS = ("hq_BM", "hq_Bm", "hq_pq", "hv_AB", "hv_pB", "hv_pq",
          "fq_Q", "fq_q", "fv_Q", "fv_q", "dq", "dv")

# Multiplicity of each block in the horizontal equations.
WEIGHTS = {"hq_BM": 1.0, "hq_Bm": 2.0, "hq_pq": 1.0, "hv_AB": 1.0, "hv_pB": 2.0, "hv_pq": 1.0,
           "fq_Q": 1.0, "fq_q": 1.0, "fv_Q": 1.0, "fv_q": 1.0, "dq": 0.5, "dv": 0.5}

# Pieces kept by the first horizontal equation once terms proportional to
# Killing vectors are dropped.
KILLING_FREE_Q = {
    "hq_BM": ("II", "III"),
    "hq_Bm": ("II", "III"),
    "hq_pq": ("II",),
    "fq_Q": ("II_1", "II_2", "III", "IV"),
    "fq_q": ("II_1", "II_2", "III"),
    "dq": ("I",),
}


class Contractions:
    """Contracted building blocks at one geometry point for velocity ``w`` and momentum ``p``."""

    def __init__(self, geo: Geometry, w: np.ndarray, p: np.ndarray):
        self.geo = geo
        n_p = geo.n_p
        self.wq = np.zeros_like(w)
        self.wq[:n_p] = w[:n_p]
        self.wv = np.zeros_like(w)
        self.wv[n_p:] = w[n_p:]
        self.p = p
        self.P = geo.dinv @ p

    def dk(self, v: np.ndarray) -> np.ndarray:
        """K^A_{alpha,B} v^B as (n, g)."""
        return np.einsum("agb,b->ag", self.geo.dK, v)

    def t1(self, w1, w2):
        g = self.geo
        return g.dinv @ (self.dk(w2).T @ (g.GK @ (g.A @ w1)))

    def t2(self, w1, w2):
        g = self.geo
        return g.A @ (self.dk(w2) @ (g.A @ w1))

    def t3(self, w1, w2):
        g = self.geo
        return g.dinv @ (self.dk(w2).T @ (g.G @ w1))

    def kaw(self, w):
        return self.geo.K @ (self.geo.A @ w)

    # -- Christoffel blocks --------------------------------------------------

    def gamma_diag(self, w, lead_minus2: bool) -> dict[str, np.ndarray]:
        K, A = self.geo.K, self.geo.A
        out = {"I_1": K @ self.t1(w, w), "I_2": K @ self.t2(w, w), "I_3": -K @ self.t3(w, w)}
        if lead_minus2:
            out["II"] = -2 * self.dk(w) @ (A @ w)
            out["III"] = self.dk(self.kaw(w)) @ (A @ w)
        else:
            out["II"] = self.dk(self.kaw(w)) @ (A @ w)
        return out

    def gamma_mixed(self, w_row, w_other) -> dict[str, np.ndarray]:
        """Mixed block where ``w_row`` lives in the row sector."""
        K, A = self.geo.K, self.geo.A
        first, second = self.wq, self.wv
        return {
            "I_1": 0.5 * K @ self.t1(first, second),
            "I_2": 0.5 * K @ self.t2(first, second),
            "I_3": 0.5 * K @ self.t1(second, first),
            "I_4": 0.5 * K @ self.t2(second, first),
            "II": -self.dk(w_row) @ (A @ w_other),
            "III": 0.5 * (self.dk(self.kaw(second)) @ (A @ first)
                          + self.dk(self.kaw(first)) @ (A @ second)),
        }

    # -- curvature and d blocks ----------------------------------------------

    def curvature(self, w, with_2dk: bool) -> dict[str, np.ndarray]:
        g = self.geo
        K, A, P, p = g.K, g.A, self.P, self.p
        aw = A @ w
        dkw = self.dk(w)
        out = {
            "I_1": -K @ (A @ (dkw @ P)),
            "I_2": -K @ (g.dinv @ (dkw.T @ (A.T @ p))),
            "II_1": -self.dk(K @ aw) @ P,
            "II_2": -self.dk(K @ P) @ aw,
        }
        cterm = K @ (g.dinv @ np.einsum("anm,a,n->m", g.c, p, aw))
        if with_2dk:
            out["III"] = 2 * dkw @ P
            out["IV"] = cterm
        else:
            out["III"] = cterm
        return out

    def dd(self) -> dict[str, np.ndarray]:
        g = self.geo
        P, p = self.P, self.p
        s = np.einsum("kbm,k,m->b", g.c, p, P)
        return {"I": 2 * self.dk(g.K @ P) @ P, "II": 2 * g.K @ (g.dinv @ s)}


def compact_acceleration(geo: Geometry, w: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Sum of all twelve blocks (with their weights) plus the force, on the combined space.

    Equal to ``assemble_s`` without a selection but built from three
    directional derivatives of K instead of per-piece arrays.
    """
    K, A, G, GK, dinv, c = geo.K, geo.A, geo.G, geo.GK, geo.dinv, geo.c
    dK = geo.dK
    P = dinv @ p
    aw = A @ w
    kaw = K @ aw
    kp = K @ P
    dkw = np.einsum("agb,b->ag", dK, w)
    dkaw = np.einsum("agb,b->ag", dK, kaw)
    dkp = np.einsum("agb,b->ag", dK, kp)
    dA_ww = -dinv @ (dkw.T @ (GK @ aw)) - A @ (dkw @ aw) + dinv @ (dkw.T @ (G @ w))
    gamma = -K @ dA_ww - 2 * dkw @ aw + dkaw @ aw
    ap = A.T @ p
    curv = (-K @ (A @ (dkw @ P)) - K @ (dinv @ (dkw.T @ ap)) - dkaw @ P - dkp @ aw
            + 2 * dkw @ P + K @ (dinv @ np.einsum("anm,a,n->m", c, p, aw)))
    dd = 2 * dkp @ P + 2 * K @ (dinv @ np.einsum("kbm,k,m->b", c, p, P))
    return gamma + curv + 0.5 * dd + geo.force()


def twelve_blocks(geo: Geometry, w: np.ndarray, p: np.ndarray) -> dict[str, dict[str, np.ndarray]]:
    """All twelve blocks, each as a dict of named pieces restricted to its row sector."""
    ct = Contractions(geo, w, p)
    n_p = geo.n_p
    wq, wv = ct.wq, ct.wv
    rows_q = slice(0, n_p)
    rows_v = slice(n_p, None)
    raw = {
        "hq_BM": (ct.gamma_diag(wq, True), rows_q),
        "hq_Bm": (ct.gamma_mixed(wq, wv), rows_q),
        "hq_pq": (ct.gamma_diag(wv, False), rows_q),
        "hv_AB": (ct.gamma_diag(wq, False), rows_v),
        "hv_pB": (ct.gamma_mixed(wv, wq), rows_v),
        "hv_pq": (ct.gamma_diag(wv, True), rows_v),
        "fq_Q": (ct.curvature(wq, True), rows_q),
        "fq_q": (ct.curvature(wv, False), rows_q),
        "fv_Q": (ct.curvature(wq, False), rows_v),
        "fv_q": (ct.curvature(wv, True), rows_v),
    }
    dd = ct.dd()
    raw["dq"] = (dd, rows_q)
    raw["dv"] = (dd, rows_v)
    return {name: {k: v[rows] for k, v in pieces.items()} for name, (pieces, rows) in raw.items()}


def block_total(pieces: dict[str, np.ndarray], keep=None) -> np.ndarray:
    keys = pieces.keys() if keep is None else keep
    try:
        return sum(pieces[k] for k in keys)
    except KeyError as exc:
        raise UnknownTerm(f"unknown piece {exc.args[0]!r}") from None


def assemble_s(blocks: dict[str, dict[str, np.ndarray]], force: np.ndarray, n_p: int,
               selection: dict[str, tuple[str, ...]] | None = None,
               weights: dict[str, float] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Sum the blocks into the Q*-sector and f-sector accelerations S.

    ``selection`` restricts the pieces of the Q*-sector blocks it names; Q*
    blocks not named in a given selection are dropped entirely.
    """
    w = WEIGHTS if weights is None else weights
    s_q = force[:n_p].copy()
    s_v = force[n_p:].copy()
    for name in BLOCKS:
        sector_q = name[1] == "q" or name == "dq"
        if sector_q and selection is not None:
            if name not in selection:
                continue
            total = block_total(blocks[name], selection[name])
        else:
            total = block_total(blocks[name])
        if sector_q:
            s_q += w[name] * total
        else:
            s_v += w[name] * total
    return s_q, s_v


def dense_blocks(geo: Geometry, w: np.ndarray, p: np.ndarray) -> dict[str, np.ndarray]:
    """The same twelve contractions from the dense Christoffel, curvature and D d tensors."""
    n_p = geo.n_p
    wq = np.where(np.arange(w.size) < n_p, w, 0.0)
    wv = w - wq
    gam, gf, gdd = geo.gamma_raised, geo.gf, geo.gdd
    q, v = slice(0, n_p), slice(n_p, None)

    def h(w1, w2, rows):
        return np.einsum("ABM,B,M->A", gam, w1, w2)[rows]

    def f(w1, rows):
        return np.einsum("AaQ,Q,a->A", gf, w1, p)[rows]

    ddp = np.einsum("Aks,k,s->A", gdd, p, p)
    return {
        "hq_BM": h(wq, wq, q), "hq_Bm": h(wq, wv, q), "hq_pq": h(wv, wv, q),
        "hv_AB": h(wq, wq, v), "hv_pB": h(wv, wq, v), "hv_pq": h(wv, wv, v),
        "fq_Q": f(wq, q), "fq_q": f(wv, q), "fv_Q": f(wq, v), "fv_q": f(wv, v),
        "dq": ddp[q], "dv": ddp[v],
    }
