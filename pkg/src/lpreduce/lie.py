"""Lie group data and exponential-coordinate machinery.

A group element is stored by its exponential coordinates ``a``.  Its matrix
form in the defining representation is ``expm(a^alpha T_alpha)`` with
generators obeying ``[T_a, T_b] = c^g_{ab} T_g``.  Structure constants are
stored as ``c[g, a, b] = c^g_{ab}``.

The group acts on the right on configuration space and on the field space
``V`` through ``Dbar(g) = D(g^-1)``, whose generators ``jbar = -T`` close
with structure constants ``-c``.  For ``g = exp(a)``:

* ``u(a)``    left-trivialised derivative of exp, ``g^-1 dg = u da``
* ``ubar(a)`` right-trivialised derivative, ``dg g^-1 = ubar da``
* ``v``, ``vbar`` their inverses
* ``rho(a) = ubar v = Ad(g) = expm(ad_a)``, ``rho_bar = rho^-1``
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm
from scipy.spatial.transform import Rotation

from .errors import ChartDomainError

_SERIES_TOL = 1e-17
_SERIES_MAX = 200


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[i, k, j] = -1.0
    return eps


def rotation_generators() -> np.ndarray:
    """Standard so(3) generators E_a with (E_a)_{bc} = -eps_{abc}."""
    return -levi_civita()


def _dexp_series(x: np.ndarray, sign: float) -> np.ndarray:
    """Sum_k (sign x)^k / (k+1)!  summed until terms fall below machine precision."""
    n = x.shape[0]
    total = np.eye(n)
    term = np.eye(n)
    scale = max(1.0, float(np.abs(x).sum()))
    for k in range(1, _SERIES_MAX):
        term = sign * (term @ x) / (k + 1)
        total = total + term
        if np.abs(term).max() < _SERIES_TOL * scale:
            break
    return total


class LieGroup:
    """A matrix Lie group in exponential coordinates.

    Parameters
    ----------
    name : str
        Identifier used in reports and snapshots.
    c : ndarray (g, g, g)
        Structure constants ``c[gamma, alpha, beta]``.
    generators : ndarray (g, m, m)
        Defining-representation generators ``T_alpha``.
    jbar : ndarray (g, n_v, n_v)
        Generators of the representation on the field space ``V``.
    chart_radius : float
        Coordinates with ``|a|`` at or beyond this value are rejected.
    """

    def __init__(self, name: str, c: np.ndarray, generators: np.ndarray,
                 jbar: np.ndarray, chart_radius: float = np.inf):
        self.name = name
        self.c = np.asarray(c, dtype=float)
        self.generators = np.asarray(generators)
        self.jbar = np.asarray(jbar, dtype=float)
        self.chart_radius = chart_radius
        self.k = killing_form(self.c)

    @property
    def dim_g(self) -> int:
        return self.c.shape[0]

    @property
    def dim_v(self) -> int:
        return self.jbar.shape[1]

    @property
    def abelian(self) -> bool:
        return not np.any(self.c)

    def identity(self) -> np.ndarray:
        return np.zeros(self.dim_g)

    def inverse(self, a: np.ndarray) -> np.ndarray:
        return -np.asarray(a, dtype=float)

    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ad_x: (ad_x)^g_b = x^a c^g_{ab}."""
        return np.einsum("gab,a->gb", self.c, x)

    def _check_chart(self, a: np.ndarray) -> None:
        if np.linalg.norm(a) >= self.chart_radius:
            raise ChartDomainError(
                f"|a| = {np.linalg.norm(a):.6g} outside the exponential chart of {self.name}"
            )

    def u(self, a: np.ndarray) -> np.ndarray:
        return _dexp_series(self.ad(a), -1.0)

    def ubar(self, a: np.ndarray) -> np.ndarray:
        return _dexp_series(self.ad(a), 1.0)

    def v(self, a: np.ndarray) -> np.ndarray:
        self._check_chart(a)
        return np.linalg.inv(self.u(a))

    def vbar(self, a: np.ndarray) -> np.ndarray:
        self._check_chart(a)
        return np.linalg.inv(self.ubar(a))

    def rho(self, a: np.ndarray) -> np.ndarray:
        return expm(self.ad(a))

    def rho_bar(self, a: np.ndarray) -> np.ndarray:
        return expm(-self.ad(a))

    def matrix_rep(self, a: np.ndarray) -> np.ndarray:
        return expm(np.tensordot(a, self.generators, axes=1))

    def rep_v(self, a: np.ndarray) -> np.ndarray:
        """Dbar(a) acting on V."""
        return expm(np.tensordot(a, self.jbar, axes=1))

    def from_matrix(self, m: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def compose(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Coordinates of exp(a) exp(b)."""
        return self.from_matrix(self.matrix_rep(a) @ self.matrix_rep(b))

    def structure_residuals(self) -> dict[str, float]:
        """Antisymmetry, Jacobi and representation closure residuals."""
        c = self.c
        anti = float(np.abs(c + c.transpose(0, 2, 1)).max())
        # c^m_{ab} c^n_{mc} + cyclic
        jac = (np.einsum("mab,nmc->nabc", c, c) + np.einsum("mbc,nma->nabc", c, c)
               + np.einsum("mca,nmb->nabc", c, c))
        t = self.generators
        comm_t = np.einsum("aij,bjk->abik", t, t) - np.einsum("bij,ajk->abik", t, t)
        rep_t = comm_t - np.einsum("gab,gik->abik", c, t)
        j = self.jbar
        comm_j = np.einsum("aij,bjk->abik", j, j) - np.einsum("bij,ajk->abik", j, j)
        rep_j = comm_j + np.einsum("gab,gik->abik", c, j)
        return {
            "antisymmetry": anti,
            "jacobi": float(np.abs(jac).max()) if jac.size else 0.0,
            "defining_rep": float(np.abs(rep_t).max()) if rep_t.size else 0.0,
            "field_rep": float(np.abs(rep_j).max()) if rep_j.size else 0.0,
        }


def killing_form(c: np.ndarray) -> np.ndarray:
    """k_{ab} = c^t_{ma} c^m_{tb}."""
    return np.einsum("tma,mtb->ab", c, c)


class SO2(LieGroup):
    """Rotations of the plane; coordinates add without wrapping."""

    def __init__(self, charge: int = 1):
        e = np.array([[0.0, -1.0], [1.0, 0.0]])
        super().__init__("SO2", np.zeros((1, 1, 1)), -e[None], charge * e[None])

    def compose(self, a, b):
        return np.asarray(a, dtype=float) + np.asarray(b, dtype=float)

    def from_matrix(self, m):
        return np.array([-np.arctan2(m[1, 0], m[0, 0])])

    def u(self, a):
        return np.eye(1)

    ubar = v = vbar = rho = rho_bar = u


class SO3(LieGroup):
    """Rotations of space acting on vectors; c^g_{ab} = -eps_{abg}."""

    def __init__(self):
        e = rotation_generators()
        super().__init__("SO3", -levi_civita().transpose(2, 0, 1), -e, e,
                         chart_radius=2 * np.pi)

    def matrix_rep(self, a):
        return Rotation.from_rotvec(-np.asarray(a, dtype=float)).as_matrix()

    def rep_v(self, a):
        return Rotation.from_rotvec(np.asarray(a, dtype=float)).as_matrix()

    def from_matrix(self, m):
        return -Rotation.from_matrix(m).as_rotvec()


_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


def realify(x: np.ndarray) -> np.ndarray:
    """Real 2n x 2n form of a complex n x n matrix acting on (Re z, Im z)."""
    return np.block([[x.real, -x.imag], [x.imag, x.real]])


class SU2(LieGroup):
    """SU(2) with generators T_a = i sigma_a / 2, so c^g_{ab} = -eps_{abg}.

    ``rep`` selects the field representation: ``"adjoint"`` (dim 3) or
    ``"fundamental"`` (C^2 realified to dim 4).
    """

    def __init__(self, rep: str = "adjoint"):
        t = 0.5j * _PAULI
        if rep == "adjoint":
            jbar = rotation_generators()
        elif rep == "fundamental":
            jbar = np.array([realify(-x) for x in t])
        else:
            raise ValueError(f"unknown SU(2) representation {rep!r}")
        super().__init__("SU2", -levi_civita().transpose(2, 0, 1), t, jbar,
                         chart_radius=2 * np.pi)
        self.rep = rep

    def from_matrix(self, m):
        cos_half = float(np.real(m[0, 0] + m[1, 1])) / 2
        # m - cos I = i sin (n . sigma)
        s = -1j * (m - cos_half * np.eye(2))
        vec = np.real(np.array([s[1, 0] + s[0, 1], 1j * (s[0, 1] - s[1, 0]), s[0, 0] - s[1, 1]])) / 2
        sin_half = np.linalg.norm(vec)
        half = np.arctan2(sin_half, cos_half)
        if sin_half < 1e-300:
            if cos_half < 0:
                raise ChartDomainError("-1 has no exponential coordinates in the SU(2) chart")
            return np.zeros(3)
        a = 2 * half * vec / sin_half
        self._check_chart(a)
        return a


class ProductGroup(LieGroup):
    """Direct product of ``n_sites`` copies of a base group, site-major ordering.

    Coordinates are ordered ``alpha + dim_g * site``.  Dense structure
    constants are built lazily since they grow cubically with the lattice.
    """

    def __init__(self, base: LieGroup, n_sites: int):
        self.base = base
        self.n_sites = n_sites
        self.name = f"{base.name}^{n_sites}"
        self.chart_radius = base.chart_radius
        self._c = None
        self._jbar = None
        self._k = None

    @property
    def dim_g(self) -> int:
        return self.base.dim_g * self.n_sites

    @property
    def dim_v(self) -> int:
        return self.base.dim_v * self.n_sites

    @property
    def abelian(self) -> bool:
        return self.base.abelian

    def _block(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float).reshape(self.n_sites, self.base.dim_g)

    @staticmethod
    def _blockdiag(blocks) -> np.ndarray:
        from scipy.linalg import block_diag
        return block_diag(*blocks)

    @property
    def c(self) -> np.ndarray:
        if self._c is None:
            g, n = self.base.dim_g, self.n_sites
            c = np.zeros((g * n, g * n, g * n))
            for s in range(n):
                sl = slice(s * g, (s + 1) * g)
                c[sl, sl, sl] = self.base.c
            self._c = c
        return self._c

    @property
    def k(self) -> np.ndarray:
        if self._k is None:
            self._k = np.kron(np.eye(self.n_sites), self.base.k)
        return self._k

    @property
    def jbar(self) -> np.ndarray:
        if self._jbar is None:
            g, n, m = self.base.dim_g, self.n_sites, self.base.dim_v
            j = np.zeros((g * n, m * n, m * n))
            for s in range(n):
                j[s * g:(s + 1) * g, s * m:(s + 1) * m, s * m:(s + 1) * m] = self.base.jbar
            self._jbar = j
        return self._jbar

    @property
    def generators(self):
        raise NotImplementedError("product groups have no single defining matrix")

    def ad(self, x):
        return self._blockdiag([self.base.ad(b) for b in self._block(x)])

    def _sitewise(self, name: str, a):
        return self._blockdiag([getattr(self.base, name)(b) for b in self._block(a)])

    def u(self, a):
        return self._sitewise("u", a)

    def ubar(self, a):
        return self._sitewise("ubar", a)

    def v(self, a):
        return self._sitewise("v", a)

    def vbar(self, a):
        return self._sitewise("vbar", a)

    def rho(self, a):
        return self._sitewise("rho", a)

    def rho_bar(self, a):
        return self._sitewise("rho_bar", a)

    def rep_v(self, a):
        return self._sitewise("rep_v", a)

    def compose(self, a, b):
        return np.concatenate([self.base.compose(x, y)
                               for x, y in zip(self._block(a), self._block(b))])

    def matrix_rep(self, a):
        raise NotImplementedError("product groups are handled site by site")

    def structure_residuals(self):
        return self.base.structure_residuals()


def make_group(name: str, rep: str | None = None) -> LieGroup:
    """Look up a built-in group by name (``SO2``, ``SO3``, ``SU2``)."""
    key = name.upper().replace("(", "").replace(")", "")
    if key == "SO2":
        return SO2()
    if key == "SO3":
        return SO3()
    if key == "SU2":
        return SU2(rep or "adjoint")
    raise ValueError(f"unknown group {name!r}")
