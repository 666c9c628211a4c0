"""Difference operators and the factorized Faddeev-Popov and orbit operators."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import SingularOperator

SOLVE_RESIDUAL = 1e-10
DENSE_LIMIT = 2000


def central_difference(size: int, h: float, boundary: str = "dirichlet") -> sp.csr_matrix:
    """(phi(x+1) - phi(x-1)) / 2h on one axis; Dirichlet drops the outside neighbours."""
    off = np.full(size - 1, 1.0 / (2 * h))
    c = sp.diags([off, -off], [1, -1], shape=(size, size), format="lil")
    if boundary == "periodic":
        c[size - 1, 0] += 1.0 / (2 * h)
        c[0, size - 1] -= 1.0 / (2 * h)
    return c.tocsr()


def derivative_ops(dim: int, size: int, h: float, boundary: str = "dirichlet") -> list[sp.csr_matrix]:
    """C_i acting on site arrays; sites are ordered row-major with axis 0 slowest."""
    c = central_difference(size, h, boundary)
    ops = []
    for i in range(dim):
        left = sp.identity(size ** i, format="csr")
        right = sp.identity(size ** (dim - 1 - i), format="csr")
        ops.append(sp.kron(sp.kron(left, c), right, format="csr"))
    return ops


class Factorized:
    """Sparse LU of a square operator with a residual check on every solve.

    When ``pseudo`` is set the operator is treated as possibly singular and
    solved in the least-squares sense through a dense pseudo-inverse.
    """

    def __init__(self, op: sp.spmatrix, name: str, pseudo: bool = False):
        self.op = sp.csc_matrix(op)
        self.name = name
        self.pseudo = pseudo
        n = self.op.shape[0]
        if pseudo:
            if n > DENSE_LIMIT:
                raise SingularOperator(f"{name}: pseudo-inverse limited to n <= {DENSE_LIMIT}")
            self._pinv = np.linalg.pinv(self.op.toarray())
            self._lu = None
            return
        try:
            self._lu = spla.splu(self.op)
        except RuntimeError as exc:
            raise SingularOperator(f"{name} is singular: {exc}") from None
        diag = np.abs(self._lu.U.diagonal())
        if diag.size and diag.min() <= 1e-13 * max(diag.max(), 1e-300):
            raise SingularOperator(f"{name} is numerically singular "
                                   f"(pivot ratio {diag.min() / diag.max():.3e})")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.pseudo:
            return self._pinv @ rhs
        x = self._lu.solve(np.asarray(rhs, dtype=float))
        res = np.linalg.norm(self.op @ x - rhs)
        scale = max(np.linalg.norm(rhs), 1e-300)
        if res > SOLVE_RESIDUAL * scale and res > 1e-14:
            raise SingularOperator(f"{self.name} solve residual {res / scale:.3e}")
        return x

    def condition_estimate(self) -> float:
        if self.op.shape[0] <= DENSE_LIMIT:
            return float(np.linalg.cond(self.op.toarray()))
        return float("nan")

    def inverse_columns(self, cols) -> np.ndarray:
        """Selected columns of the inverse, one solve each."""
        n = self.op.shape[0]
        out = np.zeros((n, len(cols)))
        for k, j in enumerate(cols):
            e = np.zeros(n)
            e[j] = 1.0
            out[:, k] = self.solve(e)
        return out

    def dense_inverse(self) -> np.ndarray:
        if self.op.shape[0] > DENSE_LIMIT:
            raise SingularOperator(f"{self.name}: refusing to form a dense inverse above n={DENSE_LIMIT}")
        return self.inverse_columns(range(self.op.shape[0]))
