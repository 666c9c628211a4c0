"""Central finite differences with one Richardson refinement."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import FDInconsistent


def default_step(x: np.ndarray, rel: float = 1e-6) -> float:
    return rel * max(1.0, float(np.max(np.abs(x))) if np.size(x) else 1.0)


def jacobian(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float | None = None,
             check: float | None = None) -> np.ndarray:
    """Derivative of ``fun`` at ``x``; the differentiation index is appended last.

    Uses ``(4 D(h/2) - D(h)) / 3`` with ``D`` the central difference.  When
    ``check`` is given, raises FDInconsistent if the two central differences
    disagree by more than ``check`` relative to the result.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        h = default_step(x)
    f0 = np.asarray(fun(x), dtype=float)
    out = np.empty(f0.shape + (x.size,))
    for j in range(x.size):
        e = np.zeros_like(x)
        e.flat[j] = 1.0
        d1 = (np.asarray(fun(x + h * e)) - np.asarray(fun(x - h * e))) / (2 * h)
        d2 = (np.asarray(fun(x + 0.5 * h * e)) - np.asarray(fun(x - 0.5 * h * e))) / h
        r = (4 * d2 - d1) / 3
        if check is not None:
            scale = max(1.0, float(np.max(np.abs(r))) if r.size else 1.0)
            gap = float(np.max(np.abs(d2 - d1))) if r.size else 0.0
            if gap > check * scale:
                raise FDInconsistent(f"central differences disagree by {gap:.3e} in direction {j}")
        out[..., j] = r
    return out
