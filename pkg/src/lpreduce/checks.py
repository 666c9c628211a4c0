"""Named invariant checks evaluated at sampled points.

Each check reduces to one number (a max-norm residual over the sample) and
is compared against a tolerance; ``InvariantReport`` collects them.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fd
from .frame import AdaptedPoint, forward_jacobian, from_adapted, to_adapted
from .geometry import Geometry, pathway_disagreement
from .system import SystemDef, projectors
from .systems import random_section_point

SCHEMA_VERSION = 1

# Default tolerances.
TOLERANCES = {
    "projector_n_idempotent": 1e-9,
    "projector_perp_idempotent": 1e-9,
    "projector_mixed": 1e-9,
    "projector_n_kills_killing": 1e-9,
    "connection_on_killing": 1e-9,
    "horizontal_metric_killing": 1e-9,
    "connection_form_on_horizontal": 1e-9,
    "curvature_killing": 1e-8,
    "covariant_dd_killing": 1e-8,
    "christoffel_n_compatible": 1e-8,
    "christoffel_killing": 1e-8,
    "potential_gradient_n_compatible": 1e-8,
    "covariant_dd_n_compatible": 1e-8,
    "pathway_connection_partials": 1e-6,
    "pathway_christoffel": 1e-5,
    "pathway_curvature": 1e-5,
    "pathway_covariant_dd": 1e-5,
    "connection_partial_representations": 1e-8,
    "adapted_round_trip": 1e-10,
    "invariance_potential": 1e-10,
    "invariance_metric": 1e-10,
}


@dataclass
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value < self.tolerance)

    def to_dict(self) -> dict:
        return {"name": self.name, "value": float(self.value), "tolerance": float(self.tolerance),
                "passed": self.passed}


@dataclass
class InvariantReport:
    command: str
    system: str
    checks: list[Check] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def add(self, name: str, value: float, tolerance: float) -> None:
        self.checks.append(Check(name, float(value), float(tolerance)))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "system": self.system,
            "passed": self.passed,
            "error": self.error,
            "checks": [c.to_dict() for c in self.checks],
            "diagnostics": self.diagnostics,
        }


def worker_count() -> int:
    """Thread cap from LPREDUCE_THREADS (default 1)."""
    raw = os.environ.get("LPREDUCE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _mx(x) -> float:
    return float(np.abs(x).max()) if np.size(x) else 0.0


def point_residuals(system: SystemDef, q_star: np.ndarray, f_tilde: np.ndarray, a: np.ndarray,
                    pathways: bool = True) -> dict[str, float]:
    """Every geometric identity residual at one adapted point."""
    n_p = system.n_p
    geo = Geometry(system, q_star, f_tilde)
    proj = projectors(system, q_star, f_tilde)
    nq, pp = proj.n_qq, proj.p_perp
    ncomb = np.vstack([nq, proj.n_vq])
    out = {
        "projector_n_idempotent": _mx(nq @ nq - nq),
        "projector_perp_idempotent": _mx(pp @ pp - pp),
        "projector_mixed": max(_mx(nq @ pp - pp), _mx(pp @ nq - nq)),
        "projector_n_kills_killing": _mx(nq @ geo.K[:n_p]),
        "connection_on_killing": _mx(geo.A @ geo.K - np.eye(system.dim_g)),
        "horizontal_metric_killing": _mx(geo.GH @ geo.K),
    }
    # Horizontal lifts in adapted coordinates: tangent to the section along N,
    # group part -v rho_bar A, pushed to (Q, f) and fed to the connection there.
    group = system.group
    lift = np.zeros((system.n + system.dim_g, n_p + system.n_v))
    lift[:n_p, :n_p] = nq
    lift[n_p:system.n, :n_p] = proj.n_vq
    lift[n_p:system.n, n_p:] = np.eye(system.n_v)
    lift[system.n:] = -group.v(a) @ group.rho_bar(a) @ geo.A @ lift[:system.n]
    push = forward_jacobian(system, AdaptedPoint(q_star, f_tilde, a)) @ lift
    q, f = from_adapted(system, AdaptedPoint(q_star, f_tilde, a))
    geo_x = Geometry(system, q, f)
    out["connection_form_on_horizontal"] = _mx(geo_x.A @ push)

    k = geo.K
    out["curvature_killing"] = _mx(np.einsum("aQR,Rb->aQb", geo.F, k))
    out["covariant_dd_killing"] = _mx(np.einsum("Rab,Re->eab", geo.dd_lower, k))
    gl = geo.gamma_lower
    out["christoffel_n_compatible"] = _mx(np.einsum("BMT,TF->BMF", gl, ncomb) - gl[:, :, :n_p])
    out["christoffel_killing"] = _mx(np.einsum("BMT,Ta->BMa", gl, k))
    gq, gf = system.potential_grad(q_star, f_tilde)
    grad = np.concatenate([gq, gf])
    out["potential_gradient_n_compatible"] = _mx(ncomb.T @ grad - gq)
    ddl = geo.dd_lower
    out["covariant_dd_n_compatible"] = _mx(np.einsum("Rab,RF->Fab", ddl, ncomb) - ddl[:n_p])
    out["connection_partial_representations"] = _mx(geo.connection_partial_alt_v() - geo.dA[:, :n_p, n_p:])
    if pathways:
        for key, val in pathway_disagreement(geo).items():
            out[f"pathway_{key}"] = val
    q_back = to_adapted(system, q, f)
    out["adapted_round_trip"] = max(_mx(q_back.q_star - q_star), _mx(q_back.f_tilde - f_tilde),
                                    _mx(group.rep_v(q_back.a) - group.rep_v(a)))
    inv = system.invariance_residuals(q, f, a)
    out["invariance_potential"] = inv["potential"]
    out["invariance_metric"] = inv["metric"]
    return out


def sample_points(system: SystemDef, n: int, rng: np.random.Generator, a_scale: float = 1.0):
    """n random adapted points on the preferred sheet with group coordinates inside the chart."""
    pts = []
    for _ in range(n):
        q, f = random_section_point(system, rng)
        a = rng.uniform(-a_scale, a_scale, size=system.dim_g)
        pts.append((q, f, a))
    return pts


def validate_system(system: SystemDef, n_points: int = 20, seed: int = 0, tolerance_scale: float = 1.0,
                    tolerances: dict[str, float] | None = None) -> InvariantReport:
    """All geometric identities at ``n_points`` seeded random points, max over points."""
    rng = np.random.default_rng(seed)
    pts = sample_points(system, n_points, rng)
    tol = dict(TOLERANCES)
    if tolerances:
        tol.update(tolerances)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(lambda p: point_residuals(system, *p), pts))
    report = InvariantReport("validate", system.name)
    for name in TOLERANCES:
        report.add(name, max(r[name] for r in results), tol[name] * tolerance_scale)
    report.diagnostics = {"points": n_points, "seed": seed,
                          "killing_equation": max(system.killing_equation_residual(p[0]) for p in pts)}
    return report


def fd_gradient_check(system: SystemDef, q: np.ndarray, f: np.ndarray) -> float:
    """Max deviation between the analytic potential gradient and central differences."""
    x = np.concatenate([q, f])
    num = fd.jacobian(lambda y: np.array(system.potential(y[:system.n_p], y[system.n_p:])), x)
    gq, gf = system.potential_grad(q, f)
    return _mx(num - np.concatenate([gq, gf]))
