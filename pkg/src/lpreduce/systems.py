"""Built-in example systems.

``so2-bead``
    A point in the plane coupled to a planar field vector, both rotated by
    SO(2).  Gauge surface ``Q^2 = 0`` with ``Q^1 > 0``.
``so3-two-vector``
    Two vectors in space plus a field vector, all rotated by SO(3).  Gauge
    surface ``Q1_y = Q1_z = Q2_z = 0`` with ``Q1_x > 0`` and ``Q2_y > 0``.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

from .lie import SO2, SO3, rotation_generators
from .system import SystemDef

_E2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def _rot2(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def so2_bead(k: float = 4.0, r0: float = 1.0, mu: float = 1.0, eps: float = 0.3,
             lam: float = 0.2, mass_q: float = 1.0, mass_v: float = 0.5) -> SystemDef:
    """Planar bead on a radial spring coupled to a planar field vector.

    V = k/2 (|Q| - r0)^2 + mu/2 |f|^2 + eps/2 (Q.f)^2 + lam (Q x f)
    """
    gq = mass_q * np.eye(2)

    def potential(q, f):
        r = np.hypot(q[0], q[1])
        qf = q @ f
        cross = q[0] * f[1] - q[1] * f[0]
        return 0.5 * k * (r - r0) ** 2 + 0.5 * mu * f @ f + 0.5 * eps * qf ** 2 + lam * cross

    def potential_grad(q, f):
        r = np.hypot(q[0], q[1])
        qf = q @ f
        gq_ = k * (r - r0) * q / r + eps * qf * f + lam * np.array([f[1], -f[0]])
        gf_ = mu * f + eps * qf * q + lam * np.array([-q[1], q[0]])
        return gq_, gf_

    return SystemDef(
        name="so2-bead",
        group=SO2(),
        n_p=2,
        metric_q=lambda q: gq,
        metric_v=mass_v * np.eye(2),
        action=lambda q, a: _rot2(float(a[0])) @ q,
        chi=lambda q: np.array([q[1]]),
        potential=potential,
        killing_q_fn=lambda q: (_E2 @ q)[:, None],
        killing_q_jac_fn=lambda q: _E2[:, None, :].copy(),
        chi_jac_fn=lambda q: np.array([[0.0, 1.0]]),
        chi_hess_fn=lambda q: np.zeros((1, 2, 2)),
        potential_grad_fn=potential_grad,
        action_jac_fn=lambda q, a: _rot2(float(a[0])),
        flat_metric=True,
        initial_guess=lambda q: np.array([np.arctan2(q[1], q[0])]),
        section_sheet=lambda qs: qs[0] > 0,
        sheet_flips=(np.array([np.pi]),),
        params=dict(k=k, r0=r0, mu=mu, eps=eps, lam=lam, mass_q=mass_q, mass_v=mass_v),
    )


def so3_two_vector(k1: float = 3.0, r1: float = 1.0, k2: float = 2.0, r2: float = 1.2,
                   k12: float = 1.5, c12: float = 0.3, mu: float = 1.0, eps: float = 0.4,
                   lam: float = 0.25, mass_q: float = 1.0, mass_v: float = 0.7) -> SystemDef:
    """Two coupled vectors and a field vector under simultaneous rotation.

    V = k1/2 (|Q1|-r1)^2 + k2/2 (|Q2|-r2)^2 + k12/2 (Q1.Q2 - c12)^2
        + mu/2 |f|^2 + eps (Q1.f)(Q2.f) + lam f.(Q1 x Q2)
    """
    e = rotation_generators()
    kjac = np.zeros((6, 3, 6))
    for a in range(3):
        kjac[:3, a, :3] = e[a]
        kjac[3:, a, 3:] = e[a]
    chi_a = np.zeros((3, 6))
    chi_a[0, 1] = chi_a[1, 2] = chi_a[2, 5] = 1.0

    def potential(q, f):
        q1, q2 = q[:3], q[3:]
        n1, n2 = np.linalg.norm(q1), np.linalg.norm(q2)
        return (0.5 * k1 * (n1 - r1) ** 2 + 0.5 * k2 * (n2 - r2) ** 2
                + 0.5 * k12 * (q1 @ q2 - c12) ** 2 + 0.5 * mu * f @ f
                + eps * (q1 @ f) * (q2 @ f) + lam * f @ np.cross(q1, q2))

    def potential_grad(q, f):
        q1, q2 = q[:3], q[3:]
        n1, n2 = np.linalg.norm(q1), np.linalg.norm(q2)
        s = k12 * (q1 @ q2 - c12)
        g1 = k1 * (n1 - r1) * q1 / n1 + s * q2 + eps * (q2 @ f) * f + lam * np.cross(q2, f)
        g2 = k2 * (n2 - r2) * q2 / n2 + s * q1 + eps * (q1 @ f) * f + lam * np.cross(f, q1)
        gf = mu * f + eps * ((q2 @ f) * q1 + (q1 @ f) * q2) + lam * np.cross(q1, q2)
        return np.concatenate([g1, g2]), gf

    def action(q, a):
        r = Rotation.from_rotvec(np.asarray(a, dtype=float)).as_matrix()
        return np.concatenate([r @ q[:3], r @ q[3:]])

    def action_jac(q, a):
        r = Rotation.from_rotvec(np.asarray(a, dtype=float)).as_matrix()
        out = np.zeros((6, 6))
        out[:3, :3] = r
        out[3:, 3:] = r
        return out

    def killing_q(q):
        return np.concatenate([np.einsum("aij,j->ia", e, q[:3]), np.einsum("aij,j->ia", e, q[3:])])

    def initial_guess(q):
        e1 = q[:3] / np.linalg.norm(q[:3])
        w = q[3:] - (q[3:] @ e1) * e1
        e2 = w / np.linalg.norm(w)
        frame = np.column_stack([e1, e2, np.cross(e1, e2)])
        return Rotation.from_matrix(frame).as_rotvec()

    return SystemDef(
        name="so3-two-vector",
        group=SO3(),
        n_p=6,
        metric_q=lambda q: mass_q * np.eye(6),
        metric_v=mass_v * np.eye(3),
        action=action,
        chi=lambda q: np.array([q[1], q[2], q[5]]),
        potential=potential,
        killing_q_fn=killing_q,
        killing_q_jac_fn=lambda q: kjac,
        chi_jac_fn=lambda q: chi_a,
        chi_hess_fn=lambda q: np.zeros((3, 6, 6)),
        potential_grad_fn=potential_grad,
        action_jac_fn=action_jac,
        flat_metric=True,
        initial_guess=initial_guess,
        section_sheet=lambda qs: qs[0] > 0 and qs[4] > 0,
        sheet_flips=(np.array([0.0, 0.0, np.pi]), np.array([np.pi, 0.0, 0.0]),
                     np.array([0.0, np.pi, 0.0])),
        params=dict(k1=k1, r1=r1, k2=k2, r2=r2, k12=k12, c12=c12, mu=mu, eps=eps, lam=lam,
                    mass_q=mass_q, mass_v=mass_v),
    )


BUILTIN = {"so2-bead": so2_bead, "so3-two-vector": so3_two_vector}


def builtin_system(name: str, **params) -> SystemDef:
    try:
        factory = BUILTIN[name]
    except KeyError:
        raise ValueError(f"unknown built-in system {name!r}; choose from {sorted(BUILTIN)}") from None
    return factory(**params)


def random_section_point(system: SystemDef, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """A random (Q*, f~) on the gauge surface, on the chosen sheet, with free action."""
    if system.name == "so2-bead":
        q = np.array([rng.uniform(0.5, 1.8), 0.0])
    elif system.name == "so3-two-vector":
        q = np.array([rng.uniform(0.6, 1.6), 0.0, 0.0,
                      rng.uniform(-0.8, 0.8), rng.uniform(0.5, 1.5), 0.0])
    else:
        raise ValueError(f"no section sampler for {system.name!r}")
    return q, rng.normal(scale=0.7, size=system.n_v)
