"""Acceptance criteria 1-9, one test each.

Every test logs a single PASS/FAIL line with the measured values and the
limits they are held to; the lines are printed in the terminal summary.
"""
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from lpreduce.checks import point_residuals, sample_points
from lpreduce.cli import main
from lpreduce.dynamics import IntegratorConfig, integrate
from lpreduce.frame import AdaptedPoint, from_adapted, to_adapted
from lpreduce.lattice import LatticeConfig, LatticeModel, build_system, coulomb_state, evolve_gauge
from lpreduce.lattice.evolve import to_reduced_state
from lpreduce.lattice.validate import force_consistency, term_equality
from lpreduce.reference import FullState, compare, integrate_el, map_to_reduced
from lpreduce.systems import builtin_system, random_section_point

SYSTEMS = ("so2-bead", "so3-two-vector")


def _report(log, number, title, parts):
    """parts: (label, value, limit) triples, plus an optional ">" for a lower bound."""
    def ok(part):
        return part[1] > part[2] if part[3:] == (">",) else part[1] < part[2]

    def show(part):
        label, value, limit = part[:3]
        rel = ">" if part[3:] == (">",) else "<"
        return f"{label} {value:.3g} {'' if ok(part) else 'NOT '}{rel} {limit:.0e}"

    passed = all(ok(p) for p in parts)
    line = f"criterion {number} {'PASS' if passed else 'FAIL'}  {title}: " + "; ".join(show(p) for p in parts)
    log.append(line)
    print(line)
    assert passed, line


def _residuals(name, n, seed):
    system = builtin_system(name)
    pts = sample_points(system, n, np.random.default_rng(seed))
    with ThreadPoolExecutor() as pool:
        rows = list(pool.map(lambda p: point_residuals(system, *p, pathways=False), pts))
    return {k: max(r[k] for r in rows) for k in rows[0]}


def test_criterion_1_round_trip(acceptance_log):
    parts = []
    for name in SYSTEMS:
        system = builtin_system(name)
        rng = np.random.default_rng(101)
        t0 = time.perf_counter()
        worst = 0.0
        for _ in range(1000):
            qs, ft = random_section_point(system, rng)
            a = rng.uniform(-1.5, 1.5, system.dim_g)
            q, f = from_adapted(system, AdaptedPoint(qs, ft, a))
            back = to_adapted(system, q, f)
            q2, f2 = from_adapted(system, back)
            worst = max(worst, np.abs(back.q_star - qs).max(), np.abs(back.f_tilde - ft).max(),
                        np.abs(q2 - q).max(), np.abs(f2 - f).max())
        elapsed = time.perf_counter() - t0
        parts += [(f"{name} max err", worst, 1e-10), (f"{name} seconds", elapsed, 10.0)]
    _report(acceptance_log, 1, "adapted-coordinate round trip, 1000 points", parts)


def test_criterion_2_projector_and_connection_identities(acceptance_log):
    keys = {"NN-N": "projector_n_idempotent", "PP-P": "projector_perp_idempotent",
            "A(K)-delta": "connection_on_killing", "G^H K": "horizontal_metric_killing",
            "omega(H)": "connection_form_on_horizontal"}
    parts = []
    for name in SYSTEMS:
        res = _residuals(name, 100, 202)
        parts += [(f"{name} {label}", res[key], 1e-9) for label, key in keys.items()]
    _report(acceptance_log, 2, "projector and connection identities, 100 points", parts)


def test_criterion_3_identity_suite(acceptance_log):
    keys = {"K.F": "curvature_killing", "K.Dd": "covariant_dd_killing",
            "N-compat Gamma": "christoffel_n_compatible", "N-compat dV": "potential_gradient_n_compatible"}
    parts = []
    for name in SYSTEMS:
        res = _residuals(name, 20, 303)
        parts += [(f"{name} {label}", res[key], 1e-8) for label, key in keys.items()]
    _report(acceptance_log, 3, "K-contraction and N-compatibility identities, 20 points", parts)


def test_criterion_4_closed_form_vs_finite_differences(acceptance_log):
    parts = []
    for name in SYSTEMS:
        system = builtin_system(name)
        rows = [point_residuals(system, *p) for p in sample_points(system, 20, np.random.default_rng(404))]
        worst = {k: max(r[k] for r in rows) for k in rows[0]}
        parts += [(f"{name} A-partials", worst["pathway_connection_partials"], 1e-6),
                  (f"{name} Christoffel", worst["pathway_christoffel"], 1e-5),
                  (f"{name} curvature", worst["pathway_curvature"], 1e-5),
                  (f"{name} two A_(B,m) forms", worst["connection_partial_representations"], 1e-8)]
    _report(acceptance_log, 4, "closed form vs finite differences, 20 points", parts)


MASTER = {
    "so2-bead": (1.0, 1e-6, FullState(np.array([0.9, 0.4]), np.array([0.3, -0.5]),
                                      np.array([0.2, 0.7]), np.array([-0.4, 0.3]))),
    "so3-two-vector": (0.5, 1e-5, FullState(np.array([1.0, 0.2, -0.1, 0.1, 1.1, 0.3]), np.array([0.3, -0.4, 0.2]),
                                            np.array([0.35, -0.25, 0.4, 0.1, -0.45, 0.2]),
                                            np.array([-0.3, 0.15, 0.25]))),
}
DT = 1e-4


@pytest.fixture(scope="module")
def master_runs():
    """LP run from the mapped initial state next to the mapped direct trajectory, per system."""
    out = {}
    for name, (t_end, _, s0) in MASTER.items():
        system = builtin_system(name)
        t0 = time.perf_counter()
        el = integrate_el(system, s0, DT, t_end)
        ref = map_to_reduced(system, el, "d")
        lp = integrate(system, ref.state(0), IntegratorConfig(dt=DT, t_end=t_end))
        out[name] = (system, el, ref, lp, time.perf_counter() - t0)
    return out


@pytest.mark.slow
def test_criterion_5_master_dynamics_oracle(acceptance_log, master_runs):
    parts = []
    for name, (t_end, tol, _) in MASTER.items():
        system, el, ref, lp, elapsed = master_runs[name]
        assert lp.error is None, lp.error
        parts += [(f"{name} T={t_end:g} rel err", compare(lp, ref).max_rel_error, tol),
                  (f"{name} seconds", elapsed, 60.0)]
    # Momentum convention: the Q-sector metric gamma in place of d must visibly fail.
    system = master_runs["so3-two-vector"][0]
    el = integrate_el(system, MASTER["so3-two-vector"][2], DT, 0.02)
    ref_g = map_to_reduced(system, el, "gamma")
    lp_g = integrate(system, ref_g.state(0), IntegratorConfig(dt=DT, t_end=0.02))
    gamma_err = compare(lp_g, ref_g).max_rel_error
    parts.append(("gamma-convention rel err", gamma_err, 1e-3, ">"))
    _report(acceptance_log, 5, "LP vs mapped Euler-Lagrange (momentum p = d rho omega)", parts)


@pytest.mark.slow
def test_criterion_6_conservation(acceptance_log, master_runs):
    _, _, _, lp, _ = master_runs["so2-bead"]
    parts = [("so2 abelian p drift", float(np.abs(lp.mom - lp.mom[0]).max()), 1e-12),
             ("so2 energy drift", float(np.abs(lp.energy - lp.energy[0]).max()), 1e-8)]
    _report(acceptance_log, 6, "conservation over T=1", parts)


def test_criterion_7_gauge_twelve_terms(acceptance_log):
    t0 = time.perf_counter()
    cfg = LatticeConfig(dim=3, size=2, h=1.0, group="su2", boundary="dirichlet")
    model = LatticeModel(cfg)
    system = build_system(cfg)
    rng = np.random.default_rng(707)
    worst = {}
    for _ in range(5):
        for k, v in term_equality(model, coulomb_state(model, rng), system).items():
            worst[k] = max(worst.get(k, 0.0), v)
    elapsed = time.perf_counter() - t0
    block, err = max(worst.items(), key=lambda kv: kv[1])
    _report(acceptance_log, 7, "SU(2) D=3 L=2 twelve blocks vs generic engine, 5 states",
            [(f"worst block ({block}) rel err", err, 1e-8), ("seconds", elapsed, 300.0)])


@pytest.mark.slow
def test_criterion_8_gauge_force_and_abelian_evolution(acceptance_log):
    su2 = LatticeModel(LatticeConfig(group="su2"))
    rng = np.random.default_rng(808)
    force = max(force_consistency(su2, coulomb_state(su2, rng)) for _ in range(5))
    cfg = LatticeConfig(group="so2")
    model = LatticeModel(cfg)
    s0 = coulomb_state(model, np.random.default_rng(809), scalar=False, momentum=False)
    icfg = IntegratorConfig(dt=1e-2, t_end=10.0, equation_set="special", drop_killing_terms=True)
    lattice = evolve_gauge(model, s0, icfg)
    generic = integrate(build_system(cfg), to_reduced_state(model, s0), IntegratorConfig(dt=1e-2, t_end=10.0))
    assert lattice.error is None and generic.error is None
    assert len(lattice.t) == 1001
    err = compare(lattice.to_reduced(model), generic).max_rel_error
    _report(acceptance_log, 8, "gauge force and abelian lattice evolution",
            [("V-force vs FD rel", force, 1e-6), ("abelian 1000-step lattice vs generic rel", err, 1e-6)])


def test_criterion_9_determinism(acceptance_log, tmp_path):
    runs = {
        "so3 run": ["run", "--system", "so3-two-vector", "--t-end", "0.05", "--dt", "1e-3", "--seed", "9"],
        "gauge run": ["run", "--system", "gauge-lattice", "--t-end", "0.05", "--seed", "9"],
        "so2 validate": ["validate", "--system", "so2-bead", "--points", "10", "--seed", "9"],
    }
    parts = []
    for label, args in runs.items():
        dirs = [tmp_path / f"{label.replace(' ', '_')}_{k}" for k in range(2)]
        for d in dirs:
            assert main(args + ["--out", str(d)]) == 0
        files = sorted(p.name for p in dirs[0].iterdir())
        differing = sum((dirs[0] / n).read_bytes() != (dirs[1] / n).read_bytes() for n in files)
        parts.append((f"{label} differing files of {len(files)}", float(differing), 0.5))
    _report(acceptance_log, 9, "seeded runs byte-identical", parts)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
