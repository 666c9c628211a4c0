"""lpreduce command line: run, validate, compare.

Exit codes: 0 all checks pass, 1 numeric failure or failed check,
2 usage or configuration error, 3 comparison mismatch.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import InvariantReport, validate_system, worker_count
from .dynamics import IntegratorConfig, ReducedState, integrate
from .errors import ConfigError, GridMismatch, ReductionError
from .frame import AdaptedPoint, from_adapted
from .io import (RunConfig, config_from_mapping, read_config_mapping, read_trajectory_csv, write_report,
                 write_trajectory_csv)
from .reference import FullState, compare, integrate_el, map_state, map_to_reduced
from .systems import builtin_system, random_section_point

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_MISMATCH = 0, 1, 2, 3

# Default tolerance of the LP-vs-EL comparison per system.
REFERENCE_TOLERANCE = {"so2-bead": 1e-6, "so3-two-vector": 1e-5}


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="so2-bead, so3-two-vector, gauge-lattice, or a config file path")
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--t-end", type=float, dest="t_end")
    common.add_argument("--dt", type=float)
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--equation-set", choices=("full", "special"), dest="equation_set")
    common.add_argument("--dim", type=int, help="lattice dimension (2 or 3)")
    common.add_argument("--size", type=int, help="lattice sites per axis (even)")
    common.add_argument("--group", help="lattice gauge group (so2, su2, so3)")
    common.add_argument("--tolerance-scale", type=float, dest="tolerance_scale")

    parser = argparse.ArgumentParser(prog="lpreduce", description="Reduced dynamics of symmetric systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate and write trajectory and report")
    val = sub.add_parser("validate", parents=[common], help="geometric invariants only, no time evolution")
    val.add_argument("--points", type=int, help="sample points (mechanical systems)")
    val.add_argument("--states", type=int, help="random Coulomb states (gauge lattice)")
    cmp_ = sub.add_parser("compare", help="compare two trajectory CSV files")
    cmp_.add_argument("traj_a")
    cmp_.add_argument("traj_b")
    cmp_.add_argument("--tolerance", type=float, default=1e-6)
    cmp_.add_argument("--tolerance-scale", type=float, default=1.0, dest="tolerance_scale")
    cmp_.add_argument("--out", help="write the comparison report here (JSON)")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    data: dict = {}
    path = args.config
    system = args.system
    if system is not None and system not in ("so2-bead", "so3-two-vector", "gauge-lattice"):
        if path is not None:
            raise UsageError("--system names a config file and --config is also given")
        path, system = system, None
    if path is not None:
        if not Path(path).is_file():
            raise UsageError(f"config file not found: {path}")
        data = read_config_mapping(path)
    overrides = {k: getattr(args, k) for k in ("t_end", "dt", "out", "seed", "equation_set", "tolerance_scale")
                 if getattr(args, k, None) is not None}
    for key in ("points", "states"):
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    if system is not None:
        overrides["system"] = system
    data.update(overrides)
    lattice = dict(data.get("lattice") or {})
    for key in ("dim", "size", "group"):
        if getattr(args, key) is not None:
            lattice[key] = getattr(args, key)
    if lattice:
        data["lattice"] = lattice
    return config_from_mapping(data)


# -- run ------------------------------------------------------------------------------

def _mechanical_system(cfg: RunConfig):
    try:
        return builtin_system(cfg.system, **cfg.params)
    except TypeError as exc:
        raise ConfigError(f"bad system parameters: {exc}") from None


def _initial_full_state(system, cfg: RunConfig, rng: np.random.Generator) -> FullState:
    if cfg.initial is not None:
        q, f = np.asarray(cfg.initial["q"], float), np.asarray(cfg.initial["f"], float)
        qd, fd = np.asarray(cfg.initial["qdot"], float), np.asarray(cfg.initial["fdot"], float)
        if q.shape != (system.n_p,) or qd.shape != (system.n_p,) or f.shape != (system.n_v,) \
                or fd.shape != (system.n_v,):
            raise ConfigError(f"initial state needs q, qdot of length {system.n_p} and f, fdot of length "
                              f"{system.n_v}")
        return FullState(q, f, qd, fd)
    q_star, f_tilde = random_section_point(system, rng)
    a = rng.uniform(-0.5, 0.5, size=system.dim_g)
    q, f = from_adapted(system, AdaptedPoint(q_star, f_tilde, a))
    return FullState(q, f, rng.normal(scale=0.5, size=system.n_p), rng.normal(scale=0.5, size=system.n_v))


def run_mechanical(cfg: RunConfig, out: Path) -> InvariantReport:
    system = _mechanical_system(cfg)
    rng = np.random.default_rng(cfg.seed)
    t_end, dt = cfg.step()
    s0 = _initial_full_state(system, cfg, rng)
    report = InvariantReport("run", system.name)
    report.diagnostics = {"config": cfg.echo(), "t_end": t_end, "dt": dt}

    reference = None
    if cfg.reference:
        el = integrate_el(system, s0, dt, t_end)
        reference = map_to_reduced(system, el)
        r0 = reference.state(0)
    else:
        r0 = ReducedState(*map_state(system, s0))
    icfg = IntegratorConfig(dt=dt, t_end=t_end, equation_set=cfg.equation_set, retraction=cfg.retraction,
                            drop_killing_terms=bool(cfg.drop_killing_terms))
    traj = integrate(system, r0, icfg)
    write_trajectory_csv(out / "trajectory.csv", traj)
    report.error = traj.error

    drift = float(np.abs(traj.energy - traj.energy[0]).max())
    report.add("energy_drift", drift, cfg.tolerance("energy_drift", 1e-8))
    report.add("constraint", float(traj.constraint.max()), cfg.tolerance("constraint", 1e-10))
    report.add("tangency", float(traj.tangency.max()), cfg.tolerance("tangency", 1e-10))
    if system.group.abelian:
        report.add("momentum_drift", float(np.abs(traj.mom - traj.mom[0]).max()),
                   cfg.tolerance("momentum_drift", 1e-12))
    if reference is not None:
        write_trajectory_csv(out / "reference.csv", reference)
        if traj.error is None:
            cmp_ = compare(traj, reference, cfg.tolerance("reference", REFERENCE_TOLERANCE.get(system.name, 1e-6)))
            report.add("reference_max_rel_error", cmp_.max_rel_error, cmp_.tolerance)
            report.add("group_coordinate_error", float(np.abs(traj.a - reference.a).max()),
                       cfg.tolerance("group_coordinate_error", 1e-6))
            report.diagnostics["reference"] = cmp_.to_dict()
    report.diagnostics["energy"] = {"initial": float(traj.energy[0]), "final": float(traj.energy[-1])}
    report.diagnostics["samples"] = len(traj)
    return report


def run_lattice(cfg: RunConfig, out: Path) -> InvariantReport:
    from .dynamics import integrate as integrate_generic
    from .lattice import LatticeModel, build_system, coulomb_state, evolve_gauge, save_snapshot
    from .lattice.evolve import from_reduced_state, to_reduced_state
    from .lattice.validate import force_consistency, potential_invariance, term_equality

    lcfg = cfg.lattice_config()
    model = LatticeModel(lcfg)
    rng = np.random.default_rng(cfg.seed)
    t_end, dt = cfg.step()
    s0 = coulomb_state(model, rng, amplitude=cfg.amplitude, scalar=not cfg.pure_gauge)
    report = InvariantReport("run", "gauge-lattice")
    report.diagnostics = {"config": cfg.echo(), "lattice": lcfg.to_dict(), "t_end": t_end, "dt": dt}

    system = build_system(lcfg)
    errors = term_equality(model, s0, system)
    report.add("twelve_term_equality", max(errors.values()), cfg.tolerance("twelve_term_equality", 1e-8))
    report.add("force_fd_consistency", force_consistency(model, s0), cfg.tolerance("force_fd_consistency", 1e-6))
    report.diagnostics["term_errors"] = errors

    icfg = IntegratorConfig(dt=dt, t_end=t_end, equation_set=cfg.equation_set, retraction=cfg.retraction,
                            drop_killing_terms=bool(cfg.drop_killing_terms))
    if cfg.equation_set == "special":
        gt = evolve_gauge(model, s0, icfg, drop_killing_terms=bool(cfg.drop_killing_terms))
        traj = gt.to_reduced(model)
        final = gt.states[-1]
    else:
        traj = integrate_generic(system, to_reduced_state(model, s0), icfg)
        traj.constraint = np.array([np.abs(model.divergence(model.gauge(q))).max() for q in traj.q_star])
        final = from_reduced_state(model, traj.state(len(traj) - 1))
    report.error = traj.error
    write_trajectory_csv(out / "trajectory.csv", traj)
    save_snapshot(out / "final_state.bin", lcfg, final, float(traj.t[-1]))

    report.add("constraint", float(traj.constraint.max()), cfg.tolerance("constraint", 1e-10))
    drift = float(np.abs(traj.energy - traj.energy[0]).max())
    invariance = potential_invariance(model, s0, np.random.default_rng(cfg.seed + 1))
    report.diagnostics["potential_invariance"] = invariance
    # Energy is conserved only if the discretized potential is gauge invariant and no
    # Killing-direction terms are dropped (both hold for an abelian group without scalar).
    conserving = invariance < 1e-12 and (cfg.equation_set == "full" or not cfg.drop_killing_terms
                                         or (model.group.abelian and cfg.pure_gauge))
    if conserving:
        report.add("energy_drift", drift, cfg.tolerance("energy_drift", 1e-8))
    else:
        report.diagnostics["energy_drift"] = drift
    report.diagnostics["samples"] = len(traj)
    return report


def cmd_run(cfg: RunConfig) -> tuple[InvariantReport, Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_lattice(cfg, out) if cfg.is_lattice else run_mechanical(cfg, out)
    write_report(out / "report.json", report.to_dict())
    return report, out


def cmd_validate(cfg: RunConfig) -> tuple[InvariantReport, Path]:
    if cfg.is_lattice:
        from .lattice.validate import validate_lattice
        report = validate_lattice(cfg.lattice_config(), cfg.states, cfg.seed, cfg.tolerance_scale, cfg.tolerances)
    else:
        report = validate_system(_mechanical_system(cfg), cfg.points, cfg.seed, cfg.tolerance_scale,
                                 cfg.tolerances)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report(out / "validate.json", report.to_dict())
    return report, out


def cmd_compare(args: argparse.Namespace) -> int:
    a = read_trajectory_csv(args.traj_a)
    b = read_trajectory_csv(args.traj_b)
    try:
        rep = compare(a, b, args.tolerance * args.tolerance_scale)
    except GridMismatch as exc:
        print(f"lpreduce compare: grid mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    body = {"schema_version": 1, "command": "compare", "traj_a": args.traj_a, "traj_b": args.traj_b,
            **rep.to_dict(), "passed": rep.passed, "max_rel_error": rep.max_rel_error}
    if args.out:
        write_report(args.out, body)
    print(f"max relative error {rep.max_rel_error:.3e} (tolerance {rep.tolerance:.1e})")
    for name, val in rep.rel_errors.items():
        print(f"  {name:10s} {val:.3e}")
    return EXIT_OK if rep.passed else EXIT_MISMATCH


def _summarize(report: InvariantReport, out: Path) -> int:
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:36s} {c.value:.3e}  (tol {c.tolerance:.1e})")
    if report.error:
        print(f"error: {report.error}", file=sys.stderr)
    print(f"{'all checks passed' if report.passed else 'checks FAILED'}; outputs in {out}")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    if "LPREDUCE_THREADS" in os.environ:
        raw = os.environ["LPREDUCE_THREADS"]
        if not raw.isdigit() or int(raw) < 1:
            parser.error(f"LPREDUCE_THREADS must be a positive integer, got {raw!r}")
    worker_count()
    try:
        if args.command == "compare":
            return cmd_compare(args)
        cfg = resolve_config(args)
        report, out = cmd_run(cfg) if args.command == "run" else cmd_validate(cfg)
        return _summarize(report, out)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"lpreduce: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ReductionError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"lpreduce: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
