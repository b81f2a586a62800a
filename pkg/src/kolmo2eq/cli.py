"""Command-line entry point.

Exit codes: 0 success, 2 configuration or input-format error, 3 initial-data
admissibility violation, 4 verification/check failure, 5 blow-up or step
underflow during integration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .config import ConfigError, build_initial, parse_config, serialize_config
from .cutoffs import build_cutoffs
from .diagnostics import h2_delta, reports_to_json, verify_records
from .integrator import (REASON_BLOWUP, REASON_T_END, REASON_TSTAR,
                         REASON_UNDERFLOW, AdmissibilityError, simulate)
from .model import (InitialBounds, beta_exponents, existence_time,
                    q_constants, thresholds_at)
from .oracle import comparison_suite
from .rhs import project_initial_data
from .spectral import SpectralGrid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ADMISSIBILITY = 3
EXIT_VERIFY = 4
EXIT_BLOWUP = 5


def _load_initial(cfg, grid):
    init = cfg.initial
    if init.preset is not None:
        return build_initial(init, grid, cfg.bounds)
    if init.snapshot is not None:
        header, fields = fileio.read_snapshot(init.snapshot)
        if tuple(header["shape"]) != grid.shape:
            raise ConfigError([f"snapshot grid {header['shape']} does not match config grid {grid.shape}"])
        v0 = np.stack([fields["v1"], fields["v2"], fields["v3"]])
        return v0, fields["omega"], fields["b"]
    spec = json.loads(Path(init.coeffs).read_text())
    return _fields_from_coeffs(grid, spec)


def _fields_from_coeffs(grid, spec):
    """Coefficient lists: {field: [[n1, n2, n3, re, im], ...]}; conjugates added."""
    def scalar(entries):
        coef = np.zeros(grid.shape, dtype=complex)
        for n1, n2, n3, re, im in entries:
            coef[int(n1), int(n2), int(n3)] = re + 1j * im
        # symmetrization makes each entry contribute Re(c exp(ik.x)) to the real field
        return grid.to_physical(grid.hermitian_symmetrize(coef))
    omega0 = scalar(spec.get("omega", [])) + float(spec.get("omega_mean", 0.0))
    b0 = scalar(spec.get("b", [])) + float(spec.get("b_mean", 0.0))
    v_entries = spec.get("v", [])
    v_coef = np.zeros((3,) + grid.shape, dtype=complex)
    for row in v_entries:
        n1, n2, n3 = (int(v) for v in row[:3])
        for i in range(3):
            v_coef[i, n1, n2, n3] = row[3 + 2 * i] + 1j * row[4 + 2 * i]
    v0 = grid.to_physical(grid.hermitian_symmetrize(v_coef))
    return v0, omega0, b0


def _cmd_simulate(args):
    try:
        cfg = parse_config(Path(args.config).read_text())
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out if args.out else cfg.output.dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid.build(cfg.model)
    try:
        v0, omega0, b0 = _load_initial(cfg, grid)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError, fileio.SchemaError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        traj = simulate(grid, v0, omega0, b0, cfg.model, cfg.bounds, cfg.integrator,
                        c_est=cfg.c_est, drift_tol=cfg.drift_tol)
    except AdmissibilityError as exc:
        print(f"admissibility error: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY

    fileio.write_trajectory_csv(out_dir / "trajectory.csv", traj.records)
    first, last = traj.entries[0].state, traj.entries[-1].state
    fileio.write_snapshot(out_dir / "snapshot_initial.bin", grid,
                          fileio.state_snapshot_fields(first), first.t)
    fileio.write_snapshot(out_dir / "snapshot_final.bin", grid,
                          fileio.state_snapshot_fields(last), last.t)
    if cfg.output.snapshot_every > 0:
        for idx, entry in enumerate(traj.entries):
            if idx % cfg.output.snapshot_every == 0:
                fileio.write_snapshot(out_dir / f"snapshot_{idx:05d}.bin", grid,
                                      fileio.state_snapshot_fields(entry.state), entry.state.t)
    reports = verify_records(traj.records, eps=args.eps)
    report_payload = {
        "reason": traj.reason,
        "t_final": last.t,
        "t_star": traj.t_star,
        "delta": traj.delta,
        "records": len(traj.records),
        "config": serialize_config(cfg),
        "checks": [r.to_json() for r in reports],
    }
    (out_dir / "report.json").write_text(json.dumps(report_payload, indent=2))
    print(f"reason: {traj.reason}  t_final: {last.t:.6g}  records: {len(traj.records)}")
    for rep in reports:
        print(rep)
    if traj.reason in (REASON_BLOWUP, REASON_UNDERFLOW):
        return EXIT_BLOWUP
    return EXIT_OK


def _cmd_tstar(args):
    bounds = InitialBounds(b_min=args.b_min, omega_min=args.omega_min, omega_max=args.omega_max)
    if args.snapshot is not None:
        header, fields = fileio.read_snapshot(args.snapshot)
        grid = SpectralGrid(tuple(header["shape"]), tuple(header["lengths"]))
        v0 = np.stack([fields["v1"], fields["v2"], fields["v3"]])
        delta = h2_delta(grid, v0, fields["omega"], fields["b"])
    else:
        delta = args.delta
    q1, q2, q3 = q_constants(bounds)
    beta, beta_bar = beta_exponents(args.kappa2)
    t_star = existence_time(delta, bounds, args.kappa2, C_est=args.c_est)
    print(f"delta    = {delta!r}")
    print(f"Q1       = {q1!r}")
    print(f"Q2       = {q2!r}")
    print(f"Q3       = {q3!r}")
    print(f"beta     = {beta!r}")
    print(f"beta_bar = {beta_bar!r}")
    print(f"T*       = {t_star!r}")
    return EXIT_OK


def _cmd_verify(args):
    try:
        records = fileio.read_trajectory_csv(args.trajectory)
    except (OSError, fileio.SchemaError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if len(records) < 2:
        print("input error: trajectory has fewer than two records", file=sys.stderr)
        return EXIT_CONFIG
    reports = verify_records(records, eps=args.eps)
    for rep in reports:
        print(rep)
    if args.report:
        Path(args.report).write_text(reports_to_json(reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


def _cmd_oracle_check(args):
    errors, const_errors = comparison_suite(
        n_states=args.states, seed=args.seed, grid_n=args.grid_n,
        points=args.points, oversample=args.oversample)
    worst = max(errors)
    worst_const = max(const_errors)
    for i, err in enumerate(errors):
        print(f"state {i:2d}: rel error {err:.3e}")
    print(f"constant-viscosity worst: {worst_const:.3e} (tolerance {args.const_tolerance:.1e})")
    print(f"general worst:            {worst:.3e} (tolerance {args.tolerance:.1e})")
    ok = worst <= args.tolerance and worst_const <= args.const_tolerance
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VERIFY


def _cmd_cutoff_table(args):
    from .model import Thresholds
    th = Thresholds(t=0.0, b_star=args.b_star, omega_star=args.omega_star,
                    omega_dstar=args.omega_dstar,
                    mu_star=0.25 * args.b_star / args.omega_dstar)
    cut = build_cutoffs(th)
    x_max = args.x_max if args.x_max is not None else 2.5 * max(2.0 * args.omega_dstar, args.b_star)
    x = np.linspace(0.0, x_max, args.points)
    cols = [
        x,
        cut.visc_b(x), cut.visc_b.derivative(1, x), cut.visc_b.derivative(2, x),
        cut.visc_omega(x), cut.sink_omega(x), cut.sink_b(x),
    ]
    lines = ["x,Psi,dPsi,ddPsi,Phi,phi,psi"]
    for row in zip(*cols):
        lines.append(",".join(repr(float(v)) for v in row))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kolmo2eq",
        description="Spectral Galerkin solver for Kolmogorov's two-equation turbulence model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured simulation, write CSV/snapshots/report")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override output.dir")
    p.add_argument("--eps", type=float, default=1e-3, help="maximum-principle slack for the report")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("tstar", help="print the existence-time bound and estimate constants")
    p.add_argument("--delta", type=float, default=0.0, help="summed squared H^2 norm of the data")
    p.add_argument("--snapshot", default=None, help="compute delta from a snapshot instead")
    p.add_argument("--b-min", type=float, required=True)
    p.add_argument("--omega-min", type=float, required=True)
    p.add_argument("--omega-max", type=float, required=True)
    p.add_argument("--kappa2", type=float, default=1.0)
    p.add_argument("--c-est", type=float, default=1.0)
    p.set_defaults(func=_cmd_tstar)

    p = sub.add_parser("verify", help="re-run the estimate checks on a saved trajectory CSV")
    p.add_argument("trajectory")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--report", default=None, help="write machine-readable reports to this JSON file")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("oracle-check", help="compare the fast right-hand side to brute-force quadrature")
    p.add_argument("--states", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-n", type=int, default=4)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--oversample", type=float, default=4.0)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--const-tolerance", type=float, default=1e-10)
    p.set_defaults(func=_cmd_oracle_check)

    p = sub.add_parser("cutoff-table", help="emit a CSV of the cutoff values and derivatives")
    p.add_argument("--b-star", type=float, required=True)
    p.add_argument("--omega-star", type=float, required=True)
    p.add_argument("--omega-dstar", type=float, required=True)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--x-max", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_cutoff_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
