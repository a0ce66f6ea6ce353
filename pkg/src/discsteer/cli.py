"""Command-line surface: zeros, verify, synthesize, simulate, steer, radius.

Exit status: 0 success, 1 verification failure, 2 usage/config error,
3 numerical failure (conditioning or divergence).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import bessel, control, dynamics, moment, spectral
from .errors import (AdmissibilityError, ConditioningError, ConvergenceError,
                     DiscSteerError, DomainError)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _effective(defaults: dict, config: dict, flags: dict) -> dict:
    """Flags override config-file values override defaults."""
    out = dict(defaults)
    out.update({k: v for k, v in config.items() if k in defaults})
    out.update({k: v for k, v in flags.items() if v is not None and k in defaults})
    return out


def _write_manifest(out_dir, command: str, cfg: dict, inputs: dict,
                    outputs: list) -> None:
    manifest = {
        "command": command,
        "config": cfg,
        "input_hashes": {name: _sha256(p) for name, p in inputs.items()
                         if p and os.path.exists(p)},
        "outputs": outputs,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


def _write_control_csv(path, signal: dynamics.ControlSignal, name="u") -> None:
    grid = signal.grid
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", name])
        for t, v in zip(grid, signal.samples):
            writer.writerow([f"{t:.16e}", f"{v:.16e}"])


def _read_control_csv(path) -> dynamics.ControlSignal:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    t, v = data[:, 0], data[:, 1]
    if abs(t[0]) > 1e-12 or np.any(np.abs(np.diff(t) - (t[-1] / (t.size - 1))) > 1e-9):
        raise DomainError("control CSV must use a uniform grid starting at 0")
    return dynamics.ControlSignal(samples=v, T=float(t[-1]))


def _ensure_out(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_zeros(args) -> int:
    cfg = _effective({"nu": 0, "k": 64, "tol": bessel.DEFAULT_ZERO_TOL},
                     _load_config(args.config),
                     {"nu": args.nu, "k": args.k, "tol": args.tol})
    if cfg["k"] < 1:
        print("error: --k must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    out = _ensure_out(args)
    table = bessel.compute_zeros(cfg["nu"], cfg["k"], cfg["tol"])
    path = os.path.join(out, "zeros.json")
    table.to_json(path)
    _write_manifest(out, "zeros", cfg, {}, ["zeros.json"])
    print(f"wrote {path} ({len(table.zeros)} zeros)")
    return EXIT_OK


def _verify_checks(table: bessel.ZeroTable, cfg: dict) -> dict:
    rule = bessel.gauss_legendre_rule(cfg["quad_order"])
    report = {}

    # zero certification
    residuals = [abs(bessel.bessel_j(nu, z)) for (nu, _), z in table.zeros.items()]
    report["zero_residual_max"] = float(max(residuals))
    report["zeros_certified"] = report["zero_residual_max"] <= 10 * table.tol

    # orthogonality of the normalised modes
    kk = min(table.k_max, cfg["ortho_modes"])
    vals = np.array([spectral.mode(k, rule.nodes, table) for k in range(1, kk + 1)])
    gram = (vals * rule.nodes * rule.weights) @ vals.T
    off = gram - np.eye(kk)
    report["orthogonality_residual_max"] = float(np.max(np.abs(off)))
    report["orthogonality_ok"] = report["orthogonality_residual_max"] <= 1e-9
    if not report["orthogonality_ok"]:
        worst = np.unravel_index(np.argmax(np.abs(off)), off.shape)
        report["orthogonality_worst_pair"] = [int(worst[0]) + 1, int(worst[1]) + 1]

    # closed-form coupling against quadrature
    kk = min(table.k_max, cfg["coupling_modes"])
    worst = 0.0
    for k in range(2, kk + 1):
        for l in range(1, k):
            closed = spectral.coupling_closed_form(l, k, table)
            zl, zk = table[(0, l)], table[(0, k)]
            scale = 2.0 / (abs(bessel.bessel_j(1, zl)) * abs(bessel.bessel_j(1, zk)))

            def f(r, _zl=zl, _zk=zk, _s=scale):
                return _s * r ** 2 * bessel.bessel_j(0, _zl * r) * bessel.bessel_j(0, _zk * r)

            quad = float(np.real(bessel.weighted_integral(f, rule)))
            worst = max(worst, abs(closed - quad))
    report["coupling_identity_residual_max"] = worst
    report["coupling_identity_ok"] = worst <= 1e-9

    # coupling magnitude bounds j^3 |coupling(p, k)|
    kk = min(table.k_max, cfg["bound_modes"])
    bounds = {}
    for p in (1, 2, 3):
        vals = [table[(0, k)] ** 3 * abs(spectral.coupling_closed_form(p, k, table))
                for k in range(4, kk + 1)]
        bounds[f"p{p}"] = {"min": float(min(vals)), "max": float(max(vals))}
    report["coupling_bounds"] = bounds
    report["coupling_bounds_ok"] = all(b["min"] > 0 for b in bounds.values())

    # non-resonance
    gap = moment.check_nonresonance(table, min(table.k_max, cfg["nonresonance_modes"]))
    report["nonresonance_min_gap"] = gap
    report["nonresonance_ok"] = gap > 1e-6

    # Gram conditioning at the guaranteed horizon
    gt = moment.gamma_tilde(table)
    freqs = moment.build_frequencies(table, min(table.k_max, 12)).truncate(cfg["gram_size"])
    g = moment.gram_matrix(freqs, 2 * np.pi / gt)
    eigs = np.linalg.eigvalsh(g)
    report["gram_min_eig"] = float(eigs[0])
    report["gram_max_eig"] = float(eigs[-1])
    report["gram_condition"] = float(eigs[-1] / eigs[0]) if eigs[0] > 0 else np.inf
    report["gram_ok"] = eigs[0] > 0 and report["gram_condition"] < 1e8

    report["all_ok"] = all(report[k] for k in report if k.endswith("_ok"))
    return report


def cmd_verify(args) -> int:
    defaults = {"k": 40, "tol": bessel.DEFAULT_ZERO_TOL, "quad_order": 256,
                "ortho_modes": 30, "coupling_modes": 20, "bound_modes": 40,
                "nonresonance_modes": 200, "gram_size": 30, "table": None}
    cfg = _effective(defaults, _load_config(args.config),
                     {"k": args.k, "table": args.table})
    out = _ensure_out(args)
    if cfg["table"]:
        table = bessel.ZeroTable.from_json(cfg["table"])
    else:
        table = bessel.compute_zeros(0, cfg["k"], cfg["tol"])
    report = _verify_checks(table, cfg)
    path = os.path.join(out, "verify_report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
    _write_manifest(out, "verify", cfg,
                    {"table": cfg["table"]} if cfg["table"] else {},
                    ["verify_report.json"])
    for key in sorted(report):
        if key.endswith("_ok"):
            print(f"{'PASS' if report[key] else 'FAIL'} {key[:-3]}")
    return EXIT_OK if report["all_ok"] else EXIT_VERIFY


def _setup_system(cfg):
    table = bessel.compute_zeros(0, max(cfg["N"], cfg["K"], 3), cfg.get("tol", 1e-12))
    sys_ = dynamics.GalerkinSystem.build(cfg["N"], table)
    return table, sys_


def cmd_synthesize(args) -> int:
    defaults = {"theta2": 0.25, "theta3": 0.25, "T": 1.0, "K": 20, "N": 40,
                "psi0": None, "psif": None}
    cfg = _effective(defaults, _load_config(args.config),
                     {"theta2": args.theta2, "theta3": args.theta3, "T": args.T,
                      "K": args.K, "N": args.N, "psi0": args.psi0,
                      "psif": args.psif})
    if cfg["psif"] is None:
        print("error: a target state file (--psif) is required", file=sys.stderr)
        return EXIT_USAGE
    out = _ensure_out(args)
    table, sys_ = _setup_system(cfg)
    params = spectral.TargetParams(cfg["theta2"], cfg["theta3"])
    psif = spectral.RadialState.from_json(cfg["psif"])
    psi0 = spectral.RadialState.from_json(cfg["psi0"]) if cfg["psi0"] \
        else spectral.RadialState(np.zeros(cfg["N"], dtype=complex))
    problem = control.SteeringProblem(params=params, T=cfg["T"],
                                      psi0=psi0, psif=psif)
    v = control.synthesize_linearized(problem, cfg["K"], sys=sys_, table=table)
    endpoint = dynamics.simulate_linearized(v, params, sys_)
    target = spectral.RadialState(
        psif.padded(sys_.N)
        - dynamics.free_evolution(spectral.RadialState(psi0.padded(sys_.N)),
                                  cfg["T"], sys_.lambdas).coeffs)
    err = float(np.linalg.norm(endpoint.coeffs - target.coeffs))
    _write_control_csv(os.path.join(out, "control_v.csv"), v, name="v")
    report = {"endpoint_error": err,
              "target_norm": target.l2_norm(),
              "control_max": v.max_abs()}
    with open(os.path.join(out, "synthesize_report.json"), "w") as fh:
        json.dump(report, fh, indent=1)
    _write_manifest(out, "synthesize", cfg,
                    {"psif": cfg["psif"], "psi0": cfg["psi0"]},
                    ["control_v.csv", "synthesize_report.json"])
    print(f"endpoint error {err:.3e} (target norm {target.l2_norm():.3e})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    defaults = {"N": 40, "steps": 2 ** 14, "control": None, "state0": None,
                "K": 3}
    cfg = _effective(defaults, _load_config(args.config),
                     {"N": args.N, "steps": args.steps, "control": args.control,
                      "state0": args.state0})
    if cfg["state0"] is None:
        print("error: an initial state file (--state0) is required", file=sys.stderr)
        return EXIT_USAGE
    out = _ensure_out(args)
    table, sys_ = _setup_system(cfg)
    state0 = spectral.RadialState.from_json(cfg["state0"])
    if cfg["control"]:
        u = _read_control_csv(cfg["control"])
        w = dynamics.ControlSignal.from_function(
            lambda t: u.derivative(t) - 4.0 * np.asarray(u(t)) ** 2, u.T,
            n_samples=u.samples.size)
    else:
        w = dynamics.ControlSignal.zero(1.0)
    result = dynamics.simulate_bilinear(state0, w, sys_, steps=cfg["steps"])
    traj_path = os.path.join(out, "trajectory.csv")
    stride = max(1, result.times.size // 1024)
    with open(traj_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "k", "re", "im"])
        for i in range(0, result.times.size, stride):
            for k in range(sys_.N):
                c = result.states[i, k]
                writer.writerow([f"{result.times[i]:.12e}", k + 1,
                                 f"{c.real:.12e}", f"{c.imag:.12e}"])
    run = {"N": sys_.N, "steps": cfg["steps"], "T": w.T,
           "norm_drift": result.norm_drift()}
    with open(os.path.join(out, "run.json"), "w") as fh:
        json.dump(run, fh, indent=1)
    _write_manifest(out, "simulate", cfg,
                    {"state0": cfg["state0"], "control": cfg["control"]},
                    ["trajectory.csv", "run.json"])
    print(f"norm drift {run['norm_drift']:.3e}")
    return EXIT_OK


def cmd_steer(args) -> int:
    defaults = {"theta2": 0.25, "theta3": 0.25, "T": 1.0, "K": 20, "N": 40,
                "iterations": 4, "steps": 2 ** 14, "psi0": None, "psif": None}
    cfg = _effective(defaults, _load_config(args.config),
                     {"theta2": args.theta2, "theta3": args.theta3, "T": args.T,
                      "K": args.K, "N": args.N, "iterations": args.iterations,
                      "psi0": args.psi0, "psif": args.psif})
    if cfg["psi0"] is None or cfg["psif"] is None:
        print("error: --psi0 and --psif state files are required", file=sys.stderr)
        return EXIT_USAGE
    out = _ensure_out(args)
    table, sys_ = _setup_system(cfg)
    params = spectral.TargetParams(cfg["theta2"], cfg["theta3"])
    problem = control.SteeringProblem(
        params=params, T=cfg["T"],
        psi0=spectral.RadialState.from_json(cfg["psi0"]),
        psif=spectral.RadialState.from_json(cfg["psif"]))
    report = control.steer_local(problem, iterations=cfg["iterations"],
                                 K=cfg["K"], sys=sys_, table=table,
                                 steps=cfg["steps"])
    _write_control_csv(os.path.join(out, "control_u.csv"), report.control)
    traj = control.radius_from_control(report.control)
    _write_radius_csv(os.path.join(out, "radius.csv"), traj)
    report.to_json(os.path.join(out, "steer_report.json"),
                   extra={"T_star": traj.T_star})
    _write_manifest(out, "steer", cfg,
                    {"psi0": cfg["psi0"], "psif": cfg["psif"]},
                    ["control_u.csv", "radius.csv", "steer_report.json"])
    print(f"residuals: {['%.3e' % r for r in report.residuals]}")
    return EXIT_OK if report.converged else EXIT_NUMERICAL


def _write_radius_csv(path, traj: control.RadiusTrajectory) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "R"])
        for tau, r in zip(traj.taus, traj.radii):
            writer.writerow([f"{tau:.16e}", f"{r:.16e}"])


def cmd_radius(args) -> int:
    defaults = {"control": None}
    cfg = _effective(defaults, _load_config(args.config),
                     {"control": args.control})
    if cfg["control"] is None:
        print("error: a control CSV (--control) is required", file=sys.stderr)
        return EXIT_USAGE
    out = _ensure_out(args)
    u = _read_control_csv(cfg["control"])
    traj = control.radius_from_control(u)
    _write_radius_csv(os.path.join(out, "radius.csv"), traj)
    _write_manifest(out, "radius", cfg, {"control": cfg["control"]},
                    ["radius.csv"])
    print(f"T* = {traj.T_star:.6f}, R in [{traj.radii.min():.6f}, "
          f"{traj.radii.max():.6f}]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="discsteer",
        description="Deformation control synthesis for a quantum particle on a disc")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory (default: cwd)")

    p = sub.add_parser("zeros", help="compute and certify a Bessel zero table")
    common(p)
    p.add_argument("--nu", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("verify", help="run the numerical verification sweep")
    common(p)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--table", help="existing zero table JSON")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("synthesize", help="synthesize a linearized control")
    common(p)
    for name, typ in [("theta2", float), ("theta3", float), ("T", float),
                      ("K", int), ("N", int)]:
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--psi0", help="initial perturbation state JSON")
    p.add_argument("--psif", help="target perturbation state JSON")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="simulate the bilinear system")
    common(p)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--control", help="control CSV (t, u)")
    p.add_argument("--state0", help="initial state JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("steer", help="run the local nonlinear steering loop")
    common(p)
    for name, typ in [("theta2", float), ("theta3", float), ("T", float),
                      ("K", int), ("N", int), ("iterations", int)]:
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--psi0", help="initial state JSON")
    p.add_argument("--psif", help="target state JSON")
    p.set_defaults(func=cmd_steer)

    p = sub.add_parser("radius", help="reconstruct the radius trajectory")
    common(p)
    p.add_argument("--control", help="control CSV (t, u)")
    p.set_defaults(func=cmd_radius)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConditioningError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, AdmissibilityError, DiscSteerError, OSError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
