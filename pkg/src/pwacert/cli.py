"""Command-line entry point.

Exit codes: 0 certified / true, 1 not certified / false, 2 error.
PWACERT_THREADS caps the BLAS thread pools; it is applied before numpy loads.
"""
from __future__ import annotations

import argparse
import os
import sys
import time

THREAD_ENV = "PWACERT_THREADS"
_BLAS_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

EXIT_OK, EXIT_NO, EXIT_ERROR = 0, 1, 2


def _apply_threads():
    val = os.environ.get(THREAD_ENV)
    if val is None:
        return
    if not val.isdigit() or int(val) < 1:
        raise SystemExit(f"{THREAD_ENV} must be a positive integer")
    for var in _BLAS_VARS:
        os.environ.setdefault(var, val)


def _floats(text):
    return [float(t) for t in text.split(",")]


def _ints(text):
    return [int(t) for t in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration; flags override it")
    common.add_argument("--system", help="system JSON file or builtin:<name>")
    common.add_argument("--network", help="network JSON file or builtin:<name>")
    common.add_argument("--template", help="box, octagon or a JSON file of rows")
    common.add_argument("--eps-bar", type=float)
    common.add_argument("--alpha-tol", type=float)
    common.add_argument("--max-iters", type=int)
    common.add_argument("--max-nodes", type=int)
    common.add_argument("--time-limit", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--output", "-o", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="pwacert", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check-rpi", parents=[common], help="is a polyhedron robustly invariant")
    c.add_argument("--set", required=True, help="polyhedron JSON {A, b}")

    sub.add_parser("fmax", parents=[common], help="safe-set iteration")

    c = sub.add_parser("rmin", parents=[common], help="terminal-set iteration")
    c.add_argument("--fmax", help="precomputed F_max JSON; computed when absent")

    c = sub.add_parser("certify", parents=[common], help="full stability pipeline")
    c.add_argument("--recheck", metavar="CERT",
                   help="re-verify a certificate file from stored supports, without MILPs")
    c.add_argument("--stride", type=int, default=1)

    c = sub.add_parser("approx-certify", parents=[common], help="fit, bound and certify")
    c.add_argument("--dynamics", default="nonlinear_double_integrator")
    c.add_argument("--data", help="samples JSON {x, u, fx, X, U}; replaces --dynamics")
    c.add_argument("--regions", default="chessboard", help="chessboard or JSON list of guards")
    c.add_argument("--fit-grid", type=_ints, default=[30, 30, 5])
    c.add_argument("--validation-factor", type=int, default=4)
    c.add_argument("--inflation", type=float, default=0.25)
    c.add_argument("--per-region", action="store_true")
    c.add_argument("--analytic-bound", type=float)
    c.add_argument("--x0", type=_floats, default=[5.5, -1.5], help="start of the reach-box trajectory")

    c = sub.add_parser("simulate", parents=[common], help="trajectories and disturbance tubes")
    c.add_argument("--x0", type=_floats, required=True)
    c.add_argument("--steps", type=int, default=20)
    c.add_argument("--sampler", choices=["uniform_box", "vertices", "zero"], default="uniform_box")
    c.add_argument("--trials", type=int, default=1)

    c = sub.add_parser("support", parents=[common], help="one support of the k-step reachable set")
    c.add_argument("--k", type=int, default=1)
    c.add_argument("--dir", type=_floats, required=True)
    c.add_argument("--set", help="initial polyhedron JSON; defaults to X")

    c = sub.add_parser("export-mps", parents=[common], help="write the reachability MILP")
    c.add_argument("--k", type=int, default=1)
    c.add_argument("--dir", type=_floats, required=True)
    c.add_argument("--set", help="initial polyhedron JSON; defaults to X")
    c.add_argument("--out", default="reach.mps")

    sub.add_parser("verify-input-constraints", parents=[common],
                   help="does the network respect U on all of X")
    return p


def _run_config(args):
    from .io import RunConfig

    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for name in ("system", "network", "template", "eps_bar", "alpha_tol", "max_iters", "seed",
                 "output"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if args.max_nodes is not None:
        cfg.solver["max_nodes"] = args.max_nodes
    if args.time_limit is not None:
        cfg.solver["time_limit"] = args.time_limit
    cfg.__post_init__()
    return cfg


def _opts(cfg, n):
    from .io import parse_template
    from .reach import ReachOptions

    return ReachOptions(template=parse_template(cfg.template, n), solver=cfg.solver_config(), log=[])


def _need(cfg, *names):
    for name in names:
        if getattr(cfg, name) is None:
            raise ValueError(f"--{name} is required")


def _outdir(cfg):
    from pathlib import Path

    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_cert(cert, out, name="certificate.json"):
    from .io import certificate_to_json, dump_json

    d = certificate_to_json(cert)
    d["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    dump_json(d, out / name)


def cmd_check_rpi(args, cfg):
    from .io import dump_json, load_network, load_poly, load_system, _arr
    from .reach import check_rpi

    _need(cfg, "system", "network")
    sys_, net = load_system(cfg.system), load_network(cfg.network)
    F = load_poly(args.set)
    ok, supports = check_rpi(sys_, net, F, _opts(cfg, sys_.n))
    dump_json({"rpi": ok, "supports": _arr(supports), "rhs": _arr(F.b)}, _outdir(cfg) / "rpi.json")
    print("RPI" if ok else "not RPI")
    return EXIT_OK if ok else EXIT_NO


def cmd_fmax(args, cfg):
    from .certify import compute_f_max
    from .io import dump_json, load_network, load_system, poly_to_json, write_sets_csv

    _need(cfg, "system", "network")
    sys_, net = load_system(cfg.system), load_network(cfg.network)
    history = []
    F, k, _ = compute_f_max(sys_, net, _opts(cfg, sys_.n), cfg.max_iters, history)
    out = _outdir(cfg)
    dump_json({"f_max": poly_to_json(F), "iterations": k}, out / "fmax.json")
    write_sets_csv(history, out / "fmax_sequence.csv")
    print(f"F_max after {k} iterations, {F.n_facets} facets")
    return EXIT_OK


def cmd_rmin(args, cfg):
    from .certify import compute_f_max, compute_r_min
    from .io import dump_json, load_json, load_network, load_system, poly_from_json, poly_to_json
    from .io import write_sets_csv

    _need(cfg, "system", "network")
    sys_, net = load_system(cfg.system), load_network(cfg.network)
    opts = _opts(cfg, sys_.n)
    if args.fmax:
        d = load_json(args.fmax)
        F = poly_from_json(d.get("f_max", d))
    else:
        F, _, _ = compute_f_max(sys_, net, opts, cfg.max_iters)
    R, k_bar, seq = compute_r_min(sys_, net, F, cfg.eps_bar, opts, cfg.max_iters)
    out = _outdir(cfg)
    dump_json({"r_min": poly_to_json(R), "k_bar": k_bar, "eps_bar": cfg.eps_bar}, out / "rmin.json")
    write_sets_csv(seq, out / "rmin_sequence.csv")
    print(f"R_min after k_bar = {k_bar} iterations")
    return EXIT_OK


def _print_cert(cert):
    print(f"stability: {cert.stability_verdict}  uub: {cert.uub_verdict}")
    if cert.f_max is not None:
        print(f"F_max iterations {cert.f_max_iterations}, k_bar {cert.k_bar}, "
              f"alpha {cert.alpha!r}, delta_max {cert.delta_max!r}")


def cmd_certify(args, cfg):
    from .certify import CertificationError, assemble_certificate, recheck_certificate
    from .io import certificate_from_json, load_json, load_network, load_system

    if args.recheck:
        checks = recheck_certificate(certificate_from_json(load_json(args.recheck)))
        for name, ok in checks.items():
            print(f"{name}: {'pass' if ok else 'FAIL'}")
        return EXIT_OK if all(checks.values()) else EXIT_NO
    _need(cfg, "system", "network")
    sys_, net = load_system(cfg.system), load_network(cfg.network)
    out = _outdir(cfg)
    try:
        cert = assemble_certificate(sys_, net, _opts(cfg, sys_.n), cfg.eps_bar, cfg.max_iters,
                                    cfg.alpha_tol, stride=args.stride)
    except CertificationError as exc:
        if exc.certificate is not None:
            exc.certificate.notes.append(str(exc))
            _write_cert(exc.certificate, out)
        print(f"not certified: {exc}")
        return EXIT_NO
    _write_cert(cert, out)
    _print_cert(cert)
    return EXIT_OK if cert.stable else EXIT_NO


def _load_samples(path):
    from .approx import SampledDynamics
    from .io import load_json, poly_from_json

    d = load_json(path)
    return SampledDynamics(d["x"], d["u"], d["fx"], poly_from_json(d["X"]), poly_from_json(d["U"]))


def cmd_approx_certify(args, cfg):
    import numpy as np

    from .approx import error_bound, fit_least_squares, grid_samples, uub_certify
    from .certify import CertificationError
    from .geometry import HPolyhedron
    from .io import dump_json, load_json, load_network, poly_from_json, system_to_json
    from .library import NAMED_DYNAMICS, chessboard_regions, double_integrator_domain
    from .reach import overapprox_one
    from .sysmodel import eval_nn

    _need(cfg, "network")
    net = load_network(cfg.network)
    if args.regions == "chessboard":
        regions = chessboard_regions()
    else:
        regions = [poly_from_json(g) for g in load_json(args.regions)]
    if args.data:
        fit_data = _load_samples(args.data)
        val_data = fit_data
        dynamics = None
    else:
        X, U = double_integrator_domain()
        fit_data = grid_samples(args.dynamics, X, U, args.fit_grid)
        dense = [args.validation_factor * c for c in args.fit_grid]
        val_data = grid_samples(args.dynamics, X, U, dense)
        dynamics = NAMED_DYNAMICS[args.dynamics]
    fit = fit_least_squares(fit_data, regions)
    fit = error_bound(fit, val_data, args.inflation, args.per_region, args.analytic_bound)
    out = _outdir(cfg)
    dump_json(system_to_json(fit.base), out / "fit.sys.json")
    print(f"residual bound {fit.global_bound!r} (sampled max {float(np.max(fit.max_residual))!r})")
    opts = _opts(cfg, fit.base.n)
    try:
        cert = uub_certify(fit, net, opts, cfg.eps_bar, max_iters=cfg.max_iters,
                           alpha_tol=cfg.alpha_tol)
    except CertificationError as exc:
        if exc.certificate is not None:
            exc.certificate.notes.append(str(exc))
            _write_cert(exc.certificate, out)
        print(f"not certified: {exc}")
        return EXIT_NO
    _write_cert(cert, out)
    _print_cert(cert)
    if dynamics is not None and cert.k_bar:
        # reach boxes of the disturbed model around one nonlinear trajectory
        x = np.asarray(args.x0, dtype=float)
        point = HPolyhedron(np.vstack([np.eye(2), -np.eye(2)]), np.concatenate([x, -x]))
        rows, S = [], point
        for k in range(1, cert.k_bar + 1):
            x = dynamics(x, eval_nn(net, x))
            S = overapprox_one(fit.base, net, S, opts)
            rows.append({"k": k, "x": x.tolist(), "A": S.A.tolist(), "b": S.b.tolist()})
        inside = cert.f_max.contains_point(np.asarray(args.x0, dtype=float))
        dump_json({"x0": args.x0, "x0_in_f_max": inside, "steps": rows}, out / "reach_boxes.json")
    return EXIT_OK if cert.uub_verdict == "uub_certified" else EXIT_NO


def cmd_simulate(args, cfg):
    from .io import load_network, load_system, write_trajectory_csv
    from .sim import simulate

    _need(cfg, "system", "network")
    sys_, net = load_system(cfg.system), load_network(cfg.network)
    out = _outdir(cfg)
    nominal = simulate(sys_, net, args.x0, args.steps, "zero", cfg.seed)
    write_trajectory_csv(nominal, out / "trajectory_nominal.csv", sys_.n, sys_.m)
    switches = 0
    for t in range(args.trials):
        traj = simulate(sys_, net, args.x0, args.steps, args.sampler, cfg.seed + t)
        switches += int(traj.switched.sum())
        write_trajectory_csv(traj, out / f"trajectory_{t:04d}.csv", sys_.n, sys_.m)
    print(f"{args.trials} disturbed trajectories, {switches} region switches caused by disturbance")
    return EXIT_OK


def _initial_set(args, sys_):
    from .io import load_poly

    return load_poly(args.set) if args.set else sys_.X


def cmd_support(args, cfg):
    from .io import dump_json, load_network, load_system
    from .reach import support_reach

    _need(cfg, "system", "network")
    sys_, net = load_system(cfg.system), load_network(cfg.network)
    val = support_reach(sys_, net, _initial_set(args, sys_), args.k, args.dir, _opts(cfg, sys_.n))
    dump_json({"k": args.k, "direction": args.dir, "support": val}, _outdir(cfg) / "support.json")
    print(repr(val))
    return EXIT_OK


def cmd_export_mps(args, cfg):
    from .encode import encode_closed_loop
    from .io import load_network, load_system
    from .milp import write_mps

    _need(cfg, "system", "network")
    sys_, net = load_system(cfg.system), load_network(cfg.network)
    enc = encode_closed_loop(sys_, net, _initial_set(args, sys_), args.k)
    enc.model.set_objective(enc.x_vars[-1], args.dir, "max")
    path = _outdir(cfg) / args.out
    write_mps(enc.model, path)
    print(f"wrote {path} ({enc.model.n_vars} columns, {enc.model.n_constraints} rows)")
    return EXIT_OK


def cmd_verify_inputs(args, cfg):
    from .certify import verify_nn_input_constraints
    from .io import load_network, load_system

    _need(cfg, "system", "network")
    sys_, net = load_system(cfg.system), load_network(cfg.network)
    ok = verify_nn_input_constraints(net, sys_.X, sys_.U, _opts(cfg, sys_.n))
    print("inputs respect U" if ok else "input constraints violated")
    return EXIT_OK if ok else EXIT_NO


COMMANDS = {
    "check-rpi": cmd_check_rpi,
    "fmax": cmd_fmax,
    "rmin": cmd_rmin,
    "certify": cmd_certify,
    "approx-certify": cmd_approx_certify,
    "simulate": cmd_simulate,
    "support": cmd_support,
    "export-mps": cmd_export_mps,
    "verify-input-constraints": cmd_verify_inputs,
}


def dispatch(argv=None) -> int:
    _apply_threads()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    import logging

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = _run_config(args)
        return COMMANDS[args.command](args, cfg)
    except Exception as exc:  # every failure maps to the error exit code
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
