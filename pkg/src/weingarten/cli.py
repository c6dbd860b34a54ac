"""Command line entry point: ``weingarten <subcommand> --config run.yaml``.

Exit codes: 0 success, 2 configuration or parse error, 3 hypothesis or
verification failure, 4 solver failure.
"""

import argparse
import logging
import sys

import numpy as np

from weingarten import output, verify
from weingarten.basegrid import load_field
from weingarten.config import load_config
from weingarten.errors import ConfigError, ContinuationError, SolverError, WeingartenError
from weingarten.graphgeom import frame_from_derivatives, point_geometry
from weingarten.homotopy import check_hypotheses, continue_path
from weingarten.pde import SolverState, newton_solve

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_SOLVER = 0, 2, 3, 4
log = logging.getLogger("weingarten")


def _load(args):
    overrides = {"output": args.out, "seed": args.seed}
    return load_config(args.config, overrides)


def _check_report(cfg):
    if cfg.homotopy is None:
        raise ConfigError("hypothesis checks need a phi section")
    return check_hypotheses(cfg.homotopy, cfg.profile, cfg.mfld, nu_samples=cfg.nu_samples, n_t=cfg.n_t)


def cmd_solve(args):
    cfg = _load(args)
    if cfg.homotopy is None:
        raise ConfigError("solve needs a phi section (use 'newton' for a direct solve)")
    report = {"config": cfg.echo(), "t0": cfg.t0, "hypotheses": _check_report(cfg)}
    if not report["hypotheses"]["passed"]:
        log.warning("hypothesis checks failed: %s", ", ".join(report["hypotheses"]["failed"]))
    state = SolverState(np.full(cfg.mfld.shape, cfg.t0), cfg.k, cfg.psi, cfg.profile, cfg.mfld, cfg.options)
    try:
        res = continue_path(cfg.homotopy, state)
    except ContinuationError as exc:
        report["result"] = {"status": "failed", "last_good_s": exc.last_s, "message": str(exc)}
        output.emit_outputs(cfg.output, records=exc.history, report=report)
        print(f"continuation failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    final = res.accepted[-1]
    report["result"] = {"status": "converged", "s": res.s, "final": final, "accepted": res.accepted}
    output.emit_outputs(cfg.output, cfg.mfld, res.z, res.records, report)
    print(f"reached s={res.s:.6g} residual={final['residual']:.3e}; outputs in {cfg.output}")
    return EXIT_OK


def cmd_newton(args):
    cfg = _load(args)
    init = cfg.t0 if args.init is None else args.init
    state = SolverState(np.full(cfg.mfld.shape, init), cfg.k, cfg.psi, cfg.profile, cfg.mfld, cfg.options)
    report = {"config": cfg.echo(), "init": init}
    try:
        z, diags = newton_solve(state)
    except SolverError as exc:
        recs = [dict(d.record(1.0)) for d in exc.diagnostics or []]
        recs.append({"s": 1.0, "event": "failure", "reason": type(exc).__name__, "message": str(exc)})
        report["result"] = {"status": "failed", "message": str(exc)}
        output.emit_outputs(cfg.output, records=recs, report=report)
        print(f"newton failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    recs = [d.record(1.0) for d in diags]
    result = {"status": "converged", "iterations": len(diags) - 1, "final": recs[-1]}
    z_star = getattr(cfg.psi, "z_star", None)
    if z_star is not None:
        result["error_vs_z_star"] = float(np.max(np.abs(z - z_star)))
    elif getattr(cfg.psi, "describe", lambda: {})().get("family") == "phi_bar" and cfg.phi is not None \
            and cfg.psi.perturb is None and cfg.psi.scale == 1.0:
        result["error_vs_t0"] = float(np.max(np.abs(z - cfg.phi.t0)))
    report["result"] = result
    output.emit_outputs(cfg.output, cfg.mfld, z, recs, report)
    print(f"converged in {len(diags) - 1} iterations, residual={recs[-1]['residual']:.3e}")
    return EXIT_OK


def cmd_check(args):
    cfg = _load(args)
    rep = _check_report(cfg)
    report = {"config": cfg.echo(), "t0": cfg.t0, "hypotheses": rep}
    output.emit_outputs(cfg.output, report=report)
    print(output.dumps(rep))
    if not rep["passed"]:
        for name in rep["failed"]:
            c = rep["conditions"][name]
            print(f"FAILED ({name}): margin {c['margin']:.6g} at {output.dumps(c.get('worst', c.get('worst_t')))}",
                  file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_verify(args):
    seed = args.seed
    if seed is None and args.config:
        seed = load_config(args.config).seed
    seed = 0 if seed is None else seed
    results = verify.run_all(seed=seed, samples=args.samples, which=args.suite or None)
    for r in results:
        print(f"{r['name']}: {'PASS' if r['passed'] else 'FAIL'}")
    if args.out:
        # timings vary run to run; keep them out of the file
        output.emit_outputs(args.out, report={"seed": seed, "suites": [
            {k: v for k, v in r.items() if k != "seconds"} for r in results]})
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_CHECK


def cmd_slice(args):
    cfg = _load(args)
    t0 = cfg.t0 if args.t0 is None else args.t0
    n = cfg.mfld.dim
    fr = frame_from_derivatives(cfg.profile, t0, np.zeros(n), np.zeros((n, n)))
    print(output.dumps(dict(fr.to_dict(), t0=t0)))
    return EXIT_OK


def cmd_inspect(args):
    cfg = _load(args)
    z = load_field(args.field)
    try:
        fr = point_geometry(cfg.profile, cfg.mfld, z, tuple(args.node))
    except IndexError:
        raise ConfigError(f"node {args.node} outside grid {cfg.mfld.shape}") from None
    print(output.dumps(dict(fr.to_dict(), node=list(args.node))))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="weingarten", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, config_required=True):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=config_required, help="YAML run configuration")
        sp.add_argument("--out", default=None, help="output directory (overrides config)")
        sp.add_argument("--seed", type=int, default=None, help="random seed (overrides config)")
        sp.set_defaults(func=fn)
        return sp

    add("solve", cmd_solve, "continuation from the slice t0 to the target psi")
    sp = add("newton", cmd_newton, "single damped Newton solve for the target psi")
    sp.add_argument("--init", type=float, default=None, help="constant initial height (default t0)")
    add("check", cmd_check, "hypothesis report")
    sp = add("verify", cmd_verify, "property and oracle suites", config_required=False)
    sp.add_argument("--suite", action="append", choices=sorted(verify.SUITES))
    sp.add_argument("--samples", type=int, default=10_000)
    sp = add("slice", cmd_slice, "PointFrame of the slice z = t0")
    sp.add_argument("--t0", type=float, default=None)
    sp = add("inspect", cmd_inspect, "PointFrame at a node of a stored field")
    sp.add_argument("--field", required=True, help="solution.csv written by solve/newton")
    sp.add_argument("--node", type=int, nargs="+", required=True)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except WeingartenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
