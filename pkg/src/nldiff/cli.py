"""Command-line interface.

Subcommands mirror the pipeline stages: validate, sweep (curve CSV),
solve (eigenvalue JSON), simulate (trajectory CSV), verify (maximum
principle + resolvent JSON), scenario (full pipeline), suite (directory
of configs).  Exit codes: 0 all reproduced / success, 2 config error,
3 at least one mismatch, 4 internal numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from . import eigensolve as eig
from . import spectral as spec
from .config import load_config
from .errors import ConfigError, NldiffError
from .exprs import compile_expression
from .grid import build_grid
from .model import validate_model
from .operators import assemble_J, assemble_L, l1_operator_norm
from .scenarios import run_scenario, run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISMATCH = 3
EXIT_NUMERICAL = 4


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _setup(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    grid = build_grid(cfg.model.domain, cfg.n, cfg.rule)
    return cfg, grid


def cmd_validate(args):
    cfg, grid = _setup(args)
    report = validate_model(cfg.model.kernel, cfg.model.death_rate, grid,
                            seed=cfg.seed + 12345)
    payload = {"model": cfg.name, "ok": report.ok,
               "violations": [v.message for v in report.violations]}
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"{cfg.name}: {'valid' if report.ok else 'INVALID'}")
        for v in report.violations:
            print(f"  - {v.message}")
    return EXIT_OK if report.ok else EXIT_MISMATCH


def cmd_sweep(args):
    cfg, grid = _setup(args)
    model = cfg.model
    J_op = assemble_J(model.kernel, grid)
    j_norm = l1_operator_norm(J_op)
    from .scenarios import _lambda_schedule
    lams = _lambda_schedule(cfg, model.death_rate.inf_value,
                            j_norm - model.death_rate.inf_value + 1.0)
    curve = spec.spr_curve(model.kernel, model.death_rate, grid, lams,
                           tol=cfg.power_tol)
    out = _out_dir(args)
    path = out / f"{cfg.name}_curve.csv"
    spec.write_curve_csv(curve, path, j_norm)
    print(f"curve written to {path} ({len(curve.samples)} samples, "
          f"supremum {curve.supremum:.6g})")
    return EXIT_OK


def cmd_solve(args):
    cfg, grid = _setup(args)
    model = cfg.model
    result = eig.solve_principal(model.kernel, model.death_rate, grid,
                                 tol_lambda=cfg.tol_lambda, tol_spr=cfg.tol_spr,
                                 power_tol=cfg.power_tol)
    out = _out_dir(args)
    fn_path = out / f"{cfg.name}_eigenfunction.csv"
    eig.write_eigenfunction_csv(grid, result.eigenfunction, fn_path)
    json_path = out / f"{cfg.name}_eigen.json"
    eig.write_eigen_json(result, json_path, eigenfunction_csv_path=fn_path)
    if args.json:
        print(json.dumps({"lambda0": result.lambda0, "residual": result.residual,
                          "iterations": result.iterations}, indent=2, sort_keys=True))
    else:
        print(f"lambda0 = {result.lambda0:.12g} (residual {result.residual:.3g}, "
              f"{result.iterations} bisection steps) -> {json_path}")
    return EXIT_OK


def cmd_simulate(args):
    cfg, grid = _setup(args)
    model = cfg.model
    L = assemble_L(model.kernel, model.death_rate, grid)
    u0 = np.broadcast_to(
        compile_expression(cfg.u0_expr, ("x",))(grid.nodes), (grid.n,)).copy()
    t_end = cfg.t_end if cfg.t_end is not None else model.t_end
    dt = cfg.dt if cfg.dt is not None else model.dt
    traj = dyn.integrate(L, u0, t_end, dt, stride=cfg.stride)
    rate = dyn.estimate_rate(traj, tail_fraction=cfg.tail_fraction)
    out = _out_dir(args)
    path = out / f"{cfg.name}_trajectory.csv"
    dyn.write_trajectory_csv(traj, path)
    print(f"trajectory written to {path}; fitted rate {rate.rate:.6g}")
    return EXIT_OK


def cmd_verify(args):
    cfg, grid = _setup(args)
    model = cfg.model
    mp = dyn.check_maximum_principle(model.kernel, model.death_rate, grid,
                                     seed=cfg.seed)
    mu = 1.0 + max(0.0, -model.death_rate.inf_value)
    res = dyn.check_resolvent_positive(model.kernel, model.death_rate, grid, mu,
                                       seed=cfg.seed)
    payload = {
        "model": cfg.name,
        "maximum_principle": {
            "spr_A0": mp.spr_A0,
            "inverse_positive": mp.inverse_positive,
            "equivalence_holds": mp.equivalence_holds,
            "solves_nonnegative": mp.solves_nonnegative,
        },
        "resolvent": {
            "mu": mu,
            "is_positive": res.is_positive,
            "neumann_consistent": res.neumann_consistent,
            "spr_A_mu": res.spr_A_mu,
            "witnesses": res.witnesses,
        },
    }
    out = _out_dir(args)
    path = out / f"{cfg.name}_verify.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"verify report written to {path}")
    ok = mp.equivalence_holds and (res.neumann_consistent is not False)
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_scenario(args):
    cfg, _ = _setup(args)
    report = run_scenario(cfg, out_dir=_out_dir(args),
                          dump_matrix=args.dump_matrix, seed=args.seed)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(f"{report.name}: {report.verdict}"
              + (f" (lambda0 = {report.lambda0:.8g})" if report.lambda0 is not None
                 else f" (plateau {report.curve_supremum:.6g})"))
    return EXIT_OK if report.verdict == "reproduced" else EXIT_MISMATCH


def cmd_suite(args):
    directory = Path(args.directory)
    paths = sorted(directory.glob("*.toml"))
    if not paths:
        raise ConfigError(f"no .toml configs found in {directory}")
    reports, table, code = run_suite(paths, out_dir=_out_dir(args), seed=args.seed)
    print(table)
    return code


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nldiff",
        description="Principal-eigenvalue analysis of nonlocal dispersal operators")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, config=True):
        p = sub.add_parser(name, help=help_)
        if config:
            p.add_argument("config", help="scenario config (TOML)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override RNG seed")
        p.add_argument("--json", action="store_true", help="print JSON to stdout")
        p.add_argument("--dump-matrix", action="store_true",
                       help="also dump the kernel matrix as CSV")
        p.set_defaults(fn=fn)
        return p

    add("validate", cmd_validate, "check model hypotheses on the grid")
    add("sweep", cmd_sweep, "trace the spectral-radius curve to CSV")
    add("solve", cmd_solve, "solve for the principal eigenvalue")
    add("simulate", cmd_simulate, "integrate the dynamics and fit the decay rate")
    add("verify", cmd_verify, "maximum principle + resolvent positivity checks")
    add("scenario", cmd_scenario, "full pipeline for one config")
    p = sub.add_parser("suite", help="run every config in a directory")
    p.add_argument("directory", help="directory of .toml scenario configs")
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--dump-matrix", action="store_true")
    p.set_defaults(fn=cmd_suite)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NldiffError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
