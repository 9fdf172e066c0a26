"""End-to-end scenario pipeline: validate the model hypotheses, trace
the spectral-radius curve, certify the existence condition, solve for
the principal eigenvalue, evaluate lower-bound certificates, integrate
the dynamics, run the resolvent/maximum-principle checks, and reduce
everything to a reproduced/mismatch/inconclusive verdict with
machine-readable exports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import dynamics as dyn
from . import eigensolve as eig
from . import spectral as spec
from .config import ScenarioConfig, load_config
from .errors import (BracketFailure, ConditionNotCertified, ConfigError,
                     NldiffError, UnstableStep)
from .exprs import compile_expression
from .grid import TruncatedLine, build_grid
from .model import (AttainedAt, Constant, Lipschitz, RankOne, validate_model)
from .operators import assemble_A, assemble_J, assemble_L, l1_operator_norm

RATE_TOL_ABS = 1e-2
RATE_TOL_REL = 1e-2
MONOTONE_TOL = 1e-9
CERT_SLACK = 1e-8
RESOLVENT_AGREEMENT_TOL = 1e-6


@dataclass
class ScenarioReport:
    name: str
    expected: str
    verdict: str = "inconclusive"
    validation_violations: list = field(default_factory=list)
    curve_supremum: Optional[float] = None
    curve_monotone: Optional[bool] = None
    upper_bound_holds: Optional[bool] = None
    condition_verdict: Optional[str] = None
    condition_estimate: Optional[float] = None
    lambda0: Optional[float] = None
    eigen_residual: Optional[float] = None
    certificates: list = field(default_factory=list)
    certificates_sound: Optional[bool] = None
    rate: Optional[float] = None
    rate_consistent: Optional[bool] = None
    max_principle_equivalent: Optional[bool] = None
    resolvent_positive: Optional[bool] = None
    resolvent_lambda0: Optional[float] = None
    resolvent_agrees: Optional[bool] = None
    oracle_agrees: Optional[bool] = None
    truncation_sweep: Optional[dict] = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        out = {}
        for key, val in self.__dict__.items():
            if isinstance(val, np.floating):
                val = float(val)
            out[key] = val
        return out


def _lambda_schedule(cfg: ScenarioConfig, inf_a: float, lam_hi: float):
    if cfg.lambda_samples is not None:
        return np.asarray(cfg.lambda_samples, dtype=float)
    offsets = [eta for eta in spec.DEFAULT_SCHEDULE if eta >= cfg.left_offset_floor]
    left = [-inf_a + eta for eta in sorted(offsets)]
    count = max(cfg.lambda_count - len(left), 2)
    right = np.linspace(-inf_a + 0.2, lam_hi, count)
    lams = np.unique(np.concatenate([left, right]))
    return lams


def _certificates(cfg, model, grid, eigen, J_op):
    """Evaluate every applicable certificate at an explicit lambda and
    record whether each stays below the measured spectral radius."""
    kernel, a = model.kernel, model.death_rate
    certs = []
    sound = True

    lam0 = eigen.lambda0
    A = assemble_A(kernel, a, grid, lam0)
    spr0 = spec.spectral_radius(A, tol=cfg.power_tol).radius
    cert = eig.drnovsek_bound(A, eigen.eigenfunction)
    certs.append(("drnovsek", lam0, cert.lower_bound, spr0))
    sound &= cert.lower_bound <= spr0 + CERT_SLACK

    meta = kernel.lower_bound
    if (meta is not None and isinstance(a.inf_location, AttainedAt)
            and isinstance(a.regularity, Lipschitz)):
        C = a.regularity.constant
        gamma = eig.choose_gamma(meta.epsilon, C, meta.delta)
        bound = eig.prop1_log_bound(meta.epsilon, C, meta.delta, gamma)
        a_star = a.inf_value
        lam = -a_star + 0.5 * gamma
        A1 = assemble_A(kernel, a, grid, lam)
        spr1 = spec.spectral_radius(A1, tol=cfg.power_tol).radius
        certs.append(("prop1_log_bound", lam, bound, spr1))
        sound &= bound <= spr1 + CERT_SLACK

    if kernel.symmetric:
        cert = eig.rayleigh_certificate(kernel, a, grid, lam0, eigen.eigenfunction)
        certs.append(("rayleigh", lam0, cert.lower_bound, spr0))
        sound &= cert.lower_bound <= spr0 + CERT_SLACK

    return certs, sound


def _dynamics_check(cfg, model, grid, eigen, report):
    kernel, a = model.kernel, model.death_rate
    L = assemble_L(kernel, a, grid)
    u0 = compile_expression(cfg.u0_expr, ("x",))(grid.nodes)
    u0 = np.broadcast_to(np.asarray(u0, dtype=float), (grid.n,)).copy()
    t_end = cfg.t_end if cfg.t_end is not None else model.t_end
    dt = cfg.dt if cfg.dt is not None else model.dt
    try:
        traj = dyn.integrate(L, u0, t_end, dt, stride=cfg.stride)
    except UnstableStep as exc:
        dt = 0.9 * exc.suggested_dt
        report.notes.append(f"dt clamped to {dt:g} by the stability guard")
        traj = dyn.integrate(L, u0, t_end, dt, stride=cfg.stride)
    rate = dyn.estimate_rate(traj, tail_fraction=cfg.tail_fraction)
    report.rate = rate.rate
    lam0 = eigen.lambda0
    report.rate_consistent = bool(
        abs(rate.rate - lam0) <= max(RATE_TOL_ABS, RATE_TOL_REL * abs(lam0)))
    return traj


def run_scenario(cfg: ScenarioConfig, out_dir=None, dump_matrix: bool = False,
                 seed: Optional[int] = None) -> ScenarioReport:
    model = cfg.model
    kernel, a = model.kernel, model.death_rate
    report = ScenarioReport(name=cfg.name, expected=model.expected)
    seed = cfg.seed if seed is None else seed

    grid = build_grid(model.domain, cfg.n, cfg.rule)

    validation = validate_model(kernel, a, grid, seed=seed + 12345)
    report.validation_violations = [v.message for v in validation.violations]

    J_op = assemble_J(kernel, grid)
    j_norm = l1_operator_norm(J_op)
    lam_hi = j_norm - a.inf_value + 1.0

    lams = _lambda_schedule(cfg, a.inf_value, lam_hi)
    curve = spec.spr_curve(kernel, a, grid, lams, tol=cfg.power_tol)
    report.curve_supremum = curve.supremum
    mono, _ = spec.check_monotone(curve, tol=MONOTONE_TOL)
    report.curve_monotone = mono
    ub_ok = all(
        s.radius <= spec.upper_bound(s.lam, j_norm, a.inf_value) * (1 + 1e-10)
        for s in curve.samples)
    report.upper_bound_holds = ub_ok

    schedule = [eta for eta in spec.DEFAULT_SCHEDULE if eta >= cfg.left_offset_floor]
    condition = eig.check_condition(kernel, a, grid, schedule=schedule,
                                    margin=cfg.margin, cap=cfg.cap,
                                    tol=cfg.power_tol)
    report.condition_verdict = condition.verdict
    report.condition_estimate = condition.limit_lower_estimate

    eigen = None
    traj = None
    if condition.holds:
        try:
            eigen = eig.solve_principal(kernel, a, grid, tol_lambda=cfg.tol_lambda,
                                        tol_spr=cfg.tol_spr, condition=condition,
                                        power_tol=cfg.power_tol)
        except (BracketFailure, ConditionNotCertified) as exc:
            report.notes.append(f"solver: {exc}")
        if eigen is not None:
            report.lambda0 = eigen.lambda0
            report.eigen_residual = eigen.residual
            certs, sound = _certificates(cfg, model, grid, eigen, J_op)
            report.certificates = [
                {"kind": k, "lambda": lam, "lower_bound": b, "measured_spr": s}
                for (k, lam, b, s) in certs]
            report.certificates_sound = sound
            traj = _dynamics_check(cfg, model, grid, eigen, report)

            mu = max(eigen.lambda0, 0.0) + 1.0
            res = dyn.check_resolvent_positive(kernel, a, grid, mu, seed=seed)
            report.resolvent_positive = res.is_positive
            lam_res = dyn.lambda0_from_resolvent(kernel, a, grid, mu)
            report.resolvent_lambda0 = lam_res
            report.resolvent_agrees = bool(
                abs(lam_res - eigen.lambda0) <= RESOLVENT_AGREEMENT_TOL
                * max(1.0, abs(eigen.lambda0)))

            if cfg.truncation_sweep and isinstance(model.domain, TruncatedLine):
                wide = replace(model, domain=TruncatedLine(2 * model.domain.half_width))
                wide_grid = build_grid(wide.domain, 2 * cfg.n, cfg.rule)
                try:
                    eigen2 = eig.solve_principal(wide.kernel, wide.death_rate, wide_grid,
                                                 tol_lambda=cfg.tol_lambda,
                                                 tol_spr=cfg.tol_spr,
                                                 power_tol=cfg.power_tol)
                    report.truncation_sweep = {
                        "R": model.domain.half_width,
                        "R2": wide.domain.half_width,
                        "lambda0_R": eigen.lambda0,
                        "lambda0_2R": eigen2.lambda0,
                        "delta": abs(eigen2.lambda0 - eigen.lambda0),
                    }
                except NldiffError as exc:
                    report.notes.append(f"truncation sweep failed: {exc}")
    else:
        # No existence evidence: for separable kernels assert the curve
        # against the independent closed-form radius.
        if isinstance(kernel.structure, (Constant, RankOne)):
            gaps = [abs(s.radius - spec.rank_one_radius(kernel, a, grid, s.lam))
                    for s in curve.samples]
            report.oracle_agrees = bool(max(gaps) <= 1e-8 * max(1.0, curve.supremum))

    mp = dyn.check_maximum_principle(kernel, a, grid, seed=seed)
    report.max_principle_equivalent = mp.equivalence_holds

    report.verdict = _verdict(report, model.expected)

    if out_dir is not None:
        _write_outputs(Path(out_dir), cfg, grid, J_op, j_norm, curve, eigen,
                       traj, report, dump_matrix)
    return report


def _verdict(report: ScenarioReport, expected: str) -> str:
    if report.validation_violations:
        return "mismatch"
    base = (report.curve_monotone and report.upper_bound_holds
            and report.max_principle_equivalent)
    if expected == "eigenvalue_exists":
        ok = (base and report.condition_verdict == "condition_holds"
              and report.lambda0 is not None
              and (report.eigen_residual or 0) <= 1e-8
              and report.certificates_sound
              and report.rate_consistent
              and report.resolvent_agrees)
        return "reproduced" if ok else "mismatch"
    if expected == "no_eigenvalue":
        ok = (base and report.condition_verdict == "no_evidence"
              and report.curve_supremum is not None and report.curve_supremum < 1.0
              and report.oracle_agrees is not False)
        return "reproduced" if ok else "mismatch"
    return "inconclusive"


def _write_outputs(out_dir, cfg, grid, J_op, j_norm, curve, eigen, traj,
                   report, dump_matrix):
    out = out_dir / cfg.name
    out.mkdir(parents=True, exist_ok=True)
    spec.write_curve_csv(curve, out / "curve.csv", j_norm)
    if eigen is not None:
        eig.write_eigenfunction_csv(grid, eigen.eigenfunction,
                                    out / "eigenfunction.csv")
        eig.write_eigen_json(eigen, out / "eigen.json",
                             eigenfunction_csv_path=out / "eigenfunction.csv")
    if traj is not None:
        dyn.write_trajectory_csv(traj, out / "trajectory.csv")
    if dump_matrix:
        np.savetxt(out / "J_matrix.csv", J_op.matrix, delimiter=",", fmt="%.17g")
    with open(out / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_suite(config_paths, out_dir=None, seed=None):
    """Run a list of scenario configs; returns (reports, exit_code).
    Configs are all parsed up front so a corrupted file aborts the whole
    suite before anything executes."""
    if not config_paths:
        raise ConfigError("no scenario configs given")
    configs = [load_config(p) for p in config_paths]

    reports = []
    for cfg in configs:
        reports.append(run_scenario(cfg, out_dir=out_dir, seed=seed))

    rows = []
    header = f"{'scenario':<28} {'verdict':<12} {'lambda0/plateau':>16} {'rate':>10}"
    rows.append(header)
    rows.append("-" * len(header))
    for rep in reports:
        value = rep.lambda0 if rep.lambda0 is not None else rep.curve_supremum
        rate = f"{rep.rate:.4f}" if rep.rate is not None else "-"
        rows.append(f"{rep.name:<28} {rep.verdict:<12} "
                    f"{value if value is not None else float('nan'):>16.8f} {rate:>10}")
    table = "\n".join(rows)

    exit_code = 0 if all(r.verdict == "reproduced" for r in reports) else 3
    return reports, table, exit_code
