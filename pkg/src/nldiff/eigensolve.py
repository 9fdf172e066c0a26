"""Principal-eigenvalue certification and solving.

The sufficient condition is a left-endpoint limit of the spectral-radius
curve exceeding one; the eigenvalue itself is the unique root of
spr(A_lambda) = 1, found by bisection (the curve is monotone, so
bisection is unconditionally safe; no derivative is available).
Lower-bound certificates come in three kinds: the positive-operator
inequality Au >= cu => spr(A) >= c, the logarithmic test-function bound
for Lipschitz death rates with attained infimum, and the Rayleigh
quotient in the death-rate-weighted inner product for symmetric kernels.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (BracketFailure, ConditionNotCertified, EmptyTestFunction,
                     InvalidArgument, LambdaOutOfRange, SymmetryRequired,
                     WrongInfimumKind)
from .grid import Grid
from .model import AttainedAt, Convolution, DeathRate, Kernel
from .operators import (DiscreteOperator, assemble_A, assemble_J, assemble_L,
                        l1_operator_norm, scale_to_A)
from .spectral import (DEFAULT_MAX_ITER, DEFAULT_TOL, left_endpoint_limit,
                       spectral_radius)

DEFAULT_MARGIN = 1e-6
SUPPORT_THRESHOLD = 1e-14


@dataclass(frozen=True)
class ConditionReport:
    limit_lower_estimate: float
    diverged: bool
    verdict: str  # condition_holds | no_evidence | out_of_scope
    samples: tuple

    @property
    def holds(self):
        return self.verdict == "condition_holds"


def check_condition(kernel: Kernel, a: DeathRate, grid: Grid, schedule=None,
                    margin: float = DEFAULT_MARGIN, cap: float = 1e6,
                    tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> ConditionReport:
    """Certify (or fail to certify) the existence condition.

    The verdict vocabulary deliberately has no "no eigenvalue exists":
    sampled curve values can never prove the limit is at most one, only
    report the absence of evidence above it.
    """
    est = left_endpoint_limit(kernel, a, grid, schedule=schedule, cap=cap,
                              tol=tol, max_iter=max_iter)
    if not est.samples:
        verdict = "out_of_scope"
    elif est.diverged or est.supremum > 1.0 + margin:
        verdict = "condition_holds"
    else:
        verdict = "no_evidence"
    return ConditionReport(limit_lower_estimate=est.supremum,
                           diverged=est.diverged, verdict=verdict,
                           samples=est.samples)


@dataclass
class EigenResult:
    lambda0: float
    eigenfunction: np.ndarray
    residual: float
    bracket: tuple
    iterations: int
    bracket_history: tuple
    l_residual: float


def solve_principal(kernel: Kernel, a: DeathRate, grid: Grid,
                    tol_lambda: Optional[float] = None, tol_spr: float = 1e-9,
                    max_iter: int = 200, schedule=None,
                    power_tol=DEFAULT_TOL, power_max_iter=DEFAULT_MAX_ITER,
                    condition: Optional[ConditionReport] = None) -> EigenResult:
    """Bisection on spr(A_lambda) - 1.

    The lower bracket end is the largest left-endpoint sample with
    radius above one; the upper end lambda = ||J|| - inf a + 1, where the
    operator-norm bound forces the radius below one.
    """
    if condition is None:
        condition = check_condition(kernel, a, grid, schedule=schedule,
                                    tol=power_tol, max_iter=power_max_iter)
    if not condition.holds:
        raise ConditionNotCertified(
            f"existence condition not certified (verdict {condition.verdict}, "
            f"lower estimate {condition.limit_lower_estimate:g})")

    J_op = assemble_J(kernel, grid)
    j_norm = l1_operator_norm(J_op)

    above = [lam for lam, r in condition.samples if r > 1.0]
    if not above:
        raise BracketFailure("no left-endpoint sample with spectral radius above one")
    lo = max(above)
    hi = j_norm - a.inf_value + 1.0

    warm = {"v": None}

    def g(lam):
        res = spectral_radius(scale_to_A(J_op, a, lam),
                              tol=power_tol, max_iter=power_max_iter,
                              v0=warm["v"])
        warm["v"] = res.perron_vector
        return res.radius - 1.0, res

    g_hi, _ = g(hi)
    if g_hi >= 0:
        raise BracketFailure(
            f"spectral radius at upper bracket end {hi:g} is {g_hi + 1:g} >= 1; "
            "discretization too coarse")

    history = [(lo, hi)]
    iterations = 0
    mid = 0.5 * (lo + hi)
    g_mid, res_mid = g(mid)
    for iterations in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        g_mid, res_mid = g(mid)
        if g_mid > 0:
            lo = mid
        else:
            hi = mid
        history.append((lo, hi))
        tl = tol_lambda if tol_lambda is not None else 1e-10 * (1.0 + abs(mid))
        if hi - lo <= tl and abs(g_mid) <= tol_spr:
            break
    else:
        raise BracketFailure(
            f"bisection did not meet tolerances in {max_iter} iterations "
            f"(bracket width {hi - lo:g}, |spr-1| = {abs(g_mid):g})")

    lambda0 = 0.5 * (lo + hi)
    A0 = scale_to_A(J_op, a, lambda0)
    res = spectral_radius(A0, tol=power_tol, max_iter=power_max_iter, v0=warm["v"])
    u = res.perron_vector
    Au = A0.matrix @ u
    residual = grid.l1_norm(Au - u) / grid.l1_norm(u)
    L = assemble_L(kernel, a, grid)
    l_residual = grid.l1_norm(L.matrix @ u - lambda0 * u) / grid.l1_norm(u)
    return EigenResult(lambda0=lambda0, eigenfunction=u, residual=residual,
                       bracket=(lo, hi), iterations=iterations,
                       bracket_history=tuple(history), l_residual=l_residual)


# --- certificates ----------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    kind: str  # drnovsek | prop1_log_bound | rayleigh
    lower_bound: float
    witness: dict


def drnovsek_bound(A: DiscreteOperator, u,
                   support_threshold: float = SUPPORT_THRESHOLD) -> Certificate:
    """Positive-operator lower bound: min over the support of u of
    (A u)_i / u_i is a certified lower bound for the spectral radius."""
    u = np.asarray(u, dtype=float)
    if u.min() < 0:
        raise InvalidArgument("test function must be entrywise nonnegative")
    support = u > support_threshold
    if not support.any():
        raise EmptyTestFunction("test function is identically zero")
    Au = A.matrix @ u
    bound = float((Au[support] / u[support]).min())
    return Certificate("drnovsek", bound,
                       {"support_size": int(support.sum()),
                        "threshold": support_threshold})


def prop1_test_function(a: DeathRate, gamma: float, delta: float,
                        grid: Grid) -> np.ndarray:
    """Test function 1/(gamma + a(x) - a(x*)) on |x - x*| < delta, zero
    elsewhere; only defined when the death rate attains its infimum."""
    if not isinstance(a.inf_location, AttainedAt):
        raise WrongInfimumKind("death rate must attain its infimum at a point")
    if not (gamma > 0 and delta > 0):
        raise InvalidArgument("gamma and delta must be positive")
    xs = a.inf_location.location
    x = grid.nodes
    av = a(x)
    a_star = float(a(np.array([xs]))[0])
    return np.where(np.abs(x - xs) < delta, 1.0 / (gamma + av - a_star), 0.0)


def prop1_log_bound(epsilon: float, C: float, delta: float, gamma: float) -> float:
    """Closed-form lower bound (epsilon/C) * ln((C*delta + gamma)/gamma)
    on the spectral radius, valid for lambda in
    (-a(x*), gamma - a(x*)) when the kernel/death-rate metadata holds."""
    for name, v in (("epsilon", epsilon), ("C", C), ("delta", delta), ("gamma", gamma)):
        if not v > 0:
            raise InvalidArgument(f"{name} must be positive, got {v}")
    return (epsilon / C) * math.log((C * delta + gamma) / gamma)


def choose_gamma(epsilon: float, C: float, delta: float,
                 margin: float = DEFAULT_MARGIN) -> float:
    """Largest gamma whose log bound still exceeds 1 + margin.

    The bound is strictly decreasing in gamma, so the admissible set is
    an interval (0, gamma*]; gamma* follows in closed form from
    inverting the bound, no search needed.
    """
    for name, v in (("epsilon", epsilon), ("C", C), ("delta", delta)):
        if not v > 0:
            raise InvalidArgument(f"{name} must be positive, got {v}")
    return C * delta / math.expm1((1.0 + margin) * C / epsilon)


def derive_epsilon(kernel: Kernel, delta: float, samples: int = 1001) -> float:
    """Kernel floor for convolution kernels: min of the profile on
    [-delta/2, delta/2], sampled."""
    if not isinstance(kernel.structure, Convolution):
        raise InvalidArgument("epsilon derivation requires a convolution kernel")
    z = np.linspace(-delta / 2.0, delta / 2.0, samples)
    return float(kernel.structure.profile(z).min())


def weighted_inner_product(f, g, lam: float, a: DeathRate, grid: Grid) -> float:
    """Inner product integral of f * g * (lam + a); makes the auxiliary
    operator self-adjoint when the kernel is symmetric."""
    if not lam > -a.inf_value:
        raise LambdaOutOfRange(f"lambda = {lam:g} must exceed {-a.inf_value:g}")
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    return float(np.dot(grid.weights, f * g * (lam + a(grid.nodes))))


def rayleigh_certificate(kernel: Kernel, a: DeathRate, grid: Grid,
                         lam: float, v) -> Certificate:
    """Rayleigh-quotient lower bound in the weighted inner product;
    requires a symmetric kernel (self-adjointness is exact at the
    discrete level in that case)."""
    if not kernel.symmetric:
        raise SymmetryRequired("Rayleigh certificate needs a symmetric kernel")
    v = np.asarray(v, dtype=float)
    if not np.any(v != 0):
        raise EmptyTestFunction("test function is identically zero")
    A = assemble_A(kernel, a, grid, lam)
    num = weighted_inner_product(A.matrix @ v, v, lam, a, grid)
    den = weighted_inner_product(v, v, lam, a, grid)
    return Certificate("rayleigh", num / den, {"lambda": lam})


def prop3_test_function(a: DeathRate, lam: float, delta: float, region,
                        grid: Grid) -> np.ndarray:
    """Test function for the bounded-window proposition:
    1_(x*-delta, x*+delta) / (lam + a) plus the indicator of the window."""
    if not lam > -a.inf_value:
        raise LambdaOutOfRange(f"lambda = {lam:g} must exceed {-a.inf_value:g}")
    center = a.inf_location.location if isinstance(a.inf_location, AttainedAt) else 0.0
    x = grid.nodes
    v = np.where(np.abs(x - center) < delta, 1.0 / (lam + a(x)), 0.0)
    lo, hi = region
    return v + np.where((x > lo) & (x < hi), 1.0, 0.0)


def indicator_function(lo: float, hi: float, grid: Grid) -> np.ndarray:
    """Indicator of the open interval (lo, hi) on the grid nodes."""
    x = grid.nodes
    return np.where((x > lo) & (x < hi), 1.0, 0.0)


def dense_spectrum(L: DiscreteOperator) -> np.ndarray:
    """Full eigenvalue set of the discretized generator via a dense
    eigensolve; the independent oracle for dominance and gap checks."""
    return np.linalg.eigvals(L.matrix)


# --- exports ---------------------------------------------------------------

def write_eigenfunction_csv(grid: Grid, u, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "u"])
        for xi, ui in zip(grid.nodes, np.asarray(u, dtype=float)):
            writer.writerow([f"{xi:.17g}", f"{ui:.17g}"])


def write_eigen_json(result: EigenResult, path, eigenfunction_csv_path=None):
    payload = {
        "lambda0": result.lambda0,
        "residual": result.residual,
        "bracket_lo": result.bracket[0],
        "bracket_hi": result.bracket[1],
        "iterations": result.iterations,
        "eigenfunction_csv_path": (str(eigenfunction_csv_path)
                                   if eigenfunction_csv_path else None),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
