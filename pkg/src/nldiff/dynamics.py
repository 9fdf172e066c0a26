"""Time integration of the dispersal dynamics and the resolvent-side
consistency checks: inverse positivity, Neumann-series agreement, the
eigenvalue-from-resolvent identity, and the maximum-principle
equivalence.

Dense direct inversion is used deliberately for the resolvent tests:
entrywise positivity of an inverse cannot be established by iterative
solves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (DegenerateTrajectory, InvalidArgument, NotNonnegative,
                     ResolventDegenerate, SingularResolvent, SingularSystem,
                     UnstableStep)
from .grid import Grid
from .model import DeathRate, Kernel
from .operators import DiscreteOperator, assemble_A, assemble_L
from .spectral import matrix_spectral_radius, spectral_radius

STABILITY_LIMIT = 0.5
NEUMANN_TERM_TOL = 1e-14
NEUMANN_MAX_TERMS = 100000


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), n)
    norms_l1: np.ndarray


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    window: tuple
    fit_residual: float


def integrate(L: DiscreteOperator, u0, t_end: float, dt: float,
              stride: int = 10) -> Trajectory:
    """Classical 4th-order one-step integration of du/dt = L u, recording
    every `stride`-th step (plus the initial and final states)."""
    if dt <= 0:
        raise InvalidArgument(f"dt must be positive, got {dt}")
    if t_end < dt:
        raise InvalidArgument(f"t_end = {t_end} must be at least dt = {dt}")
    M = L.matrix
    norm_est = float(np.abs(M).sum(axis=1).max())
    if dt * norm_est > STABILITY_LIMIT:
        suggested = STABILITY_LIMIT / norm_est if norm_est > 0 else dt
        raise UnstableStep(
            f"dt * ||L|| = {dt * norm_est:g} exceeds {STABILITY_LIMIT}; "
            f"try dt <= {suggested:g}", suggested_dt=suggested)

    w = L.grid.weights
    n_steps = max(1, int(round(t_end / dt)))
    h = t_end / n_steps
    u = np.asarray(u0, dtype=float).copy()
    times = [0.0]
    states = [u.copy()]
    for k in range(1, n_steps + 1):
        k1 = M @ u
        k2 = M @ (u + 0.5 * h * k1)
        k3 = M @ (u + 0.5 * h * k2)
        k4 = M @ (u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if k % stride == 0 or k == n_steps:
            times.append(k * h)
            states.append(u.copy())
    states = np.array(states)
    norms = np.abs(states) @ w
    return Trajectory(times=np.array(times), states=states, norms_l1=norms)


def estimate_rate(traj: Trajectory, tail_fraction: float = 0.5) -> RateEstimate:
    """Least-squares slope of log L1-norm over the final tail of the
    trajectory; the fitted rate approximates the dominant eigenvalue."""
    if not 0.0 < tail_fraction < 1.0:
        raise InvalidArgument(f"tail_fraction must lie in (0, 1), got {tail_fraction}")
    m = len(traj.times)
    start = max(0, m - max(2, int(np.ceil(tail_fraction * m))))
    t = traj.times[start:]
    norms = traj.norms_l1[start:]
    if np.any(norms <= 0):
        raise DegenerateTrajectory("zero norm inside the fit window")
    logn = np.log(norms)
    slope, intercept = np.polyfit(t, logn, 1)
    fit = slope * t + intercept
    residual = float(np.sqrt(np.mean((logn - fit) ** 2)))
    return RateEstimate(rate=float(slope), window=(float(t[0]), float(t[-1])),
                        fit_residual=residual)


# --- resolvent & maximum principle ----------------------------------------

@dataclass
class ResolventReport:
    is_positive: bool
    neumann_consistent: Optional[bool]
    spr_A_mu: Optional[float]
    witnesses: list


def _dense_inverse(M, context):
    n = M.shape[0]
    try:
        inv = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SingularResolvent(f"{context}: {exc}") from None
    # inv() happily returns garbage for nearly singular systems
    if not np.all(np.isfinite(inv)) or np.abs(M @ inv - np.eye(n)).max() > 1e-6:
        raise SingularResolvent(f"{context}: system numerically singular")
    return inv


def neumann_solve(A: DiscreteOperator, rhs, term_tol=NEUMANN_TERM_TOL,
                  max_terms=NEUMANN_MAX_TERMS):
    """Truncated Neumann series (I - A)^-1 rhs; converges when the
    spectral radius of A is below one.  Returns (solution, terms_used)."""
    w = A.grid.weights
    term = np.asarray(rhs, dtype=float).copy()
    total = term.copy()
    for k in range(1, max_terms + 1):
        term = A.matrix @ term
        total += term
        if float(w @ np.abs(term)) < term_tol:
            return total, k
    raise InvalidArgument(f"Neumann series did not settle in {max_terms} terms")


def check_resolvent_positive(kernel: Kernel, a: DeathRate, grid: Grid,
                             mu: float, trials: int = 5, seed: int = 0,
                             tol: float = 1e-8) -> ResolventReport:
    """Entrywise positivity of (mu - L)^-1, plus agreement between the
    truncated Neumann series and the direct solve on seeded random
    nonnegative right-hand sides whenever spr(A_mu) < 1."""
    L = assemble_L(kernel, a, grid)
    n = grid.n
    M = mu * np.eye(n) - L.matrix
    inv = _dense_inverse(M, f"resolvent at mu = {mu:g}")
    is_positive = bool(inv.min() >= -1e-12)
    witnesses = []
    if not is_positive:
        i, j = np.unravel_index(int(np.argmin(inv)), inv.shape)
        witnesses.append(f"negative inverse entry {inv[i, j]:g} at ({i}, {j})")

    spr_A_mu = None
    neumann_consistent = None
    if mu > -a.inf_value:
        A = assemble_A(kernel, a, grid, mu)
        spr_A_mu = spectral_radius(A).radius
        if spr_A_mu < 1.0:
            rng = np.random.default_rng(seed)
            denom = mu + a(grid.nodes)
            neumann_consistent = True
            for t in range(trials):
                f = rng.random(n)
                v, _ = neumann_solve(A, f / denom)
                direct = np.linalg.solve(M, f)
                rel = grid.l1_norm(v - direct) / grid.l1_norm(direct)
                if rel > tol or v.min() < -1e-10:
                    neumann_consistent = False
                    witnesses.append(
                        f"trial {t}: series/direct relative gap {rel:g}, "
                        f"min entry {v.min():g}")
    return ResolventReport(is_positive=is_positive,
                           neumann_consistent=neumann_consistent,
                           spr_A_mu=spr_A_mu, witnesses=witnesses)


def lambda0_from_resolvent(kernel: Kernel, a: DeathRate, grid: Grid,
                           mu: float) -> float:
    """Independent principal-eigenvalue estimate from the resolvent
    radius identity: mu - 1/spr((mu - L)^-1).  Valid for mu above the
    eigenvalue, which is validated post hoc by the returned value."""
    L = assemble_L(kernel, a, grid)
    M = mu * np.eye(grid.n) - L.matrix
    inv = _dense_inverse(M, f"resolvent at mu = {mu:g}")
    if inv.min() < -1e-10:
        raise NotNonnegative(
            f"resolvent has negative entries (min {inv.min():g}); mu is likely "
            "at or below the principal eigenvalue")
    inv = np.where(inv < 0, 0.0, inv)
    spr = matrix_spectral_radius(inv, weights=grid.weights).radius
    if spr <= 1e-12:
        raise ResolventDegenerate(f"resolvent spectral radius {spr:g} is numerically zero")
    return mu - 1.0 / spr


@dataclass
class MaximumPrincipleReport:
    spr_A0: float
    inverse_positive: bool
    equivalence_holds: bool
    solves_nonnegative: Optional[bool]


def inverse_positivity(M, weights=None, trials: int = 0, seed: int = 0):
    """Core of the maximum-principle equivalence for a nonnegative
    matrix: spectral radius, entrywise positivity of (I - M)^-1, and
    optional nonnegativity of solves against random nonnegative
    right-hand sides."""
    M = np.asarray(M, dtype=float)
    if M.min() < 0:
        raise NotNonnegative(f"matrix has negative entry {M.min():g}")
    spr = matrix_spectral_radius(M, weights=weights).radius
    if abs(spr - 1.0) <= 1e-12:
        raise SingularSystem("spectral radius is one to within 1e-12; "
                             "I - A is on the singularity boundary")
    n = M.shape[0]
    eye = np.eye(n)
    try:
        inv = np.linalg.inv(eye - M)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    if not np.all(np.isfinite(inv)) or np.abs((eye - M) @ inv - eye).max() > 1e-6:
        raise SingularSystem("I - A numerically singular")
    inverse_positive = bool(inv.min() >= -1e-12)
    solves_ok = None
    if inverse_positive and trials > 0:
        rng = np.random.default_rng(seed)
        solves_ok = True
        for _ in range(trials):
            g = rng.random(n)
            u = np.linalg.solve(eye - M, g)
            if u.min() < -1e-10:
                solves_ok = False
    return spr, inverse_positive, solves_ok


def check_maximum_principle(kernel: Kernel, a: DeathRate, grid: Grid,
                            trials: int = 10, seed: int = 0) -> MaximumPrincipleReport:
    """Positivity of (I - A_0)^-1 exactly when spr(A_0) < 1, verified on
    the discretized model, with random nonnegative solves when the
    inverse is positive."""
    A0 = assemble_A(kernel, a, grid, 0.0)
    spr, inverse_positive, solves_ok = inverse_positivity(
        A0.matrix, weights=grid.weights, trials=trials, seed=seed)
    return MaximumPrincipleReport(
        spr_A0=spr, inverse_positive=inverse_positive,
        equivalence_holds=(spr < 1.0) == inverse_positive,
        solves_nonnegative=solves_ok)


def write_trajectory_csv(traj: Trajectory, path):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "norm_l1"])
        for t, nrm in zip(traj.times, traj.norms_l1):
            writer.writerow([f"{t:.17g}", f"{nrm:.17g}"])
