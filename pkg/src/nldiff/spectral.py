"""Spectral radii of nonnegative matrices and the radius-vs-lambda curve.

Power iteration runs on M + shift*I from the strictly positive constant
vector; for nonnegative M the shift is exactly removable
(spr(M + sI) = spr(M) + s) and guards against oscillation when the
discretized operator is not primitive.  Everything here is
deterministic: no random starting vectors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgument, LambdaOutOfRange, NotNonnegative
from .grid import Grid
from .model import Constant, DeathRate, Kernel, RankOne
from .operators import DiscreteOperator, assemble_J, scale_to_A

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50000

# Left-endpoint offsets: geometric approach resolves the logarithmic
# divergences produced by Lipschitz death rates.
DEFAULT_SCHEDULE = tuple(10.0 ** -k for k in range(1, 9))
DEFAULT_CAP = 1e6
DEFAULT_FLOOR = 1e-8


@dataclass
class SpectralResult:
    radius: float
    perron_vector: np.ndarray
    iterations: int
    residual: float
    converged: bool


def matrix_spectral_radius(M, weights=None, tol=DEFAULT_TOL,
                           max_iter=DEFAULT_MAX_ITER, shift=None,
                           v0=None) -> SpectralResult:
    """Perron root and vector of a nonnegative matrix by shifted power
    iteration.  The residual is ||M v - r v||_1 / ||v||_1 in the weighted
    L1 norm; convergence requires both a small residual and a settled
    ratio estimate.  Non-convergence is reported, not raised.

    The start vector defaults to the strictly positive constant vector
    (deterministic, no randomness); callers sweeping a family of nearby
    matrices may warm-start with `v0`, typically the previous Perron
    vector."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.min() < 0:
        raise NotNonnegative(f"matrix has negative entry {M.min():g}")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)

    def norm1(v):
        return float(w @ np.abs(v))

    norm_est = float(np.abs(M).sum(axis=1).max())
    if shift is None:
        shift = 1e-3 * norm_est

    if v0 is None:
        v = np.ones(n)
    else:
        v = np.asarray(v0, dtype=float).copy()
        if v.min() < 0 or not np.any(v > 0):
            raise InvalidArgument("warm-start vector must be nonnegative and nonzero")
        v += 1e-12 * v.max()  # keep the start strictly positive
    v /= norm1(v)
    theta_prev = None
    radius = 0.0
    residual = 0.0
    converged = False
    iters = 0
    for iters in range(1, max_iter + 1):
        Mv = M @ v
        y = Mv + shift * v
        ny = norm1(y)
        if ny == 0.0:
            radius, residual, converged = 0.0, 0.0, True
            break
        theta = ny  # norm1(v) == 1, so the ratio estimate is just ny
        radius = max(theta - shift, 0.0)
        residual = norm1(Mv - radius * v)
        scale = max(1.0, theta)
        if (theta_prev is not None
                and abs(theta - theta_prev) <= tol * scale
                and residual <= tol * scale):
            converged = True
            v = y / ny
            break
        theta_prev = theta
        v = y / ny

    perron = np.where(v < 0, 0.0, v)
    nrm = norm1(perron)
    if nrm > 0:
        perron = perron / nrm
    return SpectralResult(radius=radius, perron_vector=perron,
                          iterations=iters, residual=residual, converged=converged)


def spectral_radius(op: DiscreteOperator, tol=DEFAULT_TOL,
                    max_iter=DEFAULT_MAX_ITER, shift=None, v0=None) -> SpectralResult:
    return matrix_spectral_radius(op.matrix, weights=op.grid.weights,
                                  tol=tol, max_iter=max_iter, shift=shift, v0=v0)


@dataclass(frozen=True)
class CurveSample:
    lam: float
    radius: float
    converged: bool
    residual: float


@dataclass(frozen=True)
class SprCurve:
    samples: tuple
    inf_a: float

    @property
    def lambdas(self):
        return np.array([s.lam for s in self.samples])

    @property
    def radii(self):
        return np.array([s.radius for s in self.samples])

    @property
    def supremum(self):
        return float(self.radii.max())


def spr_curve(kernel: Kernel, a: DeathRate, grid: Grid, lambdas,
              tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> SprCurve:
    """Spectral radius of the auxiliary operator at each lambda sample.
    Samples must be strictly increasing and all above -inf a."""
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise InvalidArgument("empty lambda sample list")
    if np.any(np.diff(lambdas) <= 0):
        k = int(np.argmax(np.diff(lambdas) <= 0))
        raise InvalidArgument(f"lambda samples not strictly increasing at index {k + 1}")
    bad = np.where(lambdas <= -a.inf_value)[0]
    if bad.size:
        raise LambdaOutOfRange(
            f"lambda sample {lambdas[bad[0]]:g} at index {bad[0]} "
            f"is not above -inf a = {-a.inf_value:g}")

    J_op = assemble_J(kernel, grid)
    samples = []
    warm = None
    for lam in lambdas:
        A = scale_to_A(J_op, a, float(lam))
        res = spectral_radius(A, tol=tol, max_iter=max_iter, v0=warm)
        warm = res.perron_vector
        samples.append(CurveSample(float(lam), res.radius, res.converged, res.residual))
    return SprCurve(tuple(samples), inf_a=a.inf_value)


def check_monotone(curve: SprCurve, tol: float = 1e-9):
    """True iff consecutive radii are nonincreasing up to tol; on failure
    also reports the index of the first offending sample."""
    if not curve.samples:
        raise InvalidArgument("empty curve")
    r = curve.radii
    viol = np.where(r[1:] > r[:-1] + tol)[0]
    if viol.size:
        return False, int(viol[0] + 1)
    return True, None


def upper_bound(lam: float, J_norm: float, inf_a: float) -> float:
    """Operator-norm bound J_norm / (lam + inf a) on the spectral radius
    of the auxiliary operator."""
    if not lam > -inf_a:
        raise LambdaOutOfRange(f"lambda = {lam:g} must exceed {-inf_a:g}")
    return J_norm / (lam + inf_a)


@dataclass(frozen=True)
class LimitEstimate:
    """Certified lower estimate of the spectral radius limit at the left
    endpoint of the lambda range.  Since the curve is nonincreasing, the
    supremum over samples bounds the limit from below; `diverged` is set
    once a sample exceeds the cap.  This can certify "limit > 1" but can
    never certify "limit <= 1"."""

    last_value: float
    supremum: float
    diverged: bool
    samples: tuple  # of (lambda, radius)


def left_endpoint_limit(kernel: Kernel, a: DeathRate, grid: Grid,
                        schedule=None, cap=DEFAULT_CAP, floor=DEFAULT_FLOOR,
                        tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> LimitEstimate:
    """Sample the spectral radius at lambda = -inf a + eta for a
    decreasing schedule of offsets eta, stopping early on divergence."""
    offsets = np.asarray(DEFAULT_SCHEDULE if schedule is None else schedule, dtype=float)
    if offsets.size == 0 or np.any(offsets <= 0):
        raise InvalidArgument("schedule offsets must be positive")
    if np.any(np.diff(offsets) >= 0):
        raise InvalidArgument("schedule offsets must be strictly decreasing")
    if offsets[-1] < floor * (1 - 1e-12):
        raise InvalidArgument(f"smallest offset {offsets[-1]:g} below floor {floor:g}")

    J_op = assemble_J(kernel, grid)
    samples = []
    diverged = False
    for eta in offsets:
        lam = -a.inf_value + float(eta)
        A = scale_to_A(J_op, a, lam)
        res = spectral_radius(A, tol=tol, max_iter=max_iter)
        samples.append((lam, res.radius))
        if res.radius > cap:
            diverged = True
            break
    radii = [r for _, r in samples]
    return LimitEstimate(last_value=radii[-1], supremum=max(radii),
                         diverged=diverged, samples=tuple(samples))


def rank_one_radius(kernel: Kernel, a: DeathRate, grid: Grid, lam: float) -> float:
    """Closed-form spectral radius for separable kernels J(x,y)=f(x)g(y):
    the quadrature of f(y) g(y) / (lam + a(y)).  Independent of power
    iteration; used as an oracle."""
    if not lam > -a.inf_value:
        raise LambdaOutOfRange(f"lambda = {lam:g} must exceed {-a.inf_value:g}")
    x = grid.nodes
    if isinstance(kernel.structure, Constant):
        fg = np.full(grid.n, kernel.structure.value)
    elif isinstance(kernel.structure, RankOne):
        fg = kernel.structure.left(x) * kernel.structure.right(x)
    else:
        raise InvalidArgument("closed form requires a rank-one or constant kernel")
    return float(np.dot(grid.weights, fg / (lam + a(x))))


def write_curve_csv(curve: SprCurve, path, J_norm: float):
    """Curve export with the operator-norm upper bound alongside."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "spr", "converged", "residual", "upper_bound"])
        for s in curve.samples:
            ub = upper_bound(s.lam, J_norm, curve.inf_a)
            writer.writerow([f"{s.lam:.17g}", f"{s.radius:.17g}",
                             str(s.converged).lower(), f"{s.residual:.17g}",
                             f"{ub:.17g}"])
