"""Dispersal kernels and death rates, with the structural metadata the
existence certificates need (symmetry, local lower bounds, Lipschitz or
Hoelder constants, where the infimum of the death rate lives).

Hypothesis checking is sampling-based: grid nodes plus a fixed number of
seeded random interior pairs.  Violations are reported as data, not
raised as exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .grid import Circle, DomainSpec, Grid, Interval, TruncatedLine

SQRT_PI = math.sqrt(math.pi)

# Kernel value c of the Hoelder counterexample with exponent 1/2:
# twice the integral of |theta|^(-1/2) over [-pi, pi).
COUNTEREXAMPLE_C = 8.0 * SQRT_PI


# --- kernel structure tags -------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Convolution:
    profile: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RankOne:
    left: Callable[[np.ndarray], np.ndarray]
    right: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class General:
    pass


@dataclass(frozen=True)
class LowerBoundMeta:
    """Declared local lower bound on the kernel.

    For death rates with an attained infimum at x*, the declaration means
    eval(x, y) >= epsilon whenever |x - x*| and |y - x*| are below delta;
    for infimum-at-infinity models it means eval(x, y) >= epsilon whenever
    |x - y| < delta.  `region` is the bounded window U used by the
    Rayleigh-quotient certificate.
    """

    epsilon: float
    delta: float
    region: tuple


@dataclass(frozen=True)
class Kernel:
    eval_xy: Callable[[np.ndarray, np.ndarray], np.ndarray]
    structure: Union[Constant, Convolution, RankOne, General]
    symmetric: bool = False
    lower_bound: Optional[LowerBoundMeta] = None
    domain: Optional[DomainSpec] = None

    def __call__(self, x, y):
        out = self.eval_xy(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.asarray(out, dtype=float)


def constant_kernel(value, lower_bound=None, domain=None):
    def ev(x, y):
        return np.broadcast_to(np.asarray(value, dtype=float), np.broadcast(x, y).shape).copy()

    return Kernel(ev, Constant(float(value)), symmetric=True,
                  lower_bound=lower_bound, domain=domain)


def convolution_kernel(profile, lower_bound=None, domain=None):
    """Kernel J(x, y) = K(x - y); symmetric when K is even, which holds
    for every profile in the builtin catalog."""
    return Kernel(lambda x, y: profile(x - y), Convolution(profile), symmetric=True,
                  lower_bound=lower_bound, domain=domain)


def rank_one_kernel(left, right, symmetric=False, lower_bound=None, domain=None):
    def ev(x, y):
        return left(np.asarray(x, dtype=float)) * right(np.asarray(y, dtype=float))

    return Kernel(ev, RankOne(left, right), symmetric=symmetric,
                  lower_bound=lower_bound, domain=domain)


# --- death rates -----------------------------------------------------------

@dataclass(frozen=True)
class AttainedAt:
    location: float


@dataclass(frozen=True)
class AtInfinity:
    pass


@dataclass(frozen=True)
class Lipschitz:
    constant: float


@dataclass(frozen=True)
class Hoelder:
    exponent: float
    coefficient: float


@dataclass(frozen=True)
class DeathRate:
    eval_x: Callable[[np.ndarray], np.ndarray]
    inf_value: float
    sup_value: float
    inf_location: Union[AttainedAt, AtInfinity]
    regularity: Optional[Union[Lipschitz, Hoelder]] = None

    def __call__(self, x):
        return np.asarray(self.eval_x(np.asarray(x, dtype=float)), dtype=float)


# --- hypothesis validation -------------------------------------------------

@dataclass(frozen=True)
class Violation:
    message: str
    where: tuple


@dataclass(frozen=True)
class ValidationReport:
    violations: list

    @property
    def ok(self):
        return not self.violations


_EQ_TOL = 1e-12


def _sample_pairs(grid, rng, count):
    lo, hi = (grid.nodes[0], grid.nodes[-1])
    xs = rng.uniform(lo, hi, size=count)
    ys = rng.uniform(lo, hi, size=count)
    return xs, ys


def validate_model(kernel: Kernel, a: DeathRate, grid: Grid,
                   random_pairs: int = 200, seed: int = 12345) -> ValidationReport:
    """Check every declared hypothesis on the grid nodes plus seeded
    random interior pairs; returns the full list of violations."""
    rng = np.random.default_rng(seed)
    out = []
    x = grid.nodes

    K = kernel(x[:, None], x[None, :])
    if K.min() < 0:
        i, j = np.unravel_index(int(np.argmin(K)), K.shape)
        out.append(Violation(
            f"kernel negativity: J({x[i]:g}, {x[j]:g}) = {K[i, j]:g}", (x[i], x[j])))

    if kernel.symmetric:
        asym = np.abs(K - K.T)
        if asym.max() > _EQ_TOL:
            i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
            out.append(Violation(
                f"symmetry violated at ({x[i]:g}, {x[j]:g}): |J(x,y)-J(y,x)| = {asym[i, j]:g}",
                (x[i], x[j])))

    if kernel.lower_bound is not None:
        lb = kernel.lower_bound
        X, Y = np.broadcast_arrays(x[:, None], x[None, :])
        if isinstance(a.inf_location, AttainedAt):
            xs = a.inf_location.location
            mask = (np.abs(X - xs) <= 0.999 * lb.delta) & (np.abs(Y - xs) <= 0.999 * lb.delta)
        else:
            mask = np.abs(X - Y) <= 0.999 * lb.delta
        if mask.any():
            vals = K[mask]
            if vals.min() < lb.epsilon * (1 - 1e-12):
                out.append(Violation(
                    f"declared kernel lower bound {lb.epsilon:g} violated: min sampled "
                    f"value {vals.min():g}", ()))

    av = a(x)
    if av.min() < a.inf_value - _EQ_TOL or not a.inf_value > 0:
        i = int(np.argmin(av))
        out.append(Violation(
            f"death rate below declared infimum {a.inf_value:g}: a({x[i]:g}) = {av[i]:g}",
            (x[i],)))
    if av.max() > a.sup_value + _EQ_TOL:
        i = int(np.argmax(av))
        out.append(Violation(
            f"death rate above declared supremum {a.sup_value:g}: a({x[i]:g}) = {av[i]:g}",
            (x[i],)))

    if isinstance(a.inf_location, AttainedAt):
        loc = a.inf_location.location
        val = float(a(np.array([loc]))[0])
        if abs(val - a.inf_value) > _EQ_TOL:
            out.append(Violation(
                f"declared infimum not attained: a({loc:g}) = {val:g} vs {a.inf_value:g}",
                (loc,)))

    if a.regularity is not None:
        xs, ys = _sample_pairs(grid, rng, random_pairs)
        xs = np.concatenate([xs, x])
        ys = np.concatenate([ys, x[::-1]])
        diff = np.abs(a(xs) - a(ys))
        gap = np.abs(xs - ys)
        if isinstance(a.regularity, Lipschitz):
            allowed = a.regularity.constant * gap
        else:
            allowed = a.regularity.coefficient * gap ** a.regularity.exponent
        bad = diff > allowed * (1 + 1e-9) + 1e-12
        if bad.any():
            i = int(np.argmax(bad))
            out.append(Violation(
                f"declared modulus of continuity violated at ({xs[i]:g}, {ys[i]:g}): "
                f"|a(x)-a(y)| = {diff[i]:g} > {allowed[i]:g}", (xs[i], ys[i])))

    return ValidationReport(out)


# --- builtin scenario catalog ----------------------------------------------

@dataclass(frozen=True)
class CatalogModel:
    name: str
    kernel: Kernel
    death_rate: DeathRate
    domain: DomainSpec
    expected: str  # eigenvalue_exists | no_eigenvalue | unknown
    grid_n: int
    grid_rule: str = "trapezoid"
    # dynamics defaults chosen so the principal mode dominates the tail
    t_end: float = 20.0
    dt: float = 0.01


def _gauss_profile(z):
    return np.exp(-z * z / 2.0) / math.sqrt(2.0 * math.pi)


def _tophat_profile(z):
    return np.where(np.abs(z) < 0.5, 1.0, 0.0)


def _counterexample_death(coefficient):
    def ev(x):
        return coefficient * np.abs(x) ** 0.5 + 1.0

    return DeathRate(ev, inf_value=1.0, sup_value=coefficient * SQRT_PI + 1.0,
                     inf_location=AttainedAt(0.0), regularity=Hoelder(0.5, coefficient))


def builtin_catalog():
    """The scenario models exercised by the verification suite."""
    entries = []

    a_const = DeathRate(lambda x: np.full_like(np.asarray(x, dtype=float), 0.5),
                        inf_value=0.5, sup_value=0.5, inf_location=AttainedAt(0.0))
    entries.append(CatalogModel(
        name="const_circle",
        kernel=constant_kernel(1.0 / (2.0 * math.pi)),
        death_rate=a_const,
        domain=Circle(),
        expected="eigenvalue_exists",
        grid_n=64, t_end=10.0, dt=0.01))

    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    entries.append(CatalogModel(
        name="rank_one_log",
        kernel=rank_one_kernel(one, one, symmetric=True,
                               lower_bound=LowerBoundMeta(1.0, 1.0, (0.0, 1.0))),
        death_rate=DeathRate(lambda x: 2.0 + np.asarray(x, dtype=float),
                             inf_value=2.0, sup_value=3.0,
                             inf_location=AttainedAt(0.0), regularity=Lipschitz(1.0)),
        domain=Interval(0.0, 1.0),
        expected="eigenvalue_exists",
        grid_n=501, t_end=20.0, dt=0.05))

    entries.append(CatalogModel(
        name="prop1_gauss",
        kernel=convolution_kernel(_gauss_profile,
                                  lower_bound=LowerBoundMeta(0.24, 0.5, (-0.5, 0.5))),
        death_rate=DeathRate(lambda x: 1.0 + np.abs(x),
                             inf_value=1.0, sup_value=11.0,
                             inf_location=AttainedAt(0.0), regularity=Lipschitz(1.0)),
        domain=TruncatedLine(10.0),
        expected="eigenvalue_exists",
        grid_n=801, t_end=30.0, dt=0.02))

    entries.append(CatalogModel(
        name="prop2_tophat",
        kernel=convolution_kernel(_tophat_profile,
                                  lower_bound=LowerBoundMeta(1.0, 0.5, (-0.5, 0.5))),
        death_rate=DeathRate(lambda x: 1.0 + 1.0 / (1.0 + np.abs(x)),
                             inf_value=1.0, sup_value=2.0,
                             inf_location=AtInfinity(), regularity=Lipschitz(1.0)),
        domain=TruncatedLine(20.0),
        expected="eigenvalue_exists",
        grid_n=1001, t_end=60.0, dt=0.05))

    entries.append(CatalogModel(
        name="counterexample_hoelder",
        kernel=constant_kernel(1.0),
        death_rate=_counterexample_death(COUNTEREXAMPLE_C),
        domain=Circle(),
        expected="no_eigenvalue",
        grid_n=501))

    entries.append(CatalogModel(
        name="counterexample_hoelder_2pi",
        kernel=constant_kernel(1.0 / (2.0 * math.pi)),
        death_rate=_counterexample_death(COUNTEREXAMPLE_C),
        domain=Circle(),
        expected="no_eigenvalue",
        grid_n=501))

    return entries


def catalog_by_name():
    return {m.name: m for m in builtin_catalog()}
