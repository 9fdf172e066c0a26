"""Spatial domains and quadrature grids.

A grid turns integral operators into matrices: it is a list of nodes and
positive quadrature weights whose sum equals the measure of the domain.
Unbounded domains are represented by symmetric truncation to
``[-half_width, half_width]``; the scenario layer quantifies the
truncation error by re-solving at twice the half-width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import roots_legendre

from .errors import InvalidArgument, InvalidDomain

TWO_PI = 2.0 * math.pi

RULES = ("trapezoid", "midpoint", "gauss_legendre_composite")

# Order of the per-panel Gauss rule in the composite rule.  Node counts
# not divisible by this fall back to a single global Gauss panel.
_GL_PANEL_ORDER = 4


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidDomain(f"interval requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def measure(self):
        return self.hi - self.lo

    @property
    def bounds(self):
        return (self.lo, self.hi)


@dataclass(frozen=True)
class Circle:
    """Circle of given circumference, coordinates in [-pi*s, pi*s)."""

    circumference: float = TWO_PI

    def __post_init__(self):
        if not self.circumference > 0:
            raise InvalidDomain(f"circumference must be positive, got {self.circumference}")

    @property
    def measure(self):
        return self.circumference

    @property
    def scale(self):
        return self.circumference / TWO_PI

    @property
    def bounds(self):
        half = math.pi * self.scale
        return (-half, half)


@dataclass(frozen=True)
class TruncatedLine:
    """The real line truncated to [-half_width, half_width]."""

    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise InvalidDomain(f"half_width must be positive, got {self.half_width}")

    @property
    def measure(self):
        return 2.0 * self.half_width

    @property
    def bounds(self):
        return (-self.half_width, self.half_width)


DomainSpec = Union[Interval, Circle, TruncatedLine]


@dataclass(frozen=True)
class Grid:
    """Quadrature nodes/weights over a domain.

    Immutable after construction; the node and weight arrays are marked
    read-only so a Grid can be shared freely.
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain: DomainSpec
    rule: str

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n(self):
        return self.nodes.size

    def integrate(self, u):
        """Quadrature of a grid function: sum of w_i * u_i."""
        return float(np.dot(self.weights, u))

    def l1_norm(self, u):
        """Weighted L1 norm of a grid function."""
        return float(np.dot(self.weights, np.abs(u)))


def _interval_grid(lo, hi, n, rule):
    if rule == "trapezoid":
        nodes = np.linspace(lo, hi, n)
        h = (hi - lo) / (n - 1)
        weights = np.full(n, h)
        weights[0] = weights[-1] = h / 2.0
    elif rule == "midpoint":
        h = (hi - lo) / n
        nodes = lo + h * (np.arange(n) + 0.5)
        weights = np.full(n, h)
    elif rule == "gauss_legendre_composite":
        if n % _GL_PANEL_ORDER == 0 and n > _GL_PANEL_ORDER:
            panels = n // _GL_PANEL_ORDER
            t, w = roots_legendre(_GL_PANEL_ORDER)
        else:
            panels = 1
            t, w = roots_legendre(n)
        edges = np.linspace(lo, hi, panels + 1)
        half = np.diff(edges) / 2.0
        mid = (edges[:-1] + edges[1:]) / 2.0
        nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
    else:
        raise InvalidArgument(f"unknown quadrature rule {rule!r}")
    return nodes, weights


def build_grid(domain: DomainSpec, n: int, rule: str = "trapezoid") -> Grid:
    """Discretize a domain into `n` quadrature nodes.

    Circles always get equispaced nodes with equal weights (the
    periodic trapezoid rule, which is spectrally accurate for smooth
    integrands); the rule argument only selects the node layout on
    interval-type domains.
    """
    if rule not in RULES:
        raise InvalidArgument(f"unknown quadrature rule {rule!r}; choose one of {RULES}")
    if n < 2:
        raise InvalidDomain(f"node count must be at least 2, got {n}")

    if isinstance(domain, Circle):
        half = math.pi * domain.scale
        nodes = -half + (domain.circumference / n) * np.arange(n)
        weights = np.full(n, domain.circumference / n)
    else:
        lo, hi = domain.bounds
        nodes, weights = _interval_grid(lo, hi, n, rule)
    return Grid(nodes=nodes, weights=weights, domain=domain, rule=rule)


def refine(grid: Grid, factor: int) -> Grid:
    """New grid on the same domain with `factor` times as many nodes."""
    if factor < 2 or int(factor) != factor:
        raise InvalidArgument(f"refinement factor must be an integer >= 2, got {factor}")
    return build_grid(grid.domain, grid.n * int(factor), grid.rule)
