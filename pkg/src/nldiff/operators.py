"""Nystroem assembly of the dispersal operator and its relatives.

Quadrature weights are folded into the matrices (one canonical
convention: matrices act on point values).  Weighted norms and inner
products reintroduce the weights explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, DomainMismatch, LambdaOutOfRange
from .grid import Grid
from .model import DeathRate, Kernel


@dataclass(frozen=True)
class DiscreteOperator:
    matrix: np.ndarray
    grid: Grid
    kind: str  # "J" | "L" | "A"
    lam: Optional[float] = None

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def n(self):
        return self.matrix.shape[0]


def _check_domains(kernel: Kernel, grid: Grid):
    if kernel.domain is not None and kernel.domain != grid.domain:
        raise DomainMismatch(
            f"kernel declared on {kernel.domain}, grid lives on {grid.domain}")


def assemble_J(kernel: Kernel, grid: Grid) -> DiscreteOperator:
    """Matrix of kernel values scaled by quadrature weights:
    entry (i, j) = J(x_i, x_j) * w_j."""
    _check_domains(kernel, grid)
    x = grid.nodes
    M = kernel(x[:, None], x[None, :]) * grid.weights[None, :]
    return DiscreteOperator(np.ascontiguousarray(M), grid, "J")


def assemble_L(kernel: Kernel, a: DeathRate, grid: Grid) -> DiscreteOperator:
    """Discrete dispersal-minus-death operator: J matrix minus diag(a)."""
    _check_domains(kernel, grid)
    M = assemble_J(kernel, grid).matrix.copy()
    M[np.diag_indices_from(M)] -= a(grid.nodes)
    return DiscreteOperator(M, grid, "L")


def assemble_A(kernel: Kernel, a: DeathRate, grid: Grid, lam: float) -> DiscreteOperator:
    """Row i of the J matrix scaled by 1/(lam + a(x_i)); entrywise
    nonnegative and only defined for lam above minus the declared
    infimum of the death rate."""
    _check_domains(kernel, grid)
    if not lam > -a.inf_value:
        raise LambdaOutOfRange(
            f"lambda = {lam:g} must exceed -inf a = {-a.inf_value:g}")
    denom = lam + a(grid.nodes)
    M = assemble_J(kernel, grid).matrix / denom[:, None]
    return DiscreteOperator(np.ascontiguousarray(M), grid, "A", lam=lam)


def scale_to_A(J_op: DiscreteOperator, a: DeathRate, lam: float) -> DiscreteOperator:
    """Cheap reassembly of A(lam) from an already-assembled J matrix;
    used by curve sampling and bisection to avoid re-evaluating the kernel."""
    if not lam > -a.inf_value:
        raise LambdaOutOfRange(
            f"lambda = {lam:g} must exceed -inf a = {-a.inf_value:g}")
    denom = lam + a(J_op.grid.nodes)
    M = J_op.matrix / denom[:, None]
    return DiscreteOperator(np.ascontiguousarray(M), J_op.grid, "A", lam=lam)


def apply(op: DiscreteOperator, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (op.n,):
        raise DimensionMismatch(
            f"grid function of length {u.shape} does not match operator size {op.n}")
    return op.matrix @ u


def l1_operator_norm(op: DiscreteOperator) -> float:
    """Discrete L1 -> L1 operator norm: max over columns j of
    sum_i |M_ij| * w_i / w_j."""
    w = op.grid.weights
    col = (np.abs(op.matrix) * w[:, None]).sum(axis=0) / w
    return float(col.max())
