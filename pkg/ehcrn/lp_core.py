# -*- coding: Utf-8 -*

"""
Charnes-Cooper transformation of a linear fractional program and a small
dense two-phase simplex (Bland's rule) for the linear programs it produces.
"""

import math
import logging
from dataclasses import dataclass
from typing import Optional, TYPE_CHECKING
import numpy as np
from .model import DomainError, ContractError

if TYPE_CHECKING:
    from .single_slot import LfpStandardForm

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-11
PHASE_ONE_TOLERANCE = 1e-9
KKT_TOLERANCE = 1e-8
DEGENERATE_T = 1e-12

class NumericalFailure(ArithmeticError):
    pass

class DegenerateDenominatorError(ZeroDivisionError):
    pass

@dataclass(frozen=True)
class LinearProgram:
    """maximize objective @ x  s.t.  matrix @ x (<= | =) rhs, per-variable lower bound 0 or none."""

    objective: np.ndarray
    matrix: np.ndarray
    rhs: np.ndarray
    row_kinds: tuple[str, ...]
    lower_bounds: tuple[str, ...]

    ROW_LE = "<="
    ROW_EQ = "="
    BOUND_ZERO = "zero"
    BOUND_FREE = "free"

    def __post_init__(self):
        objective = np.array(self.objective, dtype=float).reshape(-1)
        matrix = np.array(self.matrix, dtype=float)
        rhs = np.array(self.rhs, dtype=float).reshape(-1)
        if matrix.ndim != 2 or matrix.shape != (rhs.size, objective.size):
            raise DomainError(f"Inconsistent LP dimensions: matrix {matrix.shape}, rhs {rhs.size}, objective {objective.size}")
        if not (np.all(np.isfinite(objective)) and np.all(np.isfinite(matrix)) and np.all(np.isfinite(rhs))):
            raise DomainError("LP entries must be finite")
        row_kinds = tuple(self.row_kinds)
        lower_bounds = tuple(self.lower_bounds)
        if len(row_kinds) != rhs.size or any(kind not in (LinearProgram.ROW_LE, LinearProgram.ROW_EQ) for kind in row_kinds):
            raise DomainError("One row kind ('<=' or '=') is needed per constraint row")
        if len(lower_bounds) != objective.size or any(bound not in (LinearProgram.BOUND_ZERO, LinearProgram.BOUND_FREE) for bound in lower_bounds):
            raise DomainError("One lower bound ('zero' or 'free') is needed per variable")
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "row_kinds", row_kinds)
        object.__setattr__(self, "lower_bounds", lower_bounds)

    m = property(lambda self: int(self.matrix.shape[0]))
    n = property(lambda self: int(self.matrix.shape[1]))

@dataclass(frozen=True)
class LpSolution:
    status: str
    x: Optional[np.ndarray]
    objective: float
    dual: Optional[np.ndarray] = None
    dual_bound: float = math.nan
    kkt_residual: float = math.nan
    pivots: int = 0

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"

    @property
    def optimal(self) -> bool:
        return self.status == LpSolution.OPTIMAL

##########################################################################################################################

def charnes_cooper(lfp: "LfpStandardForm") -> LinearProgram:
    """Map max (c@x + a)/(d@x + b) s.t. A@x <= beta onto an LP in (y, t)."""
    b_scalar = float(lfp.b_scalar)
    if not b_scalar > 0:
        raise DomainError(f"The denominator constant b must be positive, got {b_scalar!r}")
    matrix_a = np.asarray(lfp.matrix_a, dtype=float)
    beta = np.asarray(lfp.beta, dtype=float).reshape(-1, 1)
    c = np.asarray(lfp.c, dtype=float)
    d = np.asarray(lfp.d, dtype=float)
    n = matrix_a.shape[1]
    matrix = np.vstack([
        np.hstack([matrix_a, -beta]),
        np.append(d, b_scalar),
    ])
    rhs = np.append(np.zeros(matrix_a.shape[0]), 1.0)
    row_kinds = (LinearProgram.ROW_LE,) * matrix_a.shape[0] + (LinearProgram.ROW_EQ,)
    # y >= 0 comes from the -I rows of A
    lower_bounds = (LinearProgram.BOUND_FREE,) * n + (LinearProgram.BOUND_ZERO,)
    return LinearProgram(np.append(c, float(lfp.a_scalar)), matrix, rhs, row_kinds, lower_bounds)

def recover_x(lp_solution: LpSolution) -> np.ndarray:
    if not lp_solution.optimal:
        raise ContractError(f"Cannot recover x from a {lp_solution.status} LP solution")
    t = float(lp_solution.x[-1])
    if t <= DEGENERATE_T:
        raise DegenerateDenominatorError(f"Charnes-Cooper scale t={t!r} is degenerate")
    return lp_solution.x[:-1] / t

def solve_lfp(lfp: "LfpStandardForm") -> tuple[Optional[np.ndarray], float, LpSolution]:
    solution = simplex_solve(charnes_cooper(lfp))
    if not solution.optimal:
        return None, math.nan, solution
    x = recover_x(solution)
    t = float(solution.x[-1])
    denominator = float(np.dot(lfp.d, x) + lfp.b_scalar)
    if abs(denominator - 1.0 / t) > KKT_TOLERANCE * max(1.0, 1.0 / t):
        raise NumericalFailure(f"Denominator {denominator!r} disagrees with 1/t={1.0 / t!r}")
    value = (float(np.dot(lfp.c, x)) + float(lfp.a_scalar)) / denominator
    return x, value, solution

##########################################################################################################################

class _Tableau:

    def __init__(self, matrix: np.ndarray, rhs: np.ndarray, max_pivots: int):
        m, n = matrix.shape
        flipped = rhs < 0
        nb_artificial = int(np.count_nonzero(flipped))
        self.__n = n
        self.__m = m
        self.__max_pivots = max_pivots
        self.pivots = 0
        self.table = np.zeros((m, n + m + nb_artificial + 1))
        self.table[:, :n] = matrix
        self.table[:, n:n + m] = np.eye(m)
        self.table[:, -1] = rhs
        self.table[flipped] *= -1
        self.basis = list(range(n, n + m))
        artificial = n + m
        for i in np.flatnonzero(flipped):
            self.table[i, artificial] = 1.0
            self.basis[i] = artificial
            artificial += 1
        self.artificial_start = n + m

    nb_columns = property(lambda self: self.table.shape[1] - 1)

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        return cost - cost[self.basis] @ self.table[:, :-1]

    def value(self, cost: np.ndarray) -> float:
        return float(cost[self.basis] @ self.table[:, -1])

    def pivot(self, row: int, column: int) -> None:
        self.pivots += 1
        if self.pivots > self.__max_pivots:
            raise NumericalFailure(f"Simplex exceeded {self.__max_pivots} pivots")
        self.table[row] /= self.table[row, column]
        for i in range(self.table.shape[0]):
            if i != row and self.table[i, column] != 0:
                self.table[i] -= self.table[i, column] * self.table[row]
        self.basis[row] = column

    def run(self, cost: np.ndarray, allowed: np.ndarray) -> str:
        while True:
            reduced = self.reduced_costs(cost)
            candidates = np.flatnonzero(allowed & (reduced > PIVOT_TOLERANCE))
            if candidates.size == 0:
                return LpSolution.OPTIMAL
            column = int(candidates[0])
            entries = self.table[:, column]
            rows = np.flatnonzero(entries > PIVOT_TOLERANCE)
            if rows.size == 0:
                return LpSolution.UNBOUNDED
            ratios = self.table[rows, -1] / entries[rows]
            best = ratios.min()
            ties = rows[ratios <= best + PIVOT_TOLERANCE * max(1.0, abs(best))]
            row = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(row, column)

    def drive_out_artificials(self) -> None:
        row = 0
        while row < self.table.shape[0]:
            if self.basis[row] >= self.artificial_start:
                columns = np.flatnonzero(np.abs(self.table[row, :self.artificial_start]) > PIVOT_TOLERANCE)
                if columns.size:
                    self.pivot(row, int(columns[0]))
                else:
                    # redundant row
                    self.table = np.delete(self.table, row, axis=0)
                    del self.basis[row]
                    continue
            row += 1

    def solution(self) -> np.ndarray:
        x = np.zeros(self.nb_columns)
        x[self.basis] = self.table[:, -1]
        return x

def _standard_form(lp: LinearProgram) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    # split free variables, turn "=" rows into two opposing "<=" rows
    columns = list()
    signs = list()
    for j, bound in enumerate(lp.lower_bounds):
        columns.append(j)
        signs.append(1.0)
        if bound == LinearProgram.BOUND_FREE:
            columns.append(j)
            signs.append(-1.0)
    columns = np.array(columns)
    signs = np.array(signs)
    matrix = lp.matrix[:, columns] * signs
    objective = lp.objective[columns] * signs
    rows = list()
    rhs = list()
    for i, kind in enumerate(lp.row_kinds):
        rows.append(matrix[i])
        rhs.append(lp.rhs[i])
        if kind == LinearProgram.ROW_EQ:
            rows.append(-matrix[i])
            rhs.append(-lp.rhs[i])
    return np.array(rows), np.array(rhs), objective, np.vstack([columns, signs])

def _kkt_residual(lp: LinearProgram, x: np.ndarray, dual: np.ndarray) -> float:
    le = np.array([kind == LinearProgram.ROW_LE for kind in lp.row_kinds])
    nonneg = np.array([bound == LinearProgram.BOUND_ZERO for bound in lp.lower_bounds])
    row_residual = lp.matrix @ x - lp.rhs
    reduced = lp.objective - lp.matrix.T @ dual
    terms = [0.0]
    if le.any():
        terms.append(np.max(row_residual[le]))
        terms.append(np.max(-dual[le]))
    if (~le).any():
        terms.append(np.max(np.abs(row_residual[~le])))
    if nonneg.any():
        terms.append(np.max(-x[nonneg]))
        terms.append(np.max(reduced[nonneg]))
    if (~nonneg).any():
        terms.append(np.max(np.abs(reduced[~nonneg])))
    terms.append(abs(float(lp.objective @ x - lp.rhs @ dual)))
    scale = 1.0 + max(np.max(np.abs(lp.matrix), initial=0.0), np.max(np.abs(lp.rhs), initial=0.0), np.max(np.abs(lp.objective), initial=0.0)) \
        * max(1.0, np.max(np.abs(x), initial=0.0), np.max(np.abs(dual), initial=0.0))
    return float(max(terms)) / scale

def simplex_solve(lp: LinearProgram, max_pivots: Optional[int] = None) -> LpSolution:
    if max_pivots is None:
        max_pivots = 10 * (lp.m + lp.n) ** 2
    matrix, rhs, objective, column_map = _standard_form(lp)
    m, n = matrix.shape
    tableau = _Tableau(matrix, rhs, max_pivots)
    nb_columns = tableau.nb_columns

    phase_one_cost = np.zeros(nb_columns)
    phase_one_cost[tableau.artificial_start:] = -1.0
    if nb_columns > tableau.artificial_start:
        tableau.run(phase_one_cost, np.ones(nb_columns, dtype=bool))
        infeasibility = -tableau.value(phase_one_cost)
        if infeasibility > PHASE_ONE_TOLERANCE * (1.0 + np.max(np.abs(rhs))):
            logger.debug("Phase one ended with infeasibility %g after %d pivots", infeasibility, tableau.pivots)
            return LpSolution(LpSolution.INFEASIBLE, None, math.nan, pivots=tableau.pivots)
        tableau.drive_out_artificials()

    cost = np.zeros(nb_columns)
    cost[:n] = objective
    allowed = np.zeros(nb_columns, dtype=bool)
    allowed[:tableau.artificial_start] = True
    if tableau.run(cost, allowed) == LpSolution.UNBOUNDED:
        return LpSolution(LpSolution.UNBOUNDED, None, math.inf, pivots=tableau.pivots)

    standard_x = tableau.solution()[:n]
    x = np.zeros(lp.n)
    np.add.at(x, column_map[0].astype(int), column_map[1] * standard_x)

    # duals of the "<=" standard rows from the final basis, then folded back onto the original rows
    unflipped = np.hstack([matrix, np.eye(m)])
    basis = [column for column in tableau.basis if column < n + m]
    standard_dual = np.linalg.lstsq(unflipped[:, basis].T, cost[basis], rcond=None)[0]
    dual = np.zeros(lp.m)
    k = 0
    for i, kind in enumerate(lp.row_kinds):
        dual[i] = standard_dual[k]
        k += 1
        if kind == LinearProgram.ROW_EQ:
            dual[i] -= standard_dual[k]
            k += 1

    value = float(lp.objective @ x)
    residual = _kkt_residual(lp, x, dual)
    if residual > KKT_TOLERANCE:
        raise NumericalFailure(f"KKT residual {residual:.3e} above {KKT_TOLERANCE:.0e} at simplex termination")
    logger.debug("Simplex optimal value %.12g after %d pivots (kkt %.2e)", value, tableau.pivots, residual)
    return LpSolution(LpSolution.OPTIMAL, x, value, dual, float(lp.rhs @ dual), residual, tableau.pivots)
