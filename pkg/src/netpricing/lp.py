"""Linear-programming core.

Every optimization model in the package (follower routing, toll pricing,
capacitated base-cost programs, the path-based MILP relaxations) is
expressed as an :class:`LpProblem` and solved here.  The engine is the
HiGHS dual simplex via :func:`scipy.optimize.linprog`, which returns
basic (vertex) optimal solutions, row duals, and reduced costs, and is
deterministic for identical input.

All "equals" comparisons elsewhere in the package go through the
tolerances defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import LpFailure

FEAS_TOL = 1e-7
GAP_TOL = 1e-6
ZERO_TOL = 1e-9

LEQ = "<="
GEQ = ">="
EQ = "=="

_SENSES = (LEQ, GEQ, EQ)


class LpProblem:
    """Sparse LP builder: optimize c'x subject to triplet rows and variable bounds."""

    def __init__(self, sense: str = "min"):
        if sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
        self.sense = sense
        self.obj: list[float] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.row_sense: list[str] = []
        self.rhs: list[float] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []

    @property
    def num_vars(self) -> int:
        return len(self.obj)

    @property
    def num_rows(self) -> int:
        return len(self.rhs)

    def add_var(self, lb: float = 0.0, ub: float = math.inf, obj: float = 0.0) -> int:
        if lb > ub:
            raise ValueError("variable lower bound exceeds upper bound")
        self.obj.append(float(obj))
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        return len(self.obj) - 1

    def set_obj(self, var: int, coef: float) -> None:
        self.obj[var] = float(coef)

    def clear_objective(self) -> None:
        self.obj = [0.0] * len(self.obj)

    def add_row(self, coeffs, sense: str, rhs: float) -> int:
        if sense not in _SENSES:
            raise ValueError(f"unknown row sense {sense!r}")
        idx = len(self.rhs)
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        for var, coef in items:
            if coef != 0.0:
                self._rows.append(idx)
                self._cols.append(var)
                self._vals.append(float(coef))
        self.row_sense.append(sense)
        self.rhs.append(float(rhs))
        return idx

    def copy(self) -> "LpProblem":
        q = LpProblem(self.sense)
        q.obj = list(self.obj)
        q.lb = list(self.lb)
        q.ub = list(self.ub)
        q.row_sense = list(self.row_sense)
        q.rhs = list(self.rhs)
        q._rows = list(self._rows)
        q._cols = list(self._cols)
        q._vals = list(self._vals)
        return q

    def matrix(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(
            (self._vals, (self._rows, self._cols)),
            shape=(self.num_rows, self.num_vars),
        )

    def objective_coeffs(self) -> list[tuple[int, float]]:
        return [(j, c) for j, c in enumerate(self.obj) if c != 0.0]

    def write_lp(self, fp) -> None:
        """Dump in CPLEX LP text format for external cross-checking."""
        def term(coef, var):
            return f"{'+' if coef >= 0 else '-'} {abs(coef):.17g} x{var} "

        fp.write("Maximize\n" if self.sense == "max" else "Minimize\n")
        fp.write(" obj: " + "".join(term(c, j) for j, c in enumerate(self.obj) if c) + "\n")
        fp.write("Subject To\n")
        by_row: dict[int, list[tuple[int, float]]] = {}
        for r, c, v in zip(self._rows, self._cols, self._vals):
            by_row.setdefault(r, []).append((c, v))
        op = {LEQ: "<=", GEQ: ">=", EQ: "="}
        for i in range(self.num_rows):
            body = "".join(term(v, c) for c, v in sorted(by_row.get(i, [])))
            fp.write(f" r{i}: {body or '0 x0 '}{op[self.row_sense[i]]} {self.rhs[i]:.17g}\n")
        fp.write("Bounds\n")
        for j in range(self.num_vars):
            lo = "-inf" if self.lb[j] == -math.inf else f"{self.lb[j]:.17g}"
            hi = "+inf" if self.ub[j] == math.inf else f"{self.ub[j]:.17g}"
            fp.write(f" {lo} <= x{j} <= {hi}\n")
        fp.write("End\n")


@dataclass(eq=False)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: float
    x: np.ndarray | None
    duals: np.ndarray | None
    reduced_costs: np.ndarray | None

    def verify(self, problem: LpProblem, bound_overrides=None,
               feas_tol: float = FEAS_TOL, gap_tol: float = GAP_TOL) -> None:
        """Assert feasibility, complementary slackness, and strong duality."""
        assert self.status == "optimal", f"verify on status {self.status}"
        lb, ub = _effective_bounds(problem, bound_overrides)
        x = self.x
        activity = problem.matrix() @ x if problem.num_rows else np.zeros(0)
        scale = 1.0 + float(np.abs(x).max(initial=0.0))
        for i, sense in enumerate(problem.row_sense):
            resid = activity[i] - problem.rhs[i]
            if sense == LEQ:
                assert resid <= feas_tol * scale, f"row {i} violated by {resid}"
            elif sense == GEQ:
                assert resid >= -feas_tol * scale, f"row {i} violated by {resid}"
            else:
                assert abs(resid) <= feas_tol * scale, f"row {i} violated by {resid}"
        assert np.all(x >= lb - feas_tol * scale) and np.all(x <= ub + feas_tol * scale)
        # Dual objective: y'b plus reduced-cost contributions at active bounds.
        dual_obj = float(self.duals @ np.asarray(problem.rhs)) if problem.num_rows else 0.0
        for j, rc in enumerate(self.reduced_costs):
            if abs(rc) <= ZERO_TOL:
                continue
            at_lower = abs(x[j] - lb[j]) <= abs(x[j] - ub[j])
            bound = lb[j] if at_lower else ub[j]
            assert math.isfinite(bound), f"nonzero reduced cost on free side of var {j}"
            dual_obj += rc * bound
        gap = abs(dual_obj - self.objective)
        assert gap <= gap_tol * (1.0 + abs(self.objective)), f"duality gap {gap}"
        # Complementary slackness on rows.
        for i, sense in enumerate(problem.row_sense):
            if sense == EQ:
                continue
            slack = problem.rhs[i] - activity[i]
            assert abs(self.duals[i] * slack) <= gap_tol * scale * 10.0


def _effective_bounds(problem: LpProblem, bound_overrides):
    lb = np.asarray(problem.lb, dtype=float)
    ub = np.asarray(problem.ub, dtype=float)
    if bound_overrides:
        lb = lb.copy()
        ub = ub.copy()
        for var, (lo, hi) in bound_overrides.items():
            lb[var] = lo
            ub[var] = hi
    return lb, ub


def solve(problem: LpProblem, bound_overrides: dict | None = None) -> LpSolution:
    """Solve an LP; classify the status, never return a silently wrong answer.

    bound_overrides maps variable index -> (lb, ub) without mutating the
    problem; branch-and-bound uses this to fix binaries per node.
    """
    n = problem.num_vars
    c = np.asarray(problem.obj, dtype=float)
    flip = -1.0 if problem.sense == "max" else 1.0
    lb, ub = _effective_bounds(problem, bound_overrides)

    ub_rows: list[int] = []  # original row index; GEQ rows negated
    eq_rows: list[int] = []
    for i, sense in enumerate(problem.row_sense):
        (eq_rows if sense == EQ else ub_rows).append(i)

    A = problem.matrix() if problem.num_rows else None
    A_ub = b_ub = A_eq = b_eq = None
    if ub_rows:
        sign = np.array([1.0 if problem.row_sense[i] == LEQ else -1.0 for i in ub_rows])
        A_ub = sparse.diags(sign) @ A[ub_rows]
        b_ub = sign * np.asarray(problem.rhs, dtype=float)[ub_rows]
    if eq_rows:
        A_eq = A[eq_rows]
        b_eq = np.asarray(problem.rhs, dtype=float)[eq_rows]

    res = linprog(
        flip * c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=np.column_stack([lb, ub]),
        method="highs-ds",
    )
    if res.status == 2:
        return LpSolution("infeasible", math.nan, None, None, None)
    if res.status == 3:
        return LpSolution("unbounded", math.nan, None, None, None)
    if res.status != 0:
        raise LpFailure(f"LP engine failed (status {res.status}): {res.message}")

    x = np.asarray(res.x, dtype=float)
    duals = np.zeros(problem.num_rows)
    if ub_rows:
        sign = np.array([1.0 if problem.row_sense[i] == LEQ else -1.0 for i in ub_rows])
        duals[ub_rows] = flip * sign * np.asarray(res.ineqlin.marginals)
    if eq_rows:
        duals[eq_rows] = flip * np.asarray(res.eqlin.marginals)
    rc = flip * (np.asarray(res.lower.marginals) + np.asarray(res.upper.marginals))
    return LpSolution("optimal", float(c @ x), x, duals, rc)


def solve_with_fixed_value(
    problem: LpProblem,
    value: float,
    secondary_objective,
    secondary_sense: str = "max",
    bound_overrides: dict | None = None,
) -> LpSolution:
    """Optimize a secondary objective over the optimal face of a solved LP.

    The primary objective is pinned to `value`; if the exact pin is
    numerically infeasible the pin is retried as a band of width GAP_TOL.
    `secondary_objective` is an iterable of (var, coef) pairs.
    """
    primary = problem.objective_coeffs()
    sec = list(secondary_objective.items()) if isinstance(secondary_objective, dict) \
        else list(secondary_objective)

    def attempt(band: float) -> LpSolution:
        q = problem.copy()
        q.sense = secondary_sense
        q.clear_objective()
        for var, coef in sec:
            q.set_obj(var, coef)
        if band == 0.0:
            q.add_row(primary, EQ, value)
        else:
            q.add_row(primary, GEQ, value - band)
            q.add_row(primary, LEQ, value + band)
        return solve(q, bound_overrides)

    sol = attempt(0.0)
    if sol.status == "infeasible":
        sol = attempt(GAP_TOL)
    return sol
