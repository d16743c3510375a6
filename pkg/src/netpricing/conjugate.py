"""Conjugate view of the pricing problem.

Instead of picking tolls directly, the leader can pick how many followers
use each tolled arc (the aggregate usage vector).  For a given usage
vector w, the minimum total base cost achievable under capacities w is a
convex, piecewise-linear function g(w); the toll vectors supporting w are
exactly the maximizers of a companion LP whose optimal value is g(w).
Enumerating integral usage vectors therefore solves the whole problem
with (|K|+1)^n LP solves, n the number of tolled arcs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import follower, lp
from .errors import BudgetExceeded, LpFailure, ValidationError
from .instance import Instance
from .lp import EQ, LEQ, LpProblem


@dataclass(eq=False)
class ConjugateSolution:
    """Optimal tolls and value for one aggregate-usage vector."""

    w: np.ndarray
    g_value: float
    t: np.ndarray  # entries may be inf (arc priced out of the market)
    revenue: float
    decomposition: list  # per-commodity flow arrays achieving g(w)


@dataclass(eq=False)
class EnumerationResult:
    revenue: float
    w: np.ndarray
    t: np.ndarray
    cells: int


def conjugate_g(inst: Instance, w, commodities=None):
    """Minimum total base cost with tolled-arc usage capped at w.

    Returns (g, flows) where flows is one arc-flow array per requested
    commodity.  Always feasible: toll-free routing is available.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (inst.n_tolled,):
        raise ValidationError(f"usage vector must have length {inst.n_tolled}")
    if np.any(w < -lp.ZERO_TOL):
        raise ValidationError("usage vector must be nonnegative")
    ks = list(range(len(inst.commodities))) if commodities is None else list(commodities)

    prob = LpProblem("min")
    x_vars = {}
    cap_rows: list[list[tuple[int, float]]] = [[] for _ in inst.tolled_ids]
    for k in ks:
        comm = inst.commodities[k]
        rows: list[list[tuple[int, float]]] = [[] for _ in range(inst.node_count)]
        for arc in inst.arcs:
            var = prob.add_var(lb=0.0, obj=arc.cost)
            x_vars[(k, arc.id)] = var
            rows[arc.tail].append((var, 1.0))
            rows[arc.head].append((var, -1.0))
            if arc.tolled:
                cap_rows[inst.tolled_pos[arc.id]].append((var, 1.0))
        for v in range(inst.node_count):
            b = 1.0 if v == comm.origin else (-1.0 if v == comm.destination else 0.0)
            prob.add_row(rows[v], EQ, b)
    for i in range(inst.n_tolled):
        prob.add_row(cap_rows[i], LEQ, max(w[i], 0.0))
    sol = lp.solve(prob)
    if sol.status != "optimal":
        raise LpFailure(f"capacitated base-cost LP returned {sol.status}")
    flows = []
    for k in ks:
        flow = np.array([sol.x[x_vars[(k, a.id)]] for a in inst.arcs])
        flows.append(flow)
    return float(sol.objective), flows


def _support_lp(inst: Instance, w: np.ndarray):
    """LP whose optimum is g(w) and whose optimal tolls form the action set."""
    cap = inst.toll_cap()
    prob = LpProblem("max")
    t_vars = [prob.add_var(lb=0.0, ub=cap, obj=-w[i]) for i in range(inst.n_tolled)]
    for k, comm in enumerate(inst.commodities):
        y = [prob.add_var(lb=-math.inf, ub=math.inf) for _ in range(inst.node_count)]
        prob.set_obj(y[comm.origin], prob.obj[y[comm.origin]] + 1.0)
        prob.set_obj(y[comm.destination], prob.obj[y[comm.destination]] - 1.0)
        for arc in inst.arcs:
            row = [(y[arc.tail], 1.0), (y[arc.head], -1.0)]
            if arc.tolled:
                row.append((t_vars[inst.tolled_pos[arc.id]], -1.0))
            prob.add_row(row, LEQ, arc.cost)
    return prob, t_vars


def action_prices(inst: Instance, w) -> ConjugateSolution:
    """Best supporting tolls for usage vector w, and the revenue they earn.

    Three chained solves: the support LP gives g(w); revenue is then
    maximized over its optimal face; remaining slack tolls are pushed to
    the cap, which marks them as unbounded.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (inst.n_tolled,):
        raise ValidationError(f"usage vector must have length {inst.n_tolled}")
    prob, t_vars = _support_lp(inst, w)
    sol = lp.solve(prob)
    if sol.status != "optimal":
        raise LpFailure(f"support LP returned {sol.status}")
    g_value = sol.objective

    pinned = prob.copy()
    pinned.add_row(prob.objective_coeffs(), EQ, g_value)
    pinned.clear_objective()
    revenue_coeffs = [(t_vars[i], w[i]) for i in range(len(t_vars)) if w[i] > 0.0]
    if revenue_coeffs:
        for var, coef in revenue_coeffs:
            pinned.set_obj(var, coef)
        rev_sol = lp.solve(pinned)
        if rev_sol.status == "infeasible":  # exact pin lost to roundoff
            pinned.row_sense[-1] = lp.GEQ
            pinned.rhs[-1] = g_value - lp.GAP_TOL
            rev_sol = lp.solve(pinned)
        if rev_sol.status != "optimal":
            raise LpFailure(f"revenue re-solve returned {rev_sol.status}")
        revenue = rev_sol.objective
        pinned.add_row(revenue_coeffs, EQ, revenue)
        pinned.clear_objective()
    else:
        revenue = 0.0
    t = follower._push_unbounded(inst, pinned, t_vars)
    _g, flows = conjugate_g(inst, w)
    return ConjugateSolution(w, float(g_value), t, float(revenue), flows)


def solve_by_enumeration(inst: Instance, cell_budget: int = 100_000) -> EnumerationResult:
    """Exact optimum by scanning every integral usage vector in {0..|K|}^n.

    Requires unit demands (the integral grid presumes them).  Ties go to
    the lexicographically smallest usage vector.  Raises BudgetExceeded
    when the grid is larger than cell_budget.
    """
    for comm in inst.commodities:
        if comm.demand != 1.0:
            raise ValidationError("enumeration requires unit demands")
    n = inst.n_tolled
    K = len(inst.commodities)
    cells = (K + 1) ** n
    if cells > cell_budget:
        raise BudgetExceeded(f"{cells} usage vectors exceed budget {cell_budget}")
    best = None
    for point in itertools.product(range(K + 1), repeat=n):
        w = np.array(point, dtype=float)
        sol = action_prices(inst, w)
        if best is None or sol.revenue > best.revenue:
            best = sol
    if best is None:  # n == 0: sole cell is the empty vector
        best = action_prices(inst, np.zeros(0))
    return EnumerationResult(best.revenue, best.w, best.t, cells)


def solve_single_toll(inst: Instance) -> tuple[float, float]:
    """Polynomial special case: exactly one tolled arc.

    Each follower pays the toll iff it undercuts that follower's best
    toll-free alternative; sorting those break-even prices descending,
    the best revenue is max over m of m times the m-th largest price.
    """
    if inst.n_tolled != 1:
        raise ValidationError(f"single-toll solver needs exactly 1 tolled arc, got {inst.n_tolled}")
    gains = []
    for comm in inst.commodities:
        blocked = follower.dijkstra(inst, comm.origin, np.array([math.inf]))
        free = follower.dijkstra(inst, comm.origin, np.array([0.0]))
        gains.append(blocked[comm.destination] - free[comm.destination])
    gains.sort(reverse=True)
    best_revenue = 0.0
    best_price = 0.0
    for m, price in enumerate(gains, start=1):
        if m * price > best_revenue:
            best_revenue = m * price
            best_price = price
    return best_revenue, best_price
