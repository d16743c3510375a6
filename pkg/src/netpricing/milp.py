"""Path-based single-level MILP and a small exact branch-and-bound.

Each commodity picks exactly one of its feasible paths (binary z), tolls
are continuous, and per-commodity strong-duality rows force the chosen
path to be follower-optimal under those tolls.  The bilinear toll-times-
selection products are linearized with big-M envelopes that are exact at
binary points.  Packing cuts from the cut generator are appended up
front; the tree itself adds none.
"""

from __future__ import annotations

import heapq
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import cuts as cuts_mod
from . import feasibility, follower, lp
from .errors import ValidationError
from .instance import Instance
from .lp import EQ, LEQ, LpProblem


@dataclass(eq=False)
class MilpModel:
    problem: LpProblem
    z_vars: list  # [(k, p, var)] in (commodity, path) order
    t_vars: list
    s_vars: dict  # (k, p, tolled position) -> var
    big_m: float
    records_by_k: dict
    pool: cuts_mod.CutPool
    num_cut_rows: int

    @property
    def num_binary(self) -> int:
        return len(self.z_vars)


@dataclass(eq=False)
class SolveReport:
    revenue: float
    bound: float
    gap: float
    nodes: int
    millis: int
    status: str  # "optimal" | "gap-limit" | "time-limit"
    cuts: int = 0
    cut_millis: int = 0
    selection: dict = field(default_factory=dict)  # commodity -> chosen path index
    t: np.ndarray | None = None
    # Diagnostics, not serialized: incumbent variable values and every
    # integral relaxation solution met in the tree.
    x: np.ndarray | None = None
    integral_solutions: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "revenue": self.revenue,
            "bound": self.bound,
            "gap": self.gap,
            "nodes": self.nodes,
            "millis": self.millis,
            "status": self.status,
            "cuts": self.cuts,
            "cut_millis": self.cut_millis,
        })


def big_m(inst: Instance) -> float:
    """Global toll bound: the largest gain any follower gets from the tolled arcs.

    No follower pays more on top of its zero-toll cost than its toll-free
    fallback costs, so any toll beyond this bound can be clipped without
    changing what any follower does.
    """
    m = 0.0
    blocked = np.full(inst.n_tolled, math.inf)
    zero = np.zeros(inst.n_tolled)
    for comm in inst.commodities:
        fallback = follower.dijkstra(inst, comm.origin, blocked)[comm.destination]
        base = follower.dijkstra(inst, comm.origin, zero)[comm.destination]
        m = max(m, fallback - base)
    return m


def build_pastd(inst: Instance, records_by_k, pool: cuts_mod.CutPool | None = None) -> MilpModel:
    """Assemble the path-selection MILP (continuous relaxation form)."""
    pool = pool or cuts_mod.empty_pool()
    ks = sorted(records_by_k)
    for k in ks:
        if not records_by_k[k]:
            raise ValidationError(f"commodity {k} has no feasible path")
    M = big_m(inst)
    prob = LpProblem("max")
    t_vars = [prob.add_var(lb=0.0, ub=M) for _ in range(inst.n_tolled)]
    z_vars = []
    z_index = {}
    for k in ks:
        for p, _rec in enumerate(records_by_k[k]):
            var = prob.add_var(lb=0.0, ub=1.0)
            z_vars.append((k, p, var))
            z_index[(k, p)] = var
    y_vars = {}
    for k in ks:
        y_vars[k] = [prob.add_var(lb=-math.inf, ub=math.inf) for _ in range(inst.node_count)]
    s_vars = {}
    for k in ks:
        eta = inst.commodities[k].demand
        for p, rec in enumerate(records_by_k[k]):
            for i, bit in enumerate(rec.pattern):
                if bit:
                    s_vars[(k, p, i)] = prob.add_var(lb=0.0, ub=M, obj=eta)

    for k in ks:
        prob.add_row([(z_index[(k, p)], 1.0) for p in range(len(records_by_k[k]))], EQ, 1.0)
    for k in ks:
        y = y_vars[k]
        for arc in inst.arcs:
            row = [(y[arc.tail], 1.0), (y[arc.head], -1.0)]
            if arc.tolled:
                row.append((t_vars[inst.tolled_pos[arc.id]], -1.0))
            prob.add_row(row, LEQ, arc.cost)
    for k in ks:
        comm = inst.commodities[k]
        row = [(y_vars[k][comm.origin], -1.0), (y_vars[k][comm.destination], 1.0)]
        for p, rec in enumerate(records_by_k[k]):
            if rec.base_cost:
                row.append((z_index[(k, p)], rec.base_cost))
            for i, bit in enumerate(rec.pattern):
                if bit:
                    row.append((s_vars[(k, p, i)], 1.0))
        prob.add_row(row, EQ, 0.0)
    for (k, p, i), s in s_vars.items():
        z = z_index[(k, p)]
        t = t_vars[i]
        prob.add_row([(s, 1.0), (z, -M)], LEQ, 0.0)
        prob.add_row([(s, 1.0), (t, -1.0)], LEQ, 0.0)
        prob.add_row([(t, 1.0), (s, -1.0), (z, M)], LEQ, M)
    num_cut_rows = 0
    for cut in pool.cuts:
        row = [(z_index[(cut.k_i, p)], 1.0) for p in cut.rows]
        row += [(z_index[(cut.k_j, q)], 1.0) for q in cut.cols]
        prob.add_row(row, LEQ, 1.0)
        num_cut_rows += 1
    return MilpModel(prob, z_vars, t_vars, s_vars, M, dict(records_by_k), pool, num_cut_rows)


_INT_TOL = 1e-6


def branch_and_bound(model: MilpModel, time_limit: float | None = None,
                     gap_limit: float = 0.0) -> SolveReport:
    """Exact maximization over binary path selections.

    LP relaxation per node, branching on the most fractional selection
    variable; depth-first until the first incumbent, then best-bound.
    Limits are enforced cooperatively at node boundaries and reported in
    the status rather than raised.
    """
    t0 = time.perf_counter()
    counter = 0
    # Entries: (parent bound, tie counter, overrides dict).
    stack = [(math.inf, counter, {})]
    heap: list = []
    best_value = -math.inf
    best_solution = None
    integral_solutions: list = []
    nodes = 0
    status = "optimal"

    def open_bound():
        b = best_value
        if stack:
            b = max(b, max(e[0] for e in stack))
        if heap:
            b = max(b, -heap[0][0])
        return b

    while stack or heap:
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            status = "time-limit"
            break
        if best_solution is not None and gap_limit > 0.0:
            bound_now = open_bound()
            if (bound_now - best_value) / max(abs(bound_now), 1.0) <= gap_limit:
                status = "gap-limit"
                break
        if best_solution is None and stack:
            parent_bound, _, overrides = stack.pop()
        elif heap:
            neg_bound, _, overrides = heapq.heappop(heap)
            parent_bound = -neg_bound
        else:
            parent_bound, _, overrides = stack.pop()
        if parent_bound <= best_value + 1e-9:
            continue
        sol = lp.solve(model.problem, overrides)
        nodes += 1
        if sol.status != "optimal":
            continue
        if sol.objective <= best_value + 1e-9:
            continue
        frac_var = None
        worst = _INT_TOL
        for k, p, var in model.z_vars:
            f = abs(sol.x[var] - round(sol.x[var]))
            if f > worst:
                worst = f
                frac_var = var
        if frac_var is None:
            best_value = sol.objective
            best_solution = sol
            integral_solutions.append(sol.x)
            continue
        for fixed in (0.0, 1.0):
            counter += 1
            child = dict(overrides)
            child[frac_var] = (fixed, fixed)
            entry = (sol.objective, counter, child)
            if best_solution is None:
                stack.append(entry)
            else:
                heapq.heappush(heap, (-sol.objective, counter, child))

    bound = open_bound()
    gap = 0.0
    if best_solution is not None:
        gap = max(0.0, (bound - best_value) / max(abs(bound), 1.0))
    millis = int((time.perf_counter() - t0) * 1000)
    report = SolveReport(
        revenue=best_value if best_solution is not None else math.nan,
        bound=bound,
        gap=gap,
        nodes=nodes,
        millis=millis,
        status=status,
        cuts=len(model.pool.cuts),
    )
    if best_solution is not None:
        selection = {}
        for k, p, var in model.z_vars:
            if best_solution.x[var] > 0.5:
                selection[k] = p
        report.selection = selection
        report.t = np.array([best_solution.x[v] for v in model.t_vars])
        report.x = best_solution.x
        report.integral_solutions = integral_solutions
    return report


def solve(inst: Instance, n_pairs: int = 0, time_limit: float | None = None,
          gap_limit: float = 0.0) -> SolveReport:
    """Full pipeline: enumerate paths, generate cuts, build, branch and bound."""
    t0 = time.perf_counter()
    records_by_k = feasibility.enumerate_all(inst)
    c0 = time.perf_counter()
    pool = cuts_mod.generate_cuts(inst, records_by_k, n_pairs)
    cut_millis = int((time.perf_counter() - c0) * 1000)
    model = build_pastd(inst, records_by_k, pool)
    report = branch_and_bound(model, time_limit=time_limit, gap_limit=gap_limit)
    report.cut_millis = cut_millis
    report.millis = int((time.perf_counter() - t0) * 1000)
    return report
