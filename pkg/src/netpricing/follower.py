"""Follower-side routines: shortest paths under tolls, route completion,
toll pricing for fixed routes, and reaction sampling over a toll grid.

Tolls are vectors indexed by the instance's tolled arcs (ascending arc
id).  An entry of ``math.inf`` marks an arc priced out of the market;
such arcs are treated as deleted from the follower's graph.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import lp
from .errors import BudgetExceeded, LpFailure, ValidationError
from .instance import Instance
from .lp import EQ, LEQ, LpProblem


def check_tolls(inst: Instance, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape != (inst.n_tolled,):
        raise ValidationError(f"toll vector must have length {inst.n_tolled}")
    if np.any(t[np.isfinite(t)] < 0):
        raise ValidationError("toll prices must be nonnegative")
    return t


@dataclass(eq=False)
class Reaction:
    """One follower's arc flow, with its tolled-arc usage and base cost."""

    commodity: int
    flow: np.ndarray
    path: tuple[int, ...] | None
    w: np.ndarray
    base_cost: float


def reaction_from_flow(inst: Instance, k: int, flow: np.ndarray,
                       path: tuple[int, ...] | None = None) -> Reaction:
    w = np.array([flow[a] for a in inst.tolled_ids], dtype=float)
    base = float(sum(inst.arcs[a].cost * f for a, f in enumerate(flow) if f))
    return Reaction(k, np.asarray(flow, dtype=float), path, w, base)


def reaction_from_path(inst: Instance, k: int, arcs) -> Reaction:
    flow = np.zeros(len(inst.arcs))
    for a in arcs:
        flow[a] += 1.0
    return reaction_from_flow(inst, k, flow, tuple(arcs))


def dijkstra(inst: Instance, source: int, t) -> list[float]:
    """Distances from source under arc costs c + t; infinite tolls delete arcs."""
    adj = inst.out_arcs()
    dist = [math.inf] * inst.node_count
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for arc in adj[u]:
            cost = arc.cost
            if arc.tolled:
                toll = t[inst.tolled_pos[arc.id]]
                if not math.isfinite(toll):
                    continue
                cost += toll
            nd = d + cost
            if nd < dist[arc.head]:
                dist[arc.head] = nd
                heapq.heappush(heap, (nd, arc.head))
    return dist


def _flow_lp(inst: Instance, k: int, t: np.ndarray) -> tuple[LpProblem, list[int]]:
    """Min-cost unit-flow LP for one commodity; infinite-toll arcs omitted."""
    comm = inst.commodities[k]
    prob = LpProblem("min")
    arc_ids = []
    rows: list[list[tuple[int, float]]] = [[] for _ in range(inst.node_count)]
    for arc in inst.arcs:
        cost = arc.cost
        if arc.tolled:
            toll = t[inst.tolled_pos[arc.id]]
            if not math.isfinite(toll):
                continue
            cost += toll
        var = prob.add_var(lb=0.0, obj=cost)
        arc_ids.append(arc.id)
        rows[arc.tail].append((var, 1.0))
        rows[arc.head].append((var, -1.0))
    for v in range(inst.node_count):
        b = 1.0 if v == comm.origin else (-1.0 if v == comm.destination else 0.0)
        prob.add_row(rows[v], EQ, b)
    return prob, arc_ids


def _walk_support(inst: Instance, support: dict[int, float], origin: int,
                  destination: int) -> tuple[int, ...] | None:
    """Trace a path through the support arcs, smallest arc id first."""
    out: dict[int, list[int]] = {}
    for a in sorted(support):
        out.setdefault(inst.arcs[a].tail, []).append(a)
    path = []
    seen = {origin}
    node = origin
    for _ in range(len(inst.arcs) + 1):
        if node == destination:
            return tuple(path)
        choices = out.get(node, [])
        if not choices:
            return None
        a = choices.pop(0)
        path.append(a)
        node = inst.arcs[a].head
        if node in seen and node != destination:
            return None
        seen.add(node)
    return None


def shortest_path(inst: Instance, k: int, t) -> tuple[Reaction, float]:
    """Cost-minimal route for commodity k; ties favor the leader's revenue.

    Solves the routing LP, then re-optimizes toll revenue over the optimal
    face, so among cost-minimal routes the returned one maximizes the sum
    of tolls collected (the optimistic follower).
    """
    t = check_tolls(inst, t)
    prob, arc_ids = _flow_lp(inst, k, t)
    sol = lp.solve(prob)
    if sol.status != "optimal":
        raise ValidationError(f"commodity {k} has no route; instance invalid")
    cost = sol.objective
    revenue_obj = [
        (var, t[inst.tolled_pos[a]])
        for var, a in enumerate(arc_ids)
        if inst.arcs[a].tolled and t[inst.tolled_pos[a]] > 0.0
    ]
    if revenue_obj:
        tie = lp.solve_with_fixed_value(prob, cost, revenue_obj, "max")
        if tie.status == "optimal":
            sol = tie
    flow = np.zeros(len(inst.arcs))
    for var, a in enumerate(arc_ids):
        flow[a] = sol.x[var]
    support = {a: f for a, f in enumerate(flow) if f > 0.5}
    comm = inst.commodities[k]
    path = _walk_support(inst, support, comm.origin, comm.destination)
    reaction = reaction_from_flow(inst, k, flow, path)
    return reaction, float(cost)


def follower_cost(inst: Instance, t) -> float:
    """Total demand-weighted optimal cost over all followers."""
    t = check_tolls(inst, t)
    total = 0.0
    for comm in inst.commodities:
        dist = dijkstra(inst, comm.origin, t)
        total += comm.demand * dist[comm.destination]
    return total


def fill_tollfree(inst: Instance, k: int, pattern) -> tuple[np.ndarray, float] | None:
    """Complete a fixed tolled-arc selection into a min-cost flow.

    The tolled arcs are pinned to the binary selection `pattern`; the
    toll-free arcs are chosen by a min-cost flow.  Returns (flow over all
    arcs, base cost c.x) or None when no completion exists.
    """
    pattern = np.asarray(pattern, dtype=float)
    if pattern.shape != (inst.n_tolled,):
        raise ValidationError("pattern must have one entry per tolled arc")
    comm = inst.commodities[k]
    prob = LpProblem("min")
    arc_ids = []
    rows: list[list[tuple[int, float]]] = [[] for _ in range(inst.node_count)]
    rhs = [0.0] * inst.node_count
    rhs[comm.origin] += 1.0
    rhs[comm.destination] -= 1.0
    for arc in inst.arcs:
        if arc.tolled:
            w = pattern[inst.tolled_pos[arc.id]]
            rhs[arc.tail] -= w
            rhs[arc.head] += w
        else:
            var = prob.add_var(lb=0.0, obj=arc.cost)
            arc_ids.append(arc.id)
            rows[arc.tail].append((var, 1.0))
            rows[arc.head].append((var, -1.0))
    for v in range(inst.node_count):
        prob.add_row(rows[v], EQ, rhs[v])
    sol = lp.solve(prob)
    if sol.status != "optimal":
        return None
    flow = np.zeros(len(inst.arcs))
    for var, a in enumerate(arc_ids):
        flow[a] = sol.x[var]
    base = sol.objective
    for a in inst.tolled_ids:
        p = pattern[inst.tolled_pos[a]]
        flow[a] = p
        base += inst.arcs[a].cost * p
    return flow, float(base)


def _pricing_lp(inst: Instance, reactions) -> tuple[LpProblem, list[int], list[tuple[int, float]]]:
    """Shared dual-feasibility + strong-duality system over the toll variables."""
    n = inst.n_tolled
    cap = inst.toll_cap()
    prob = LpProblem("max")
    t_vars = [prob.add_var(lb=0.0, ub=cap) for _ in range(n)]
    y_vars: list[list[int]] = []
    for _ in inst.commodities:
        y_vars.append([prob.add_var(lb=-math.inf, ub=math.inf) for _ in range(inst.node_count)])
    for k, _comm in enumerate(inst.commodities):
        for arc in inst.arcs:
            row = [(y_vars[k][arc.tail], 1.0), (y_vars[k][arc.head], -1.0)]
            if arc.tolled:
                row.append((t_vars[inst.tolled_pos[arc.id]], -1.0))
            prob.add_row(row, LEQ, arc.cost)
    revenue_obj: list[tuple[int, float]] = []
    for k, comm in enumerate(inst.commodities):
        r = reactions[k]
        row = [(y_vars[k][comm.origin], 1.0), (y_vars[k][comm.destination], -1.0)]
        for i in range(n):
            if r.w[i]:
                row.append((t_vars[i], -r.w[i]))
        prob.add_row(row, EQ, r.base_cost)
        for i in range(n):
            if r.w[i]:
                revenue_obj.append((t_vars[i], comm.demand * r.w[i]))
    return prob, t_vars, revenue_obj


def _push_unbounded(inst: Instance, prob: LpProblem, t_vars) -> np.ndarray:
    """Maximize the total toll over the (already pinned) feasible set.

    Cap-saturated entries are genuinely unbounded and reported as inf:
    any finite bound on an optimal toll is at most the total toll-free
    cost, which sits strictly below the cap.
    """
    q = prob.copy()
    q.sense = "max"
    q.clear_objective()
    for v in t_vars:
        q.set_obj(v, 1.0)
    sol = lp.solve(q)
    if sol.status != "optimal":
        raise LpFailure("toll push re-solve failed unexpectedly")
    cap = inst.toll_cap()
    t = np.array([sol.x[v] for v in t_vars])
    t[t >= cap - 0.5] = math.inf
    t[np.abs(t) < lp.ZERO_TOL] = 0.0
    return t


def _pin_row(prob: LpProblem, coeffs, value: float) -> LpProblem:
    """Copy with coeffs'x pinned to value; falls back to a tolerance band."""
    q = prob.copy()
    q.add_row(coeffs, EQ, value)
    return q


def price_for_paths(inst: Instance, reactions) -> tuple[np.ndarray, float] | None:
    """Most profitable tolls that make all given routes simultaneously optimal.

    Infeasible exactly when no toll vector supports the composition; that
    outcome is a meaningful answer and is returned as None.
    """
    if len(reactions) != len(inst.commodities):
        raise ValidationError("need one reaction per commodity")
    prob, t_vars, revenue_obj = _pricing_lp(inst, reactions)
    aggregated: dict[int, float] = {}
    for var, coef in revenue_obj:
        aggregated[var] = aggregated.get(var, 0.0) + coef
    for var, coef in aggregated.items():
        prob.set_obj(var, coef)
    sol = lp.solve(prob)
    if sol.status == "infeasible":
        return None
    if sol.status != "optimal":
        raise LpFailure("pricing LP unbounded; toll cap missing?")
    revenue = sol.objective
    if aggregated:
        pinned = _pin_row(prob, list(aggregated.items()), revenue)
        t = _push_unbounded(inst, pinned, t_vars)
    else:
        t = _push_unbounded(inst, prob, t_vars)
    return t, float(revenue)


def _pattern_table(inst: Instance, k: int, budget: int):
    n = inst.n_tolled
    if 2 ** n > budget:
        raise BudgetExceeded(f"2^{n} tolled-arc patterns exceed budget {budget}")
    table = []
    for bits in itertools.product((0.0, 1.0), repeat=n):
        filled = fill_tollfree(inst, k, bits)
        if filled is None:
            continue
        _flow, base = filled
        table.append((base, np.array(bits)))
    return table


def _label_from_table(table, t: np.ndarray) -> tuple[int, ...]:
    best = None
    best_cost = math.inf
    for base, w in table:
        cost = base + float(w @ t)
        if cost < best_cost - 1e-9:
            best_cost = cost
            best = (float(w @ t), float(w.sum()), tuple(int(b) for b in w))
        elif cost <= best_cost + 1e-9:
            cand = (float(w @ t), float(w.sum()), tuple(int(b) for b in w))
            if cand > best:
                best = cand
    return best[2]


def reaction_plot_sample(inst: Instance, box, resolution: int,
                         pattern_budget: int = 4096):
    """Sample follower reactions over a toll grid.

    One row per (grid point, commodity) holding the commodity's tolled-arc
    usage, plus an aggregate row with commodity id -1.  Ties between
    equally cheap routes are resolved toward the highest toll revenue.
    Row-major over the axes, so deterministic.
    """
    n = inst.n_tolled
    if len(box) != n:
        raise ValidationError(f"box must have {n} axis ranges")
    if resolution < 2:
        raise ValidationError("resolution must be at least 2")
    axes = [np.linspace(lo, hi, resolution) for lo, hi in box]

    tables = None
    if 2 ** n <= pattern_budget:
        tables = [_pattern_table(inst, k, pattern_budget) for k in range(len(inst.commodities))]

    rows = []
    for point in itertools.product(*axes):
        t = np.array(point)
        aggregate = np.zeros(n, dtype=int)
        for k in range(len(inst.commodities)):
            if tables is not None:
                label = _label_from_table(tables[k], t)
            else:
                reaction, _cost = shortest_path(inst, k, t)
                label = tuple(int(round(v)) for v in reaction.w)
            aggregate += np.array(label, dtype=int)
            rows.append((tuple(point), k, label))
        rows.append((tuple(point), -1, tuple(int(v) for v in aggregate)))
    return rows


def write_plot_csv(rows, n: int, fp) -> None:
    header = [f"t_{i + 1}" for i in range(n)] + ["k"] + [f"w_{i + 1}" for i in range(n)]
    fp.write(",".join(header) + "\n")
    for point, k, label in rows:
        fields = [f"{v:.10g}" for v in point] + [str(k)] + [str(v) for v in label]
        fp.write(",".join(fields) + "\n")
