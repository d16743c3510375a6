"""Bilevel feasibility of paths and path compositions.

A path is bilevel feasible when some nonnegative toll vector makes it the
follower's optimum, equivalently when its base cost equals the minimum
base cost achievable under its own tolled-arc usage.  A composition of
per-commodity paths can fail jointly even when every member passes
individually; an aggregate usage vector whose supporting-toll set is
full-dimensional (equivalently, whose feasible decomposition is unique)
is called strong, and only strong vectors matter to the leader.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import conjugate, follower, lp
from .errors import BudgetExceeded, ValidationError
from .instance import Instance
from .lp import EQ, GAP_TOL, LEQ, ZERO_TOL, LpProblem


@dataclass(frozen=True)
class PathRecord:
    """A bilevel-feasible simple path, keyed by (base cost, tolled usage)."""

    commodity: int
    arcs: tuple[int, ...]
    base_cost: float
    pattern: tuple[int, ...]

    def usage(self) -> np.ndarray:
        return np.array(self.pattern, dtype=float)


@dataclass(eq=False)
class SbfVerdict:
    classification: str  # "strong" | "weak" | "infeasible-composition"
    sbf_objective: float
    certificate: list | None  # alternate per-commodity flows when not strong


def _path_base(inst: Instance, arcs) -> float:
    return float(sum(inst.arcs[a].cost for a in arcs))


def _extract_simple_path(inst: Instance, k: int, flow: np.ndarray, pattern):
    comm = inst.commodities[k]
    support = {a: f for a, f in enumerate(flow) if f > 0.5}
    walk = follower._walk_support(inst, support, comm.origin, comm.destination)
    if walk is None:
        return None
    used = [0] * inst.n_tolled
    for a in walk:
        if inst.arcs[a].tolled:
            used[inst.tolled_pos[a]] = 1
    if tuple(used) != tuple(int(b) for b in pattern):
        return None
    return walk


def _dfs_pattern_path(inst: Instance, k: int, pattern, cost_cap: float,
                      expansion_budget: int = 200_000):
    """Exact fallback: cheapest simple path using exactly the given tolled arcs.

    Only consulted when the completion flow is not itself a simple path
    (zero-cost cycles forced through a tolled arc, or split optima).
    """
    comm = inst.commodities[k]
    adj = inst.out_arcs()
    required = {inst.tolled_ids[i] for i, b in enumerate(pattern) if b}
    best: list[tuple[int, ...] | None] = [None]
    expansions = [0]

    def visit(node, visited, used, cost, trail):
        if best[0] is not None:
            return
        expansions[0] += 1
        if expansions[0] > expansion_budget:
            raise BudgetExceeded("path search budget exhausted")
        if node == comm.destination:
            if used == len(required) and cost >= cost_cap - GAP_TOL:
                best[0] = tuple(trail)
            return
        for arc in adj[node]:
            if arc.head in visited:
                continue
            if arc.tolled:
                if arc.id not in required:
                    continue
                extra = 1
            else:
                extra = 0
            ncost = cost + arc.cost
            if ncost > cost_cap + GAP_TOL:
                continue
            visited.add(arc.head)
            trail.append(arc.id)
            visit(arc.head, visited, used + extra, ncost, trail)
            trail.pop()
            visited.remove(arc.head)

    visit(comm.origin, {comm.origin}, 0, 0.0, [])
    return best[0]


def enumerate_bf_paths(inst: Instance, k: int, pattern_budget: int = 4096) -> list[PathRecord]:
    """All bilevel-feasible simple paths of one commodity, one per usage pattern.

    Scans the 2^n binary tolled-arc selections: each is completed by a
    min-cost flow, kept only if that cost matches the capacitated minimum
    (otherwise no toll ever makes it optimal) and a simple path realizes it.
    """
    n = inst.n_tolled
    if 2 ** n > pattern_budget:
        raise BudgetExceeded(f"2^{n} patterns exceed budget {pattern_budget}")
    records = []
    for bits in itertools.product((0, 1), repeat=n):
        filled = follower.fill_tollfree(inst, k, bits)
        if filled is None:
            continue
        flow, base = filled
        g_k, _ = conjugate.conjugate_g(inst, bits, commodities=[k])
        if base > g_k + GAP_TOL:
            continue
        path = _extract_simple_path(inst, k, flow, bits)
        if path is not None and abs(_path_base(inst, path) - g_k) > GAP_TOL:
            path = None
        if path is None:
            path = _dfs_pattern_path(inst, k, bits, g_k)
        if path is None:
            continue
        records.append(PathRecord(k, path, _path_base(inst, path), bits))
    return records


def enumerate_all(inst: Instance, pattern_budget: int = 4096) -> dict[int, list[PathRecord]]:
    return {k: enumerate_bf_paths(inst, k, pattern_budget) for k in range(len(inst.commodities))}


def composition_usage(records) -> np.ndarray:
    return np.sum([r.usage() for r in records], axis=0)


def is_bf_composition(inst: Instance, records) -> bool:
    """True iff the summed base costs equal g of the aggregate usage."""
    if len(records) != len(inst.commodities):
        raise ValidationError("need one path per commodity")
    total = sum(r.base_cost for r in records)
    g, _ = conjugate.conjugate_g(inst, composition_usage(records))
    return abs(total - g) <= GAP_TOL


def sbf_test(inst: Instance, records) -> SbfVerdict:
    """Deviation test for a composition of individually feasible paths.

    Maximizes flow placed on tolled arcs outside each path's own selection,
    subject to the aggregate usage cap and a total-cost budget.  A positive
    optimum certifies that the composition is not strong: either a cheaper
    routing exists (the composition is jointly infeasible) or a second
    decomposition shares the same usage vector (it is weak).
    """
    ks = [r.commodity for r in records]
    if len(set(ks)) != len(ks):
        raise ValidationError("one path per commodity, no repeats")
    w = composition_usage(records)
    total_base = sum(r.base_cost for r in records)
    by_k = {r.commodity: r for r in records}

    prob = LpProblem("max")
    x_vars = {}
    cap_rows: list[list[tuple[int, float]]] = [[] for _ in inst.tolled_ids]
    budget_row: list[tuple[int, float]] = []
    for k in ks:
        comm = inst.commodities[k]
        pattern = by_k[k].pattern
        rows: list[list[tuple[int, float]]] = [[] for _ in range(inst.node_count)]
        for arc in inst.arcs:
            obj = 0.0
            if arc.tolled:
                i = inst.tolled_pos[arc.id]
                obj = 1.0 - pattern[i]
            var = prob.add_var(lb=0.0, obj=obj)
            x_vars[(k, arc.id)] = var
            rows[arc.tail].append((var, 1.0))
            rows[arc.head].append((var, -1.0))
            if arc.tolled:
                cap_rows[inst.tolled_pos[arc.id]].append((var, 1.0))
            if arc.cost:
                budget_row.append((var, arc.cost))
        for v in range(inst.node_count):
            b = 1.0 if v == comm.origin else (-1.0 if v == comm.destination else 0.0)
            prob.add_row(rows[v], EQ, b)
    for i in range(inst.n_tolled):
        prob.add_row(cap_rows[i], LEQ, w[i])
    prob.add_row(budget_row, LEQ, total_base)

    sol = lp.solve(prob)
    if sol.status != "optimal":
        raise ValidationError(f"deviation LP returned {sol.status}")
    objective = float(sol.objective)
    if objective <= ZERO_TOL:
        return SbfVerdict("strong", objective, None)
    g, _ = conjugate.conjugate_g(inst, w, commodities=ks)
    kind = "infeasible-composition" if g < total_base - GAP_TOL else "weak"
    flows = []
    for k in ks:
        flows.append(np.array([sol.x[x_vars[(k, a.id)]] for a in inst.arcs]))
    return SbfVerdict(kind, objective, flows)


@dataclass(eq=False)
class ClassifyResult:
    classification: str  # "strong" | "weak"
    decompositions: tuple
    sbf: SbfVerdict | None


def classify_w(inst: Instance, w, records_by_k=None, max_witnesses: int = 4) -> ClassifyResult:
    """Strong/weak classification of an integral aggregate usage vector.

    Searches all selections of one feasible path per commodity whose usage
    sums to w at total base cost g(w).  No match means only fractional
    decompositions exist; two or more matches break uniqueness; either way
    w is weak.  A unique match is handed to the deviation test.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (inst.n_tolled,):
        raise ValidationError(f"usage vector must have length {inst.n_tolled}")
    w_int = np.round(w)
    if np.any(np.abs(w - w_int) > ZERO_TOL) or np.any(w_int < 0):
        raise ValidationError("classification requires a nonnegative integral usage vector")
    if records_by_k is None:
        records_by_k = enumerate_all(inst)
    g, _ = conjugate.conjugate_g(inst, w)

    ks = sorted(records_by_k)
    min_base = [min((r.base_cost for r in records_by_k[k]), default=math.inf) for k in ks]
    suffix_min = [0.0] * (len(ks) + 1)
    for i in range(len(ks) - 1, -1, -1):
        suffix_min[i] = suffix_min[i + 1] + min_base[i]

    matches: list[tuple[PathRecord, ...]] = []

    def search(i, usage, base, chosen):
        if len(matches) >= max_witnesses:
            return
        if i == len(ks):
            if np.array_equal(usage, w_int) and abs(base - g) <= GAP_TOL:
                matches.append(tuple(chosen))
            return
        if base + suffix_min[i] > g + GAP_TOL:
            return
        for record in records_by_k[ks[i]]:
            nxt = usage + np.array(record.pattern)
            if np.any(nxt > w_int):
                continue
            chosen.append(record)
            search(i + 1, nxt, base + record.base_cost, chosen)
            chosen.pop()

    search(0, np.zeros(inst.n_tolled, dtype=int), 0.0, [])
    if len(matches) == 0:
        return ClassifyResult("weak", (), None)
    if len(matches) >= 2:
        return ClassifyResult("weak", tuple(matches), None)
    verdict = sbf_test(inst, list(matches[0]))
    kind = "strong" if verdict.classification == "strong" else "weak"
    return ClassifyResult(kind, tuple(matches), verdict)


def action_set_interior(inst: Instance, decomposition, records_by_k=None):
    """Largest uniform slack of a toll vector supporting the decomposition.

    The supporting-toll set is cut out by one inequality per competing
    path and commodity; a strictly positive optimal slack certifies a
    full-dimensional set, slack zero a lower-dimensional one.
    Returns (slack, toll vector at maximum slack).
    """
    if records_by_k is None:
        records_by_k = enumerate_all(inst)
    n = inst.n_tolled
    cap = inst.toll_cap()
    prob = LpProblem("max")
    t_vars = [prob.add_var(lb=0.0, ub=cap) for _ in range(n)]
    delta = prob.add_var(lb=0.0, ub=1.0, obj=1.0)
    for i in range(n):
        prob.add_row([(t_vars[i], -1.0), (delta, 1.0)], LEQ, 0.0)
        prob.add_row([(t_vars[i], 1.0), (delta, 1.0)], LEQ, cap)
    for chosen in decomposition:
        for record in records_by_k[chosen.commodity]:
            if record.pattern == chosen.pattern:
                continue
            alpha = np.array(chosen.pattern, dtype=float) - np.array(record.pattern, dtype=float)
            beta = record.base_cost - chosen.base_cost
            row = [(t_vars[i], alpha[i]) for i in range(n) if alpha[i]]
            row.append((delta, 1.0))
            prob.add_row(row, LEQ, beta)
    sol = lp.solve(prob)
    if sol.status != "optimal":
        raise ValidationError(f"interior probe returned {sol.status}")
    t = np.array([sol.x[v] for v in t_vars])
    return float(sol.objective), t
