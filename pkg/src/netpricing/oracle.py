"""Brute-force reference solver.

Enumerates every composition of feasible paths (one per commodity),
prices each composition with the toll LP, and keeps the best.  Slow by
design and built from fresh models on every call so the fast solvers can
be cross-validated against it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import feasibility, follower
from .errors import BudgetExceeded
from .instance import Instance


@dataclass(eq=False)
class OracleResult:
    revenue: float
    selection: tuple  # chosen PathRecord per commodity
    t: np.ndarray | None


def brute_force_solve(inst: Instance, budget: int = 10**6) -> OracleResult:
    """Exact optimum by exhaustive composition pricing.

    Ties are broken toward the lexicographically smallest tuple of path
    indices.  Raises BudgetExceeded if the composition count passes budget.
    """
    if not inst.commodities:
        return OracleResult(0.0, (), np.full(inst.n_tolled, math.inf))
    records_by_k = feasibility.enumerate_all(inst)
    counts = [len(records_by_k[k]) for k in sorted(records_by_k)]
    total = math.prod(counts)
    if total > budget:
        raise BudgetExceeded(f"{total} compositions exceed budget {budget}")
    best = None
    for combo in itertools.product(*(records_by_k[k] for k in sorted(records_by_k))):
        reactions = [follower.reaction_from_path(inst, r.commodity, r.arcs) for r in combo]
        priced = follower.price_for_paths(inst, reactions)
        if priced is None:
            continue
        t, revenue = priced
        if best is None or revenue > best.revenue:
            best = OracleResult(float(revenue), combo, t)
    assert best is not None, "toll-free composition must always price"
    return best
