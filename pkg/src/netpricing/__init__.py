"""Solvers for the multi-commodity network pricing problem.

A leader prices a subset of arcs in a directed graph; each commodity
then routes along a cheapest path under those prices, breaking ties in
the leader's favor.  The package provides exact solvers (usage-grid
enumeration, a path-based MILP with branch-and-bound, a brute-force
oracle), feasibility analysis of paths and compositions, cut generation,
instance I/O, and a command-line front end.
"""

from .instance import (
    Arc,
    Commodity,
    GeneratorConfig,
    Instance,
    build_instance,
    generate_grid,
    parse,
    serialize,
)

__all__ = [
    "Arc",
    "Commodity",
    "GeneratorConfig",
    "Instance",
    "build_instance",
    "generate_grid",
    "parse",
    "serialize",
]
