"""Generation of strong-feasibility cuts over path-selection variables.

Pairs of commodities are ranked by how much of the graph they share,
the deviation test is run on every cross pair of their feasible paths,
and the failing pairs are covered by bicliques, each biclique yielding
one packing inequality (at most one of its paths can be selected).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from . import feasibility
from .instance import Instance
from .lp import ZERO_TOL


@dataclass(frozen=True)
class Cut:
    """sum(z[k_i, p] for p in rows) + sum(z[k_j, q] for q in cols) <= 1."""

    k_i: int
    k_j: int
    rows: tuple[int, ...]
    cols: tuple[int, ...]


@dataclass(eq=False)
class PairMatrix:
    k_i: int
    k_j: int
    h: np.ndarray  # h[p, q] true when the (p, q) composition fails the deviation test
    objectives: np.ndarray


@dataclass(eq=False)
class CutPool:
    cuts: tuple[Cut, ...]
    pairs_tested: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.cuts)

    def to_json(self) -> str:
        return json.dumps(
            [
                {"k_i": c.k_i, "k_j": c.k_j, "P_hat": list(c.rows), "Q_hat": list(c.cols)}
                for c in self.cuts
            ]
        )


def empty_pool() -> CutPool:
    return CutPool((), ())


def closeness_scores(records_by_k) -> dict[tuple[int, int], float]:
    """Shared-arc score per commodity pair, cheap-to-test pairs boosted.

    Score = |arcs used by both path sets| / ln^2(|P_i| * |P_j|); pairs
    where the product is 1 have a vanishing denominator and are ranked
    ahead of every finite score.
    """
    arcs_used = {k: set(itertools.chain.from_iterable(r.arcs for r in recs))
                 for k, recs in records_by_k.items()}
    scores: dict[tuple[int, int], float] = {}
    for k_i, k_j in itertools.combinations(sorted(records_by_k), 2):
        shared = len(arcs_used[k_i] & arcs_used[k_j])
        product = len(records_by_k[k_i]) * len(records_by_k[k_j])
        if product <= 1:
            scores[(k_i, k_j)] = math.inf
        else:
            scores[(k_i, k_j)] = shared / math.log(product) ** 2
    return scores


def pair_matrix(inst: Instance, k_i: int, k_j: int, records_by_k) -> PairMatrix:
    """Run the deviation test on every cross pair of the two path sets."""
    recs_i = records_by_k[k_i]
    recs_j = records_by_k[k_j]
    h = np.zeros((len(recs_i), len(recs_j)), dtype=bool)
    obj = np.zeros((len(recs_i), len(recs_j)))
    for p, rec_p in enumerate(recs_i):
        for q, rec_q in enumerate(recs_j):
            verdict = feasibility.sbf_test(inst, [rec_p, rec_q])
            obj[p, q] = verdict.sbf_objective
            h[p, q] = verdict.sbf_objective > ZERO_TOL
    return PairMatrix(k_i, k_j, h, obj)


def greedy_biclique_cover(pm: PairMatrix) -> list[Cut]:
    """Cover the failing cells with all-ones bicliques, no zero cell covered.

    Seeds at the uncovered cell with the highest row-plus-column count of
    failing cells, then grows by whichever whole row or column keeps the
    block all-ones and covers the most not-yet-covered cells.
    """
    h = pm.h
    nrows, ncols = h.shape
    uncovered = {(p, q) for p in range(nrows) for q in range(ncols) if h[p, q]}
    cuts: list[Cut] = []
    row_ones = h.sum(axis=1)
    col_ones = h.sum(axis=0)
    while uncovered:
        seed = max(uncovered, key=lambda pq: (row_ones[pq[0]] + col_ones[pq[1]],
                                              -pq[0], -pq[1]))
        rows = {seed[0]}
        cols = {seed[1]}
        while True:
            best_gain = 0
            best_add = None
            for r in range(nrows):
                if r in rows or not all(h[r, c] for c in cols):
                    continue
                gain = sum((r, c) in uncovered for c in cols)
                if gain > best_gain:
                    best_gain, best_add = gain, ("row", r)
            for c in range(ncols):
                if c in cols or not all(h[r, c] for r in rows):
                    continue
                gain = sum((r, c) in uncovered for r in rows)
                if gain > best_gain:
                    best_gain, best_add = gain, ("col", c)
            if best_add is None:
                break
            kind, idx = best_add
            (rows if kind == "row" else cols).add(idx)
        for r in rows:
            for c in cols:
                uncovered.discard((r, c))
        cuts.append(Cut(pm.k_i, pm.k_j, tuple(sorted(rows)), tuple(sorted(cols))))
    return cuts


def generate_cuts(inst: Instance, records_by_k, n_pairs: int) -> CutPool:
    """Top-scoring commodity pairs are tested and their failures covered.

    n_pairs = 0 yields an empty pool (the no-cuts control); values above
    the number of distinct pairs are clamped.
    """
    if n_pairs < 0:
        raise ValueError("number of pairs must be nonnegative")
    scores = closeness_scores(records_by_k)
    ranked = sorted(scores, key=lambda ij: (-scores[ij], ij))
    chosen = ranked[: min(n_pairs, len(ranked))]
    cuts: list[Cut] = []
    for k_i, k_j in chosen:
        pm = pair_matrix(inst, k_i, k_j, records_by_k)
        cuts.extend(greedy_biclique_cover(pm))
    return CutPool(tuple(cuts), tuple(chosen))
