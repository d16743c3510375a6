import itertools
import math

import numpy as np
import pytest

from netpricing import build_instance, conjugate, follower, oracle
from netpricing.conjugate import (
    action_prices,
    conjugate_g,
    solve_by_enumeration,
    solve_single_toll,
)
from netpricing.errors import BudgetExceeded, ValidationError


class TestConjugateG:
    def test_blocked_first_arc(self, two_tolls_one_commodity):
        g, _ = conjugate_g(two_tolls_one_commodity, [0, 1])
        assert g == pytest.approx(5.0)

    def test_half_capacity_mixes_routes(self, two_tolls_one_commodity):
        g, flows = conjugate_g(two_tolls_one_commodity, [0.5, 0.5])
        assert g == pytest.approx(3.5)
        assert flows[0][1] == pytest.approx(0.5)

    @pytest.mark.parametrize("alpha", [0.25, 0.75])
    def test_linear_between_kinks(self, two_tolls_one_commodity, alpha):
        g, _ = conjugate_g(two_tolls_one_commodity, [alpha, alpha])
        assert g == pytest.approx(5 - 3 * alpha)

    def test_convexity_random_pairs(self, two_tolls_two_commodities):
        inst = two_tolls_two_commodities
        rng = np.random.default_rng(5)
        for _ in range(100):
            w1 = rng.uniform(0, 2, size=2)
            w2 = rng.uniform(0, 2, size=2)
            lam = rng.random()
            lhs, _ = conjugate_g(inst, lam * w1 + (1 - lam) * w2)
            g1, _ = conjugate_g(inst, w1)
            g2, _ = conjugate_g(inst, w2)
            assert lhs <= lam * g1 + (1 - lam) * g2 + 1e-6

    def test_monotone_in_capacity(self, two_tolls_two_commodities):
        inst = two_tolls_two_commodities
        rng = np.random.default_rng(6)
        for _ in range(40):
            w = rng.uniform(0, 2, size=2)
            bigger = w + rng.uniform(0, 1, size=2)
            g_small, _ = conjugate_g(inst, w)
            g_big, _ = conjugate_g(inst, bigger)
            assert g_big <= g_small + 1e-7


EXPECTED_CELLS = {
    (0, 0): (0.0, (math.inf, math.inf)),
    (1, 0): (5.0, (5.0, math.inf)),
    (2, 0): (6.0, (3.0, math.inf)),
    (0, 1): (6.0, (math.inf, 6.0)),
    (1, 1): (9.0, (4.0, 5.0)),
    (2, 1): (13.0, (4.0, 5.0)),
    (0, 2): (8.0, (math.inf, 4.0)),
    (1, 2): (14.0, (4.0, 5.0)),
    (2, 2): (10.0, (2.0, 3.0)),
}


class TestActionPrices:
    @pytest.mark.parametrize("w", sorted(EXPECTED_CELLS))
    def test_table_cell(self, two_tolls_two_commodities, w):
        revenue, t_expected = EXPECTED_CELLS[w]
        sol = action_prices(two_tolls_two_commodities, np.array(w, dtype=float))
        assert sol.revenue == pytest.approx(revenue, abs=1e-6)
        for got, want in zip(sol.t, t_expected):
            if math.isinf(want):
                assert math.isinf(got)
            else:
                assert got == pytest.approx(want, abs=1e-6)

    def test_unbounded_entries_carry_no_usage(self, two_tolls_two_commodities):
        for w in EXPECTED_CELLS:
            sol = action_prices(two_tolls_two_commodities, np.array(w, dtype=float))
            for usage, toll in zip(sol.w, sol.t):
                if math.isinf(toll):
                    assert usage == 0.0
            finite = np.where(np.isfinite(sol.t), sol.t, 0.0)
            assert sol.revenue == pytest.approx(float(finite @ sol.w), abs=1e-6)

    def test_conjugate_pairing(self, two_tolls_two_commodities):
        """Follower cost splits into toll revenue plus the capped base optimum."""
        inst = two_tolls_two_commodities
        for w in EXPECTED_CELLS:
            sol = action_prices(inst, np.array(w, dtype=float))
            f = follower.follower_cost(inst, sol.t)
            assert f == pytest.approx(sol.revenue + sol.g_value, abs=1e-6)


class TestEnumeration:
    def test_two_commodity_optimum(self, two_tolls_two_commodities):
        res = solve_by_enumeration(two_tolls_two_commodities)
        assert res.revenue == pytest.approx(14.0)
        assert tuple(res.w) == (1.0, 2.0)
        assert tuple(res.t) == pytest.approx((4.0, 5.0))

    def test_series_instance(self, two_tolls_one_commodity):
        res = solve_by_enumeration(two_tolls_one_commodity)
        assert res.revenue == pytest.approx(3.0)
        assert tuple(res.w) == (1.0, 1.0)

    def test_single_toll_instance(self, one_toll_three_commodities):
        assert solve_by_enumeration(one_toll_three_commodities).revenue == pytest.approx(10.0)

    def test_budget_guard(self, two_tolls_two_commodities):
        with pytest.raises(BudgetExceeded):
            solve_by_enumeration(two_tolls_two_commodities, cell_budget=8)

    def test_rejects_non_unit_demand(self):
        inst = build_instance(3, [
            (0, 1, 4, False), (0, 2, 0, False), (2, 1, 0, True),
        ], [(0, 1, 2.0)])
        with pytest.raises(ValidationError):
            solve_by_enumeration(inst)


class TestSingleToll:
    def test_three_followers(self, one_toll_three_commodities):
        revenue, price = solve_single_toll(one_toll_three_commodities)
        assert revenue == 10.0
        assert price == 10.0

    def test_agrees_with_enumeration(self, one_toll_three_commodities):
        revenue, _ = solve_single_toll(one_toll_three_commodities)
        assert revenue == solve_by_enumeration(one_toll_three_commodities).revenue

    def test_one_follower(self):
        inst = build_instance(4, [
            (0, 1, 5, False), (0, 2, 0, False), (2, 3, 0, True), (3, 1, 0, False),
        ], [(0, 1, 1.0)])
        assert solve_single_toll(inst) == (5.0, 5.0)

    def test_worthless_arc_earns_nothing(self):
        inst = build_instance(4, [
            (0, 1, 0, False), (0, 2, 0, False), (2, 3, 0, True), (3, 1, 0, False),
        ], [(0, 1, 1.0)])
        assert solve_single_toll(inst) == (0.0, 0.0)

    def test_requires_single_tolled_arc(self, two_tolls_one_commodity):
        with pytest.raises(ValidationError):
            solve_single_toll(two_tolls_one_commodity)


def test_enumeration_matches_oracle_on_examples(
        two_tolls_one_commodity, two_tolls_two_commodities, shared_segment_pair, triple_overlap):
    for inst in (two_tolls_one_commodity, two_tolls_two_commodities,
                 shared_segment_pair, triple_overlap):
        enum = solve_by_enumeration(inst)
        brute = oracle.brute_force_solve(inst)
        assert enum.revenue == pytest.approx(brute.revenue, abs=1e-6)
