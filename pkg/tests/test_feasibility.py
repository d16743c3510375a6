import numpy as np
import pytest

from netpricing import conjugate, follower
from netpricing.errors import ValidationError
from netpricing.feasibility import (
    action_set_interior,
    classify_w,
    composition_usage,
    enumerate_all,
    enumerate_bf_paths,
    is_bf_composition,
    sbf_test,
)


def by_pattern(records):
    return {r.pattern: r for r in records}


class TestEnumeratePaths:
    def test_series_instance_drops_dominated_pattern(self, two_tolls_one_commodity):
        records = enumerate_bf_paths(two_tolls_one_commodity, 0)
        assert {(r.base_cost, r.pattern) for r in records} == {
            (5.0, (0, 0)), (4.0, (1, 0)), (2.0, (1, 1)),
        }

    def test_single_toll_has_two_routes_each(self, one_toll_three_commodities):
        for k, fallback in enumerate((10.0, 4.0, 3.0)):
            records = enumerate_bf_paths(one_toll_three_commodities, k)
            assert {(r.base_cost, r.pattern) for r in records} == {
                (fallback, (0,)), (0.0, (1,)),
            }

    def test_worthless_tolled_route_keeps_only_fallback(self):
        from netpricing import build_instance
        inst = build_instance(4, [
            (0, 1, 3, False), (0, 2, 2, False), (2, 3, 2, True), (3, 1, 0, False),
        ], [(0, 1, 1.0)])
        records = enumerate_bf_paths(inst, 0)
        assert [(r.base_cost, r.pattern) for r in records] == [(3.0, (0,))]

    def test_every_record_is_minimal_for_its_usage(self, grid_corpus):
        for inst in grid_corpus[:6]:
            for k in range(len(inst.commodities)):
                for rec in enumerate_bf_paths(inst, k):
                    g, _ = conjugate.conjugate_g(inst, rec.usage(), commodities=[k])
                    assert rec.base_cost == pytest.approx(g, abs=1e-6)
                    assert rec.base_cost == pytest.approx(
                        sum(inst.arcs[a].cost for a in rec.arcs))


class TestCompositions:
    def test_intersecting_supports_compose(self, two_tolls_two_commodities):
        recs = enumerate_all(two_tolls_two_commodities)
        p = by_pattern(recs[0])
        q = by_pattern(recs[1])
        assert is_bf_composition(two_tolls_two_commodities, [p[(1, 1)], q[(0, 1)]])
        assert not is_bf_composition(two_tolls_two_commodities, [p[(0, 1)], q[(1, 1)]])

    def test_all_tollfree_composes(self, two_tolls_two_commodities):
        recs = enumerate_all(two_tolls_two_commodities)
        free = [by_pattern(recs[k])[(0, 0)] for k in recs]
        assert is_bf_composition(two_tolls_two_commodities, free)

    def test_matches_pricing_feasibility(self, two_tolls_two_commodities, shared_segment_pair):
        """Composable exactly when some toll vector prices every path."""
        import itertools
        for inst in (two_tolls_two_commodities, shared_segment_pair):
            recs = enumerate_all(inst)
            for combo in itertools.product(*(recs[k] for k in sorted(recs))):
                reactions = [follower.reaction_from_path(inst, r.commodity, r.arcs)
                             for r in combo]
                priced = follower.price_for_paths(inst, reactions)
                assert (priced is not None) == is_bf_composition(inst, list(combo))


class TestSbfTest:
    def test_shared_segment_mixed_pair_is_weak(self, shared_segment_pair):
        recs = enumerate_all(shared_segment_pair)
        p = by_pattern(recs[0])
        q = by_pattern(recs[1])
        verdict = sbf_test(shared_segment_pair, [p[(1, 1)], q[(0, 0)]])
        assert verdict.classification == "weak"
        assert verdict.sbf_objective > 1e-9
        # certificate is the other decomposition of the same usage vector
        cert_usage = composition_usage(
            [follower.reaction_from_flow(shared_segment_pair, k, flow)
             for k, flow in enumerate(verdict.certificate)])
        # reaction_from_flow builds Reaction, reuse its usage via w
        assert verdict.certificate is not None

    def test_optimal_composition_is_strong(self, two_tolls_two_commodities):
        recs = enumerate_all(two_tolls_two_commodities)
        verdict = sbf_test(two_tolls_two_commodities, [
            by_pattern(recs[0])[(1, 1)], by_pattern(recs[1])[(0, 1)]])
        assert verdict.classification == "strong"
        assert verdict.sbf_objective <= 1e-9

    def test_costlier_composition_is_infeasible(self, two_tolls_two_commodities):
        recs = enumerate_all(two_tolls_two_commodities)
        verdict = sbf_test(two_tolls_two_commodities, [
            by_pattern(recs[0])[(0, 1)], by_pattern(recs[1])[(1, 1)]])
        assert verdict.classification == "infeasible-composition"
        assert verdict.sbf_objective > 1e-9


class TestClassify:
    def test_fractional_only_usage_is_weak(self, two_tolls_two_commodities):
        result = classify_w(two_tolls_two_commodities, [1, 1])
        assert result.classification == "weak"
        assert result.decompositions == ()

    def test_unique_decomposition_is_strong(self, two_tolls_two_commodities):
        result = classify_w(two_tolls_two_commodities, [1, 2])
        assert result.classification == "strong"
        assert len(result.decompositions) == 1
        assert [r.pattern for r in result.decompositions[0]] == [(1, 1), (0, 1)]

    def test_two_decompositions_are_weak(self, shared_segment_pair):
        result = classify_w(shared_segment_pair, [1, 1])
        assert result.classification == "weak"
        assert len(result.decompositions) >= 2

    def test_triple_overlap_weakness(self, triple_overlap):
        result = classify_w(triple_overlap, [1, 1])
        assert result.classification == "weak"
        assert len(result.decompositions) == 2

    def test_rejects_fractional_vector(self, two_tolls_two_commodities):
        with pytest.raises(ValidationError):
            classify_w(two_tolls_two_commodities, [0.5, 1])


class TestActionSetGeometry:
    def test_strong_usage_has_interior_tolls(self, two_tolls_two_commodities):
        result = classify_w(two_tolls_two_commodities, [1, 2])
        slack, t = action_set_interior(two_tolls_two_commodities, result.decompositions[0])
        assert slack > 1e-7
        sol = conjugate.action_prices(two_tolls_two_commodities, np.array([1.0, 2.0]))
        assert follower.follower_cost(two_tolls_two_commodities, t) == pytest.approx(
            float(t @ [1, 2]) + sol.g_value, abs=1e-6)

    def test_triple_overlap_point_has_no_interior(self, triple_overlap):
        result = classify_w(triple_overlap, [1, 1])
        slack, t = action_set_interior(triple_overlap, result.decompositions[0])
        assert slack == pytest.approx(0.0, abs=1e-7)
        assert tuple(t) == pytest.approx((2.0, 3.0), abs=1e-6)


def test_subadditivity_of_capped_base_cost(two_tolls_two_commodities):
    inst = two_tolls_two_commodities
    rng = np.random.default_rng(11)
    for _ in range(100):
        parts = rng.uniform(0, 1.5, size=(2, 2))
        total, _ = conjugate.conjugate_g(inst, parts.sum(axis=0))
        split = sum(conjugate.conjugate_g(inst, parts[k], commodities=[k])[0]
                    for k in range(2))
        assert total <= split + 1e-6
