"""Shared instance fixtures.

The five small graphs below exercise every structural situation the
solvers must handle: serial tolled arcs with bypasses, a single tolled
arc shared by several followers, two followers seeing the same tolled
pair in different topologies, a segment shared by two followers, and a
three-follower overlap whose degeneracy is invisible pairwise.
"""

import pytest

from netpricing import build_instance, generate_grid, GeneratorConfig


def make_two_tolls_one_commodity():
    """One follower, two tolled arcs in series, partial bypasses.

    Arcs: o-u, u-v (tolled), v-p (2), p-q (tolled), q-d, o-d (5),
    o-v (4), p-d (2).  Nodes o,u,v,p,q,d = 0..5.
    """
    return build_instance(6, [
        (0, 1, 0, False),
        (1, 2, 0, True),
        (2, 3, 2, False),
        (3, 4, 0, True),
        (4, 5, 0, False),
        (0, 5, 5, False),
        (0, 2, 4, False),
        (3, 5, 2, False),
    ], [(0, 5, 1.0)])


def make_one_toll_three_commodities():
    """A single tolled arc reachable by three followers with toll-free
    fallbacks costing 10, 4, and 3."""
    return build_instance(8, [
        (0, 1, 10, False),
        (2, 3, 4, False),
        (4, 5, 3, False),
        (0, 6, 0, False),
        (2, 6, 0, False),
        (4, 6, 0, False),
        (6, 7, 0, True),
        (7, 1, 0, False),
        (7, 3, 0, False),
        (7, 5, 0, False),
    ], [(0, 1, 1.0), (2, 3, 1.0), (4, 5, 1.0)])


def make_two_tolls_two_commodities():
    """Two followers sharing two tolled arcs: in series for the first
    follower, in parallel (plus a bridge) for the second.

    Nodes o1,o2,u,v,p,q,d1,d2 = 0..7.  Tolled: u-v, p-q.
    """
    return build_instance(8, [
        (2, 3, 0, True),
        (4, 5, 0, True),
        (3, 4, 3, False),
        (0, 2, 0, False),
        (5, 6, 0, False),
        (0, 6, 12, False),
        (0, 3, 5, False),
        (4, 6, 6, False),
        (1, 2, 0, False),
        (5, 7, 0, False),
        (1, 7, 11, False),
        (1, 4, 5, False),
        (3, 7, 6, False),
    ], [(0, 6, 1.0), (1, 7, 1.0)])


def make_shared_segment_pair():
    """Two followers forced through the same u..v stretch; selecting
    different sub-routes there is never simultaneously optimal.

    Nodes u,v,p,o1,d1,o2,d2 = 0..6.  Tolled: o1-u, u-v.
    """
    return build_instance(7, [
        (3, 0, 0, True),
        (0, 1, 0, True),
        (3, 4, 3, False),
        (0, 2, 2, False),
        (2, 1, 0, False),
        (1, 4, 0, False),
        (5, 0, 0, False),
        (1, 6, 0, False),
    ], [(3, 4, 1.0), (5, 6, 1.0)])


def make_triple_overlap():
    """Three followers; the middle one can use either tolled arc.  The
    usage vector (1,1) admits two path decompositions even though no two
    followers share a node pair, so the degeneracy needs all three.

    Nodes u,v,p,q,o1,d1,o2,d2,o3,d3 = 0..9.  Tolled: u-v (cost 1), p-q.
    """
    return build_instance(10, [
        (0, 1, 1, True),
        (2, 3, 0, True),
        (4, 0, 0, False),
        (1, 5, 0, False),
        (4, 5, 3, False),
        (6, 2, 0, False),
        (3, 7, 0, False),
        (6, 7, 3, False),
        (8, 0, 0, False),
        (1, 9, 0, False),
        (8, 2, 0, False),
        (3, 9, 0, False),
        (8, 9, 4, False),
    ], [(4, 5, 1.0), (6, 7, 1.0), (8, 9, 1.0)])


def make_corpus(count: int = 20):
    """Small random grids with few tolled arcs, for solver cross-checks."""
    specs = []
    for seed in range(count):
        if seed < count // 4:
            specs.append((3, 2, 3 / 24, seed))
        elif seed < count // 2:
            specs.append((3, 3, 2 / 24, seed))
        elif seed < 3 * count // 4:
            specs.append((4, 2, 3 / 48, seed))
        else:
            specs.append((4, 3, 2 / 48, seed))
    out = []
    for L, k_count, fraction, seed in specs:
        cfg = GeneratorConfig(tolled_fraction=fraction)
        out.append(generate_grid(L, k_count, seed, cfg))
    return out


@pytest.fixture(scope="session")
def two_tolls_one_commodity():
    return make_two_tolls_one_commodity()


@pytest.fixture(scope="session")
def one_toll_three_commodities():
    return make_one_toll_three_commodities()


@pytest.fixture(scope="session")
def two_tolls_two_commodities():
    return make_two_tolls_two_commodities()


@pytest.fixture(scope="session")
def shared_segment_pair():
    return make_shared_segment_pair()


@pytest.fixture(scope="session")
def triple_overlap():
    return make_triple_overlap()


@pytest.fixture(scope="session")
def grid_corpus():
    return make_corpus()
