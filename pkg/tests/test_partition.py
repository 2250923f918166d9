import math
import random

import pytest

from mgpart.errors import ComputationError, ValidationError
from mgpart.graphs import MetricGraph, build_standard, parse_graph
from mgpart.partition import (
    CONNECTED_ONLY,
    INVALID,
    RIGID,
    CutConfig,
    Partition,
    apply_cuts,
    classify,
    energy,
    neighbours,
    p_mean,
    parse_cut_config,
    serialize_cut_config,
)

PI2 = math.pi**2


def paper_lasso():
    """Lasso with an explicit far vertex z on the cycle (two parallel arcs)."""
    return parse_graph(
        "vertex w\nvertex v\nvertex z\n"
        "edge e1 w v 1\nedge e2 v z 1\nedge e3 v z 1"
    )


# ---------------------------------------------------------------------------
# apply_cuts
# ---------------------------------------------------------------------------


def test_loop_two_arcs(loop):
    p = apply_cuts(loop, CutConfig.make([("e0", 0.25), ("e0", 0.75)]))
    assert p.k == 2
    assert sorted(p.cluster_lengths()) == pytest.approx([0.5, 0.5])
    assert p.classification == RIGID


def test_lasso_split_interval_plus_loop():
    g = paper_lasso()
    config = CutConfig.make([], {"v": [{("e1", 1)}, {("e2", 0), ("e3", 0)}]})
    p = apply_cuts(g, config)
    assert p.k == 2
    assert p.classification == RIGID
    lengths = sorted(p.cluster_lengths())
    assert lengths == pytest.approx([1.0, 2.0])
    # the loop cluster is metrically a circle
    rep = energy(p, "natural", math.inf)
    vals = sorted(lam for _, lam, _ in rep.per_cluster)
    assert vals[0] == pytest.approx(PI2, rel=1e-9)  # interval length 1
    assert vals[1] == pytest.approx(PI2, rel=1e-9)  # circle length 2


def test_lasso_extra_cut_through_z_not_rigid():
    g = paper_lasso()
    config = CutConfig.make(
        [],
        {
            "v": [{("e1", 1)}, {("e2", 0), ("e3", 0)}],
            "z": [{("e2", 1)}, {("e3", 1)}],
        },
    )
    p = apply_cuts(g, config)
    assert p.k == 2
    assert p.classification == CONNECTED_ONLY


def test_interior_cut_creates_two_degree_one_vertices(interval):
    p = apply_cuts(interval, CutConfig.make([("e0", 0.5)]))
    assert p.k == 2
    for cluster, boundary in zip(p.clusters, p.boundaries):
        assert len(boundary) == 1
        (b,) = boundary
        assert cluster.degree(b) == 1


def test_supports_partition_each_edge(lasso):
    p = apply_cuts(lasso, CutConfig.make([("stick", 0.4), ("loop", 0.3), ("loop", 0.9)]))
    assert sum(p.cluster_lengths()) == pytest.approx(lasso.total_length, rel=1e-12)
    assert classify(p) != INVALID


def test_invalid_coordinate_rejected(interval):
    with pytest.raises(ValidationError):
        apply_cuts(interval, CutConfig.make([("e0", 0.0)]))
    with pytest.raises(ValidationError):
        apply_cuts(interval, CutConfig.make([("e0", 1.2)]))


def test_inconsistent_split_rejected(lasso):
    with pytest.raises(ValidationError):
        apply_cuts(lasso, CutConfig.make([], {"v": [{("stick", 1)}]}))  # missing stubs


# ---------------------------------------------------------------------------
# classification corner cases
# ---------------------------------------------------------------------------


def test_loop_single_cut_is_connected_only(loop):
    p = apply_cuts(loop, CutConfig.make([("e0", 0.5)]))
    assert p.k == 1
    assert p.classification == CONNECTED_ONLY


def test_no_cut_single_cluster_rigid(lasso):
    p = apply_cuts(lasso, CutConfig.make())
    assert p.k == 1
    assert p.classification == RIGID


def test_manual_disconnected_cluster_invalid(interval):
    base = apply_cuts(interval, CutConfig.make([("e0", 0.5)]))
    merged = MetricGraph(
        base.clusters[0].vertices + base.clusters[1].vertices,
        base.clusters[0].edges + base.clusters[1].edges,
        base.clusters[0].dirichlet | base.clusters[1].dirichlet,
    )
    fake = Partition(
        graph=interval,
        cut_config=base.cut_config,
        clusters=(merged,),
        boundaries=(base.boundaries[0] | base.boundaries[1],),
        supports=(base.supports[0] + base.supports[1],),
        classification=RIGID,
    )
    assert classify(fake) == INVALID


def test_nonexhaustive_supports_invalid(interval):
    base = apply_cuts(interval, CutConfig.make([("e0", 0.5)]))
    fake = Partition(
        graph=interval,
        cut_config=base.cut_config,
        clusters=(base.clusters[0],),
        boundaries=(base.boundaries[0],),
        supports=(base.supports[0],),
        classification=RIGID,
    )
    assert classify(fake) == INVALID


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------


def test_interval_three_piece_dirichlet(interval):
    p = apply_cuts(interval, CutConfig.make([("e0", 0.25), ("e0", 0.75)]))
    rep = energy(p, "dirichlet", math.inf)
    assert rep.energy == pytest.approx(4 * PI2, rel=1e-10)
    assert rep.largest_cluster_length == pytest.approx(0.5)


def test_star_per_edge_clusters_natural(star3):
    config = CutConfig.make(
        [], {"c": [{("e0", 0)}, {("e1", 0)}, {("e2", 0)}]}
    )
    p = apply_cuts(star3, config)
    assert p.k == 3
    rep = energy(p, "natural", math.inf)
    assert rep.energy == pytest.approx(PI2, rel=1e-12)


def test_power_mean_monotone_in_p(star3):
    config = CutConfig.make([("e0", 0.5)], {"c": [{("e0", 0)}, {("e1", 0)}, {("e2", 0)}]})
    p = apply_cuts(star3, config)
    prev = None
    for q in (1, 2, 4, 16, math.inf):
        val = energy(p, "natural", q).energy
        if prev is not None:
            assert val >= prev - 1e-12
        prev = val


def test_dirichlet_needs_boundary(interval):
    p = apply_cuts(interval, CutConfig.make())
    with pytest.raises(ValidationError):
        energy(p, "dirichlet", math.inf)


def test_energy_isoperimetric_tripwire(loop):
    p = apply_cuts(loop, CutConfig.make([("e0", 0.25), ("e0", 0.75)]))
    rep = energy(p, "natural", math.inf)
    for _, lam, ell in rep.per_cluster:
        assert lam >= PI2 / ell**2 * (1 - 1e-9)
    rep = energy(p, "dirichlet", math.inf)
    for _, lam, ell in rep.per_cluster:
        assert lam >= PI2 / (4 * ell**2) * (1 - 1e-9)


def test_p_mean_values():
    assert p_mean([1.0, 4.0], math.inf) == 4.0
    assert p_mean([1.0, 4.0], 1) == 2.5
    assert p_mean([3.0], 2) == pytest.approx(3.0)
    with pytest.raises(ValidationError):
        p_mean([1.0], 0.5)


# ---------------------------------------------------------------------------
# neighbours
# ---------------------------------------------------------------------------


def test_path_adjacency(interval):
    p = apply_cuts(interval, CutConfig.make([("e0", 0.3), ("e0", 0.6)]))
    adj = neighbours(p)
    assert adj[0] == (1,)
    assert adj[1] == (0, 2)
    assert adj[2] == (1,)


def test_loop_arcs_mutually_adjacent(loop):
    p = apply_cuts(loop, CutConfig.make([("e0", 0.25), ("e0", 0.75)]))
    adj = neighbours(p)
    assert adj[0] == (1,)
    assert adj[1] == (0,)


def test_lasso_split_adjacent_at_v():
    g = paper_lasso()
    p = apply_cuts(g, CutConfig.make([], {"v": [{("e1", 1)}, {("e2", 0), ("e3", 0)}]}))
    adj = neighbours(p)
    assert adj[0] == (1,)
    assert adj[1] == (0,)


# ---------------------------------------------------------------------------
# serialization round trip
# ---------------------------------------------------------------------------


def test_cut_config_round_trip(lasso):
    config = CutConfig.make(
        [("stick", 1 / 3), ("loop", 0.123456789012345)],
        {"v": [{("stick", 1)}, {("loop", 0), ("loop", 1)}]},
    )
    text = serialize_cut_config(config)
    back = parse_cut_config(text)
    assert back == config
    p1 = apply_cuts(lasso, config)
    p2 = apply_cuts(lasso, back)
    assert p1.supports == p2.supports


def test_round_trip_random_configs():
    rng = random.Random(3)
    g = build_standard("dumbbell", loop1=1, handle=1, loop2=1)
    for _ in range(25):
        cuts = []
        for e in g.edges:
            for _ in range(rng.randint(0, 2)):
                cuts.append((e.id, rng.uniform(0.05, 0.95)))
        dedup = {}
        for eid, t in cuts:
            dedup[(eid, t)] = None
        config = CutConfig.make(list(dedup))
        p1 = apply_cuts(g, config)
        p2 = apply_cuts(g, parse_cut_config(serialize_cut_config(config)))
        assert p1.supports == p2.supports
        assert p1.classification == p2.classification


def test_cluster_lengths_sum_random(star4):
    rng = random.Random(9)
    for _ in range(50):
        cuts = []
        for e in star4.edges:
            ts = sorted(rng.uniform(0.05, 0.95) for _ in range(rng.randint(0, 3)))
            cuts.extend((e.id, t) for t in ts)
        p = apply_cuts(star4, CutConfig.make(cuts))
        assert sum(p.cluster_lengths()) == pytest.approx(star4.total_length, rel=1e-12)


def test_rigid_implies_connected_label():
    # every rigid partition is in particular an admissible connected one
    g = paper_lasso()
    p = apply_cuts(g, CutConfig.make([], {"v": [{("e1", 1)}, {("e2", 0), ("e3", 0)}]}))
    assert p.classification in (RIGID, CONNECTED_ONLY)
    assert classify(p) == RIGID
