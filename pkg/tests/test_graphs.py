import math
import random
from fractions import Fraction

import pytest

from mgpart.errors import GraphFormatError, ValidationError
from mgpart.graphs import (
    MetricGraph,
    build_standard,
    doubly_connected_pendants,
    eulerian_cover_number,
    eulerian_trail,
    format_graph,
    has_eulerian_path,
    is_doubly_connected,
    normalize,
    parse_graph,
    stats,
)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def test_parse_single_edge():
    g = parse_graph("vertex a\nvertex b\nedge e1 a b 1.0")
    assert g.vertices == ("a", "b")
    assert len(g.edges) == 1
    assert g.edges[0].length == 1.0
    assert g.total_length == 1.0


def test_parse_loop():
    g = parse_graph("vertex a\nedge e1 a a 2.0")
    assert g.edges[0].is_loop()
    assert g.total_length == 2.0


def test_parse_nonpositive_length_rejected():
    with pytest.raises(GraphFormatError):
        parse_graph("vertex a\nvertex b\nedge e1 a b -1")


def test_parse_unknown_vertex_rejected():
    with pytest.raises(GraphFormatError) as err:
        parse_graph("vertex a\nedge e1 a b 1")
    assert "unknown vertex" in str(err.value)


def test_parse_duplicate_edge_rejected():
    text = "vertex a\nvertex b\nedge e1 a b 1\nedge e1 b a 1"
    with pytest.raises(GraphFormatError) as err:
        parse_graph(text)
    assert err.value.line == 4


def test_parse_unknown_directive_rejected():
    with pytest.raises(GraphFormatError):
        parse_graph("metric a b 1")


def test_parse_fraction_lengths_kept_exact():
    g = parse_graph("vertex a\nvertex b\nvertex c\nedge e1 a b 1\nedge e2 b c 3/2")
    assert g.edges[0].exact == Fraction(1)
    assert g.edges[1].exact == Fraction(3, 2)
    assert g.total_length == 2.5


def test_parse_decimal_lengths_not_exact():
    g = parse_graph("vertex a\nvertex b\nedge e1 a b 1.4142135")
    assert g.edges[0].exact is None


def test_parse_comments_and_name():
    g = parse_graph("# header\ngraph demo\nvertex a\nedge e a a 1 # trailing\n")
    assert g.name == "demo"


def test_format_round_trip():
    g = build_standard("lasso", stick=Fraction(1, 3), loop=2)
    g2 = parse_graph(format_graph(g))
    assert [e.exact for e in g2.edges] == [e.exact for e in g.edges]
    assert g2.vertices == g.vertices


def test_dirichlet_mark_unknown_vertex():
    with pytest.raises(GraphFormatError):
        parse_graph("vertex a\nedge e a a 1\ndirichlet z")


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


def test_star_family(star3):
    assert len(star3.vertices) == 4
    assert len(star3.edges) == 3
    assert all(e.length == 1.0 for e in star3.edges)


def test_two_intervals_family():
    g = build_standard("two_intervals", a=2)
    assert len(g.components) == 2
    assert g.total_length == 3.0


def test_dumbbell_family(dumbbell):
    st = stats(dumbbell)
    assert len(dumbbell.vertices) == 2
    assert len(dumbbell.edges) == 3
    assert st.betti == 2


def test_windmill_family():
    g = build_standard("windmill", m=2, n=4, spoke=1, loop=0.1)
    st = stats(g)
    assert st.degree_one_count == 4
    assert st.pendant2_count == 2


def test_invalid_family_params():
    with pytest.raises(ValidationError):
        build_standard("star", m=0, total_length=1)
    with pytest.raises(ValidationError):
        build_standard("two_intervals", a=0)
    with pytest.raises(ValidationError):
        build_standard("interval", length=-2)


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


def test_lasso_stats():
    st = stats(build_standard("lasso", stick=1, loop=2))
    assert st.betti == 1
    assert st.girth == 2.0
    assert st.degree_one_count == 1


def test_eulerian_cover_numbers():
    assert stats(build_standard("star", m=4, total_length=4)).eulerian_cover_number == 2
    assert stats(build_standard("star", m=5, total_length=5)).eulerian_cover_number == 3


def test_dumbbell_has_eulerian_path(dumbbell):
    st = stats(dumbbell)
    assert st.has_eulerian_path
    assert st.eulerian_cover_number == 1


def test_girth_parallel_edges(six_edge_bands):
    # shortest cycle: two parallel unit edges
    assert stats(six_edge_bands).girth == 2.0


def test_girth_tree_is_infinite(star3):
    assert math.isinf(stats(star3).girth)


def test_stats_disconnected():
    g = build_standard("two_intervals", a=2)
    st = stats(g)
    assert st.num_components == 2
    assert st.betti == 0
    assert not st.has_eulerian_path


# ---------------------------------------------------------------------------
# connectivity structure
# ---------------------------------------------------------------------------


def test_loop_doubly_connected(loop):
    assert is_doubly_connected(loop)


def test_lasso_not_doubly_connected(lasso):
    assert not is_doubly_connected(lasso)


def test_figure_eight_doubly_connected(figure_eight):
    assert is_doubly_connected(figure_eight)
    assert doubly_connected_pendants(figure_eight) == []


def test_dumbbell_pendants(dumbbell):
    pendants = doubly_connected_pendants(dumbbell)
    assert len(pendants) == 2
    lengths = sorted(p.total_length for p in pendants)
    assert lengths == [1.0, 1.0]


def test_windmill_pendants():
    g = build_standard("windmill", m=2, n=4, spoke=1, loop=0.1)
    assert len(doubly_connected_pendants(g)) == 2


def test_pendants_disjoint(dumbbell):
    p1, p2 = doubly_connected_pendants(dumbbell)
    assert not (set(p1.vertices) & set(p2.vertices))


# ---------------------------------------------------------------------------
# Eulerian trails
# ---------------------------------------------------------------------------


def test_trail_covers_each_edge_once(dumbbell):
    trail = eulerian_trail(dumbbell)
    assert sorted(eid for eid, _ in trail) == sorted(e.id for e in dumbbell.edges)


def test_trail_is_connected_walk(dumbbell):
    trail = eulerian_trail(dumbbell)
    pos = None
    for eid, fwd in trail:
        e = dumbbell.edge_map[eid]
        u, v = (e.u, e.v) if fwd else (e.v, e.u)
        if pos is not None:
            assert u == pos
        pos = v


def test_no_trail_on_star4(star4):
    assert not has_eulerian_path(star4)
    with pytest.raises(ValidationError):
        eulerian_trail(star4)


def test_cover_number_one_iff_trail():
    for fam, kwargs in [
        ("loop", {"length": 1}),
        ("lasso", {"stick": 1, "loop": 1}),
        ("dumbbell", {"loop1": 1, "handle": 1, "loop2": 1}),
        ("star", {"m": 4, "total_length": 4}),
        ("star", {"m": 5, "total_length": 5}),
        ("interval", {"length": 1}),
    ]:
        g = build_standard(fam, **kwargs)
        assert (eulerian_cover_number(g) == 1) == has_eulerian_path(g)


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------


def test_normalize_path_to_interval():
    g = parse_graph("vertex a\nvertex b\nvertex c\nedge e1 a b 1\nedge e2 b c 3/2")
    n = normalize(g)
    assert len(n.edges) == 1
    assert n.edges[0].length == 2.5
    assert n.edges[0].exact == Fraction(5, 2)


def test_normalize_keeps_dirichlet_degree2():
    g = parse_graph(
        "vertex a\nvertex b\nvertex c\nedge e1 a b 1\nedge e2 b c 1\ndirichlet b"
    )
    n = normalize(g)
    assert len(n.edges) == 2
    assert "b" in n.dirichlet


def test_normalize_cycle_keeps_basepoint():
    g = parse_graph(
        "vertex a\nvertex b\nvertex c\n"
        "edge e1 a b 1\nedge e2 b c 1\nedge e3 c a 1"
    )
    n = normalize(g)
    assert len(n.edges) == 1
    assert n.edges[0].is_loop()
    assert n.edges[0].length == 3.0


def test_normalize_idempotent(dumbbell):
    g = parse_graph(
        "vertex a\nvertex b\nvertex c\nvertex d\n"
        "edge e1 a b 1\nedge e2 b c 1\nedge e3 c d 1\nedge e4 d a 1\nedge e5 a c 1"
    )
    once = normalize(g)
    twice = normalize(once)
    assert [e.length for e in twice.edges] == [e.length for e in once.edges]
    assert twice.vertices == once.vertices


def _insert_dummy(g: MetricGraph, edge_id: str, rng) -> MetricGraph:
    rows = []
    for e in g.edges:
        if e.id == edge_id:
            t = rng.uniform(0.2, 0.8)
            rows.append((e.id + "_a", e.u, f"dummy_{e.id}", e.length * t))
            rows.append((e.id + "_b", f"dummy_{e.id}", e.v, e.length * (1 - t)))
        else:
            rows.append((e.id, e.u, e.v, e.length))
    return MetricGraph.from_edges(rows, dirichlet=g.dirichlet, name=g.name)


def test_normalization_invariance_of_stats():
    rng = random.Random(7)
    for fam, kwargs in [
        ("lasso", {"stick": 1, "loop": 1}),
        ("dumbbell", {"loop1": 1, "handle": 1, "loop2": 1}),
        ("star", {"m": 4, "total_length": 4}),
    ]:
        g = build_standard(fam, **kwargs)
        g_dummy = _insert_dummy(g, g.edges[0].id, rng)
        a, b = stats(g), stats(normalize(g_dummy))
        assert a.betti == b.betti
        assert a.total_length == pytest.approx(b.total_length, rel=1e-12)
        assert a.girth == pytest.approx(b.girth, rel=1e-12)
        assert a.degree_one_count == b.degree_one_count
        assert a.pendant2_count == b.pendant2_count
        assert a.has_eulerian_path == b.has_eulerian_path
        assert a.eulerian_cover_number == b.eulerian_cover_number


# ---------------------------------------------------------------------------
# randomized structural properties
# ---------------------------------------------------------------------------


def _random_connected_graph(rng: random.Random) -> MetricGraph:
    n = rng.randint(2, 7)
    rows = []
    # spanning tree first, then extra edges (loops and parallels allowed)
    for i in range(1, n):
        rows.append((f"t{i}", f"v{rng.randrange(i)}", f"v{i}", rng.uniform(0.2, 2.0)))
    extras = rng.randint(0, 4)
    for j in range(extras):
        u = rng.randrange(n)
        v = rng.randrange(n)
        rows.append((f"x{j}", f"v{u}", f"v{v}", rng.uniform(0.2, 2.0)))
    return MetricGraph.from_edges(rows)


def test_random_graphs_betti_and_pendants():
    rng = random.Random(20240)
    for _ in range(1000):
        g = _random_connected_graph(rng)
        st = stats(g)
        assert st.betti == len(g.edges) - len(g.vertices) + st.num_components
        assert st.pendant2_count <= st.betti
        # dummy insertion never changes the Betti count
        g2 = _insert_dummy(g, g.edges[0].id, rng)
        assert stats(g2).betti == st.betti


def test_scaled_graph():
    g = build_standard("lasso", stick=1, loop=2).scaled(3)
    st = stats(g)
    assert st.total_length == pytest.approx(9.0)
    assert st.girth == pytest.approx(6.0)
