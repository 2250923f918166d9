import math

import pytest

from mgpart.graphs import MetricGraph, build_standard

PI2 = math.pi**2


@pytest.fixture
def interval():
    return build_standard("interval", length=1)


@pytest.fixture
def loop():
    return build_standard("loop", length=1)


@pytest.fixture
def star3():
    return build_standard("star", m=3, total_length=3)


@pytest.fixture
def star4():
    return build_standard("star", m=4, total_length=4)


@pytest.fixture
def lasso():
    return build_standard("lasso", stick=1, loop=1)


@pytest.fixture
def dumbbell():
    return build_standard("dumbbell", loop1=1, handle=1, loop2=1)


def make_six_edge_bands():
    """Two vertices joined to two others by double bands plus one single
    edge on each side: 4 vertices of degree 3, six unit edges, total
    length 6.  Admits a two-partition into two equal three-edge paths."""
    return MetricGraph.from_edges(
        [
            ("top", "a", "b", 1),
            ("bottom", "c", "d", 1),
            ("left1", "a", "c", 1),
            ("left2", "a", "c", 1),
            ("right1", "b", "d", 1),
            ("right2", "b", "d", 1),
        ],
        name="six_edge_bands",
    )


@pytest.fixture
def six_edge_bands():
    return make_six_edge_bands()


@pytest.fixture
def figure_eight():
    return MetricGraph.from_edges(
        [("p1", "v", "v", 1), ("p2", "v", "v", 1)], name="figure_eight"
    )
