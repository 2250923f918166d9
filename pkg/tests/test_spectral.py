import math
import random

import pytest

from mgpart.errors import ValidationError
from mgpart.graphs import MetricGraph, build_standard, parse_graph
from mgpart.spectral import (
    eigenvalues,
    fd_oracle_eigenvalues,
    lambda1,
    mu2,
    secular_smallest_singular_value,
    star_eigenvalue_closed_form,
)

PI2 = math.pi**2


# ---------------------------------------------------------------------------
# closed forms on classical graphs
# ---------------------------------------------------------------------------


def test_interval_natural_spectrum(interval):
    res = eigenvalues(interval, count=4)
    assert res.eigenvalues == pytest.approx((0.0, PI2, 4 * PI2, 9 * PI2), abs=1e-8)


def test_interval_mixed_dirichlet(interval):
    res = eigenvalues(interval, {"a"}, count=2)
    assert res.eigenvalues[0] == pytest.approx(PI2 / 4, abs=1e-9)
    assert res.eigenvalues[1] == pytest.approx(9 * PI2 / 4, abs=1e-8)


def test_interval_both_dirichlet(interval):
    assert lambda1(interval, {"a", "b"}) == pytest.approx(PI2, rel=1e-12)


def test_loop_spectrum(loop):
    res = eigenvalues(loop, count=5)
    assert res.eigenvalues == pytest.approx(
        (0.0, 4 * PI2, 4 * PI2, 16 * PI2, 16 * PI2), rel=1e-9
    )
    assert mu2(loop) == pytest.approx(4 * PI2, rel=1e-12)


def test_star3_mu2_multiplicity_two(star3):
    res = eigenvalues(star3, count=4)
    assert res.eigenvalues[0] == 0.0
    assert res.eigenvalues[1] == pytest.approx(PI2 / 4, abs=1e-9)
    assert res.eigenvalues[2] == pytest.approx(PI2 / 4, abs=1e-9)
    assert res.eigenvalues[3] == pytest.approx(PI2, abs=1e-8)


def test_star_closed_form_values():
    assert star_eigenvalue_closed_form(3, 3, 7) == pytest.approx(4 * PI2)
    assert star_eigenvalue_closed_form(3, 3, 8) == pytest.approx(6.25 * PI2)
    assert star_eigenvalue_closed_form(4, 4, 1) == 0.0


def test_star_closed_form_matches_secular(star3):
    res = eigenvalues(star3, count=7)
    for k in range(1, 8):
        assert res.eigenvalues[k - 1] == pytest.approx(
            star_eigenvalue_closed_form(3, 3, k), rel=1e-8, abs=1e-8
        )


def test_two_pumpkin_mu2():
    g = build_standard("pumpkin_chain", bundles=[(2, 0.5)])
    L = g.total_length
    assert mu2(g, method="secular") == pytest.approx(4 * PI2 / L**2, rel=1e-10)


def test_two_regular_pumpkin_chain_equality():
    g = build_standard("pumpkin_chain", bundles=[(2, 0.5), (2, 0.25), (2, 0.4)])
    L = g.total_length
    assert mu2(g, method="secular") == pytest.approx(4 * PI2 / L**2, rel=1e-9)


def test_caterpillar_lambda1_equality():
    g = build_standard("caterpillar", bundles=[0.5, 0.25], dirichlet_end="left")
    L = g.total_length
    assert lambda1(g, g.dirichlet, method="secular") == pytest.approx(PI2 / L**2, rel=1e-9)


def test_interval_with_interior_dirichlet_point():
    g = parse_graph(
        "vertex a\nvertex b\nvertex c\nedge e1 a b 0.3\nedge e2 b c 0.7\ndirichlet b"
    )
    # decouples at b: lowest mixed eigenvalue of the longer side
    assert lambda1(g, {"b"}) == pytest.approx(PI2 / (4 * 0.7**2), rel=1e-10)


# ---------------------------------------------------------------------------
# rose closed forms against the secular route
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "stick,loop_len",
    [(1.0, 1.0), (0.3, 1.7), (2.0, 0.5)],
)
def test_tadpole_mu2_dual_route(stick, loop_len):
    g = build_standard("lasso", stick=stick, loop=loop_len)
    assert mu2(g) == pytest.approx(mu2(g, method="secular"), rel=1e-9)


def test_figure_eight_mu2_dual_route(figure_eight):
    assert mu2(figure_eight) == pytest.approx(PI2, rel=1e-9)
    assert mu2(figure_eight, method="secular") == pytest.approx(PI2, rel=1e-8)


def test_unequal_flower_dual_route():
    g = MetricGraph.from_edges([("p1", "v", "v", 1), ("p2", "v", "v", 1.618)])
    assert mu2(g) == pytest.approx(mu2(g, method="secular"), rel=1e-9)


def test_windmill_lambda1_dual_route():
    g = build_standard("windmill", m=2, n=1, spoke=1, loop=0.5)
    marks = {"u0"}
    assert lambda1(g, marks) == pytest.approx(lambda1(g, marks, method="secular"), rel=1e-9)


def test_random_stars_mu2_dual_route():
    rng = random.Random(11)
    for _ in range(8):
        m = rng.randint(3, 5)
        rows = [(f"e{i}", "c", f"v{i}", rng.uniform(0.3, 2.0)) for i in range(m)]
        g = MetricGraph.from_edges(rows)
        assert mu2(g) == pytest.approx(mu2(g, method="secular"), rel=1e-8)


def test_random_star_lambda1_dual_route():
    rng = random.Random(12)
    for _ in range(8):
        m = rng.randint(3, 5)
        rows = [(f"e{i}", "c", f"v{i}", rng.uniform(0.3, 2.0)) for i in range(m)]
        g = MetricGraph.from_edges(rows)
        marks = {f"v{i}" for i in range(m) if rng.random() < 0.6} or {"v0"}
        assert lambda1(g, marks) == pytest.approx(
            lambda1(g, marks, method="secular"), rel=1e-8
        )


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------


def test_fd_oracle_interval(interval):
    res = fd_oracle_eigenvalues(interval, count=5, n_per_unit=2000)
    exact = [0.0, PI2, 4 * PI2, 9 * PI2, 16 * PI2]
    assert res.eigenvalues[1] == pytest.approx(PI2, abs=1e-5)
    for got, want in zip(res.eigenvalues[1:], exact[1:]):
        assert abs(got - want) / want < 10 / 2000**2


@pytest.mark.parametrize(
    "builder",
    [
        lambda: build_standard("interval", length=1),
        lambda: build_standard("loop", length=1),
        lambda: build_standard("star", m=3, total_length=3),
        lambda: build_standard("lasso", stick=1, loop=1),
        lambda: build_standard("pumpkin_chain", bundles=[(2, 0.5)]),
    ],
)
def test_secular_vs_fd_oracle(builder):
    g = builder()
    npu = 2000
    sec = eigenvalues(g, count=5).eigenvalues
    fd = fd_oracle_eigenvalues(g, count=5, n_per_unit=npu).eigenvalues
    for a, b in zip(sec, fd):
        if b == 0.0 or a == 0.0:
            assert abs(a - b) < 1e-8
        else:
            assert abs(a - b) / abs(b) < 10 / npu**2


def test_fd_oracle_star_all_leaves_dirichlet(star3):
    marks = frozenset({"v0", "v1", "v2"})
    sec = eigenvalues(star3, marks, count=1).eigenvalues[0]
    fd = fd_oracle_eigenvalues(star3, marks, count=1, n_per_unit=2000).eigenvalues[0]
    assert abs(sec - fd) / fd < 1e-4
    assert sec == pytest.approx(PI2 / 4, rel=1e-9)


def test_fd_oracle_requires_dense_grid(interval):
    with pytest.raises(ValidationError):
        fd_oracle_eigenvalues(interval, count=2, n_per_unit=50)


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------


def test_isoperimetric_floor_random_graphs():
    rng = random.Random(4)
    for _ in range(12):
        n = rng.randint(2, 5)
        rows = [(f"t{i}", f"v{rng.randrange(i)}", f"v{i}", rng.uniform(0.3, 1.5)) for i in range(1, n)]
        for j in range(rng.randint(0, 2)):
            rows.append((f"x{j}", f"v{rng.randrange(n)}", f"v{rng.randrange(n)}", rng.uniform(0.3, 1.5)))
        g = MetricGraph.from_edges(rows)
        L = g.total_length
        assert mu2(g) >= PI2 / L**2 * (1 - 1e-9)
        marks = {g.vertices[0]}
        assert lambda1(g, marks) >= PI2 / (4 * L**2) * (1 - 1e-9)


def test_dirichlet_monotonicity_under_marking(lasso):
    lam_one = lambda1(lasso, {"w"})
    lam_two = lambda1(lasso, {"w", "v"})
    assert lam_two >= lam_one - 1e-12


def test_eigenvalue_residual_certificate(star3):
    res = eigenvalues(star3, count=5)
    for lam in res.eigenvalues:
        if lam == 0.0:
            continue
        smin = secular_smallest_singular_value(star3, frozenset(), math.sqrt(lam))
        assert smin < 1e-6


def test_scaling_covariance():
    g = build_standard("lasso", stick=1, loop=1)
    t = 2.5
    gs = g.scaled(t)
    a = eigenvalues(g, count=4).eigenvalues
    b = eigenvalues(gs, count=4).eigenvalues
    for x, y in zip(a, b):
        assert y == pytest.approx(x / t**2, rel=1e-8, abs=1e-10)


def test_eigenvalues_rejects_disconnected():
    g = build_standard("two_intervals", a=1)
    with pytest.raises(ValidationError):
        eigenvalues(g, count=2)


def test_lambda1_needs_marks(interval):
    with pytest.raises(ValidationError):
        lambda1(interval, set())
