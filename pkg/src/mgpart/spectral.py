"""Laplacian eigenvalues on compact metric graphs.

Natural (continuity + Kirchhoff) conditions everywhere except an optional
set of Dirichlet vertices.  Three routes are provided:

* a secular-determinant solver (``eigenvalues``): per edge the solution
  basis {cos kx, sin kx} is matched at the vertices; eigenvalues are the k
  making the 2|E| x 2|E| matching matrix singular, located by scanning its
  smallest singular value;
* closed forms for intervals, cycles and metric stars, dispatched
  automatically by :func:`mu2` / :func:`lambda1`;
* an independent finite-difference oracle for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ComputationError, ValidationError
from .graphs import MetricGraph, normalize

__all__ = [
    "BoundaryConditions",
    "SpectralResult",
    "eigenvalues",
    "mu2",
    "lambda1",
    "star_eigenvalue_closed_form",
    "fd_oracle_eigenvalues",
    "secular_smallest_singular_value",
]

DIP_THRESHOLD = 1e-6  # refined singular-value level accepted as an eigenvalue
MULTIPLICITY_THRESHOLD = 1e-8  # singular values below this count as null directions
DEFAULT_TOL_EIG = 1e-9  # guaranteed absolute accuracy in k = sqrt(lambda)


@dataclass(frozen=True)
class BoundaryConditions:
    """Dirichlet marks; every unmarked vertex is natural."""

    dirichlet_set: frozenset[str] = frozenset()

    @staticmethod
    def natural() -> "BoundaryConditions":
        return BoundaryConditions(frozenset())

    @staticmethod
    def dirichlet(vertices) -> "BoundaryConditions":
        return BoundaryConditions(frozenset(vertices))


@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: tuple[float, ...]
    method: str
    tolerance_used: float


# ---------------------------------------------------------------------------
# Secular matrix
# ---------------------------------------------------------------------------


class _SecularSystem:
    """Precomputed assembly plan for the vertex-matching matrix M(k).

    Unknowns are (A_e, B_e) per edge with u_e(x) = A cos(kx) + B sin(kx).
    Stub values/derivatives at x = 0 and x = l_e combine into continuity,
    Kirchhoff and Dirichlet rows; derivative rows are divided by k so the
    matrix stays O(1).  At k = 0 the basis degenerates to {1, x}.
    """

    def __init__(self, g: MetricGraph, dirichlet: frozenset[str]):
        self.g = g
        self.lengths = np.array([e.length for e in g.edges])
        self.n = 2 * len(g.edges)
        eidx = {e.id: i for i, e in enumerate(g.edges)}
        # Row plan entries: (row, col, term) with term in
        # {"one_A", "one_B", "cos", "sin", "sin_A", "neg_cos_B"} tagged with
        # the edge index; signed for continuity differences.
        plan: list[tuple[int, int, str, int, float]] = []
        row = 0
        for v in g.vertices:
            stubs = g.stubs(v)
            if v in dirichlet:
                for eid, end in stubs:
                    i = eidx[eid]
                    plan.extend(self._value_terms(row, i, end, 1.0))
                    row += 1
            else:
                if len(stubs) >= 2:
                    e0, end0 = stubs[0]
                    for eid, end in stubs[1:]:
                        plan.extend(self._value_terms(row, eidx[eid], end, 1.0))
                        plan.extend(self._value_terms(row, eidx[e0], end0, -1.0))
                        row += 1
                if stubs:
                    for eid, end in stubs:
                        plan.extend(self._deriv_terms(row, eidx[eid], end, 1.0))
                    row += 1
        self.rows = row
        self.plan = plan

    @staticmethod
    def _value_terms(row, i, end, sign):
        if end == 0:
            return [(row, 2 * i, "one", i, sign)]
        return [(row, 2 * i, "vcos", i, sign), (row, 2 * i + 1, "vsin", i, sign)]

    @staticmethod
    def _deriv_terms(row, i, end, sign):
        # outgoing derivative divided by k
        if end == 0:
            return [(row, 2 * i + 1, "one", i, sign)]
        return [(row, 2 * i, "dsin", i, sign), (row, 2 * i + 1, "dnegcos", i, sign)]

    def matrix(self, k: float) -> np.ndarray:
        m = np.zeros((self.rows, self.n))
        if k == 0.0:
            # basis {1, x}: value(0)=A, value(l)=A+B l, deriv_out(0)=B,
            # deriv_out(l)=-B.
            ones = np.ones_like(self.lengths)
            terms = {
                "vcos": ones,
                "vsin": self.lengths,
                "dsin": np.zeros_like(self.lengths),
                "dnegcos": -ones,
            }
        else:
            kl = k * self.lengths
            cos_v = np.cos(kl)
            sin_v = np.sin(kl)
            terms = {"vcos": cos_v, "vsin": sin_v, "dsin": sin_v, "dnegcos": -cos_v}
        for row, col, term, i, sign in self.plan:
            if term == "one":
                m[row, col] += sign
            else:
                m[row, col] += sign * terms[term][i]
        return m

    def set_lengths(self, lengths) -> None:
        """Swap in new edge lengths (same combinatorics); lets one assembly
        plan serve a whole family of geometries."""
        self.lengths = np.asarray(lengths, dtype=float)

    def lipschitz_bound(self) -> float:
        """Upper bound on |d smin / dk|: entries differentiate to at most
        l_max in magnitude, row normalization (with its norms floored at 1)
        at most doubles that, and smin is 1-Lipschitz in the Frobenius
        norm."""
        lmax = float(self.lengths.max())
        return 2.0 * lmax * math.sqrt(len(self.plan)) + 1e-9

    def singular_values(self, k: float) -> np.ndarray:
        m = self.matrix(k)
        # floor the row norms at 1: a row may vanish identically at an
        # eigenvalue (a cycle's continuity row at k = 2 pi j / c), and
        # dividing by its vanishing norm would erase the dip
        norms = np.maximum(np.linalg.norm(m, axis=1), 1.0)
        return np.linalg.svd(m / norms[:, None], compute_uv=False)

    def smin(self, k: float) -> float:
        return float(self.singular_values(k)[-1])

    def nullity(self, k: float) -> int:
        return int(np.sum(self.singular_values(k) < MULTIPLICITY_THRESHOLD))


def secular_smallest_singular_value(g: MetricGraph, dirichlet, k: float) -> float:
    """Residual certificate: smallest singular value of the row-normalized
    matching matrix at wavenumber k."""
    return _SecularSystem(g, frozenset(dirichlet)).smin(k)


def _golden_refine(f, a: float, b: float, abs_tol: float) -> float:
    """Golden-section minimizer of a unimodal dip on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > abs_tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


def eigenvalues(
    g: MetricGraph,
    bc: BoundaryConditions | frozenset | set | tuple = BoundaryConditions.natural(),
    count: int = 6,
    tol_eig: float = DEFAULT_TOL_EIG,
    k_ceiling: float | None = None,
) -> SpectralResult:
    """Lowest ``count`` eigenvalues (with multiplicity) by secular scan.

    The smallest singular value of M(k) is sampled on a grid of step
    pi / (8 (L/l_min) max(1, count)); every local dip is refined by
    golden-section and accepted when the refined value drops below 1e-6.
    Multiplicity is the number of singular values below 1e-8 there.
    """
    dirichlet = _coerce_dirichlet(bc)
    if not g.is_connected():
        raise ValidationError("eigenvalues requires a connected graph")
    if count < 1:
        raise ValidationError("count must be >= 1")
    unknown = dirichlet - set(g.vertices)
    if unknown:
        raise ValidationError(f"dirichlet marks on unknown vertices {sorted(unknown)}")

    sys_ = _SecularSystem(g, dirichlet)
    total = g.total_length
    lmin = min(e.length for e in g.edges)
    step = math.pi / (8.0 * (total / lmin) * max(1, count))
    step = min(step, math.pi / (16.0 * total))  # never skip past the first root
    # No nonzero eigenvalue has k below pi/(2L) (isoperimetric inequality),
    # so the scan may start above the k -> 0 basis degeneration, where
    # circulation vectors drive the smallest singular value to zero on any
    # graph with a cycle.
    k_floor = 0.8 * math.pi / (2.0 * total)
    if k_ceiling is None:
        k_ceiling = (count + 2 * len(g.edges) + 4) * 2.0 * math.pi / total + 20.0 * step
    if (k_ceiling - k_floor) / step > 5_000_000:
        raise ComputationError(
            "secular scan would need too many steps; the edge-length ratio "
            f"L/ell_min = {total / lmin:.3g} is too degenerate"
        )

    found: list[tuple[float, int]] = []
    mult0 = sys_.nullity(0.0)
    total_mult = mult0

    prev_k, prev_s = k_floor, sys_.smin(k_floor)
    cur_k = k_floor + step
    cur_s = sys_.smin(cur_k)
    j = 2
    while total_mult < count:
        next_k = k_floor + j * step
        if next_k > k_ceiling:
            raise ComputationError(
                f"scan ceiling {k_ceiling:.3g} reached with only {total_mult} of "
                f"{count} eigenvalues found; raise k_ceiling"
            )
        next_s = sys_.smin(next_k)
        if cur_s <= prev_s and cur_s <= next_s and cur_s < 0.5:
            # two refinement passes: coarse to tol_eig, then tightened so the
            # multiplicity count at the root is reliable
            k_star = _golden_refine(sys_.smin, prev_k, next_k, tol_eig)
            lo = max(k_star - 2.0 * tol_eig * max(1.0, k_star), k_floor)
            hi = k_star + 2.0 * tol_eig * max(1.0, k_star)
            k_star = _golden_refine(sys_.smin, lo, hi, 1e-14 * max(1.0, k_star))
            s_star = sys_.smin(k_star)
            if s_star < DIP_THRESHOLD:
                mult = max(sys_.nullity(k_star), 1)
                if not found or abs(k_star - found[-1][0]) > 10.0 * tol_eig * max(1.0, k_star):
                    found.append((k_star, mult))
                    total_mult += mult
        prev_k, prev_s = cur_k, cur_s
        cur_k, cur_s = next_k, next_s
        j += 1

    lams: list[float] = [0.0] * mult0
    for k_star, mult in found:
        lams.extend([k_star * k_star] * mult)
    lams.sort()
    return SpectralResult(tuple(lams[:count]), "secular", tol_eig)


def _coerce_dirichlet(bc) -> frozenset[str]:
    if isinstance(bc, BoundaryConditions):
        return frozenset(bc.dirichlet_set)
    return frozenset(bc)


def adaptive_positive_roots(sys_: _SecularSystem, count: int, tol_eig: float = DEFAULT_TOL_EIG):
    """First ``count`` positive roots of the secular system by an adaptive
    march.

    Away from roots the step from k is smin(k) / (2 C) with C the Lipschitz
    bound of smin, so no root can be stepped over: a root inside the step
    would force smin(k) below half its value at k.  Once smin drops under a
    trigger the walk switches to bracket-by-doubling until smin rises
    again, and the bracketed dip is refined by golden section.  Roots
    closer together than the resume gap after a found root can merge, the
    same caveat the fixed-step grid has at comparable resolution.
    """
    total = float(sys_.lengths.sum())
    C = sys_.lipschitz_bound()
    k_floor = 0.8 * math.pi / (2.0 * total)
    delta_max = math.pi / (8.0 * total)
    delta_min = 1e-12
    ceiling = (count + len(sys_.lengths) + 6) * 2.0 * math.pi / total
    trigger = 0.04

    roots: list[tuple[float, int]] = []
    total_mult = 0

    def refine_bracket(lo, hi):
        k_star = _golden_refine(sys_.smin, lo, hi, tol_eig)
        a = max(k_star - 2.0 * tol_eig * max(1.0, k_star), k_floor)
        b = k_star + 2.0 * tol_eig * max(1.0, k_star)
        return _golden_refine(sys_.smin, a, b, 1e-14 * max(1.0, k_star))

    k = k_floor
    s = sys_.smin(k)
    guard = 0
    while total_mult < count:
        guard += 1
        if guard > 100_000 or k > ceiling:
            raise ComputationError("adaptive secular scan failed to find enough roots")
        if s >= trigger:
            k = k + min(max(s / (2.0 * C), delta_min), delta_max)
            s = sys_.smin(k)
            continue
        # basin phase: walk forward with doubling steps until smin rises
        left = k
        h = max(s / C, 8.0 * tol_eig * max(1.0, k))
        k1, s1 = k, s
        k2 = k1 + h
        s2 = sys_.smin(k2)
        while s2 < s1:
            k1, s1 = k2, s2
            h = min(1.7 * h, delta_max)
            k2 = k1 + h
            s2 = sys_.smin(k2)
            guard += 1
            if guard > 100_000:
                raise ComputationError("adaptive secular scan stalled in a basin")
        k_star = refine_bracket(left, k2)
        s_star = sys_.smin(k_star)
        if s_star < DIP_THRESHOLD and (
            not roots or abs(k_star - roots[-1][0]) > 10.0 * tol_eig * max(1.0, k_star)
        ):
            mult = max(sys_.nullity(k_star), 1)
            roots.append((k_star, mult))
            total_mult += mult
        # resume past the dip
        k = max(k2, k_star + 0.25 * delta_max)
        s = sys_.smin(k)
    return roots


# ---------------------------------------------------------------------------
# Closed forms and shape dispatch
# ---------------------------------------------------------------------------


def star_eigenvalue_closed_form(m: int, total_length: float, k: int) -> float:
    """k-th ordered natural eigenvalue of the equilateral m-star of total
    length L: with k = jm + r, r in {1..m}, the value is pi^2 m^2 j^2 / L^2
    for r = 1 and pi^2 m^2 (j + 1/2)^2 / L^2 otherwise."""
    if m < 3:
        raise ValidationError("equilateral star closed form needs m >= 3")
    if k < 1:
        raise ValidationError("eigenvalue index must be >= 1")
    L = float(total_length)
    j, r = divmod(k - 1, m)
    r += 1
    if r == 1:
        return math.pi**2 * m**2 * j**2 / L**2
    return math.pi**2 * m**2 * (j + 0.5) ** 2 / L**2


def _bisect_increasing(f, a: float, b: float, iters: int = 200) -> float:
    fa = f(a)
    if fa > 0:
        raise ComputationError("bisection bracket does not straddle a root")
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        if f(mid) <= 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _inset_bracket(f, lo: float, hi: float):
    """Move the bracket endpoints off their poles, respecting the float
    grid: a relative inset can underflow to nothing when the poles are
    close, leaving tan evaluated exactly at its pole."""
    span = hi - lo
    a = lo + span * 1e-9
    b = hi - span * 1e-9
    if not a > lo:
        a = math.nextafter(lo, hi)
    if not b < hi:
        b = math.nextafter(hi, lo)
    for _ in range(4):
        if a >= b:
            return None
        if f(a) <= 0.0:
            break
        a = math.nextafter(a, hi)
    else:
        return None
    if f(b) < 0.0:
        return None  # root indistinguishable from the upper pole
    return a, b


def _star_mu2(leg_lengths, petal_lengths=()) -> float:
    """First nontrivial eigenvalue of a rose-star with natural conditions:
    a single centre carrying segment legs (free far ends) and cycle petals.

    A petal of length c glued at both ends contributes 2 tan(k c / 2) to
    the Kirchhoff balance, a leg of length l contributes tan(k l).  The
    eigenvalue is the smallest of: the first pole, when two terms share it
    (their fluxes can cancel, giving a centre-vanishing mode); the first
    balance root past the first pole; the first petal mode sin(kc) = 0
    with zero flux, at k = 2 pi / c.
    """
    legs = sorted(leg_lengths, reverse=True)
    petals = sorted(petal_lengths, reverse=True)
    poles = [math.pi / (2.0 * l) for l in legs] + [math.pi / c for c in petals]
    if not poles:
        raise ValidationError("rose-star needs at least one leg or petal")
    poles.sort()
    p1 = poles[0]
    candidates = [2.0 * math.pi / c for c in petals]
    if len(poles) >= 2 and poles[1] <= p1 * (1.0 + 1e-9):
        return min(candidates + [p1]) ** 2

    higher = [q for q in poles[1:]] + [3.0 * p1]
    p2 = min(higher)

    def f(k):
        acc = 0.0
        for l in legs:
            acc += math.tan(k * l)
        for c in petals:
            acc += 2.0 * math.tan(0.5 * k * c)
        return acc

    bracket = _inset_bracket(f, p1, p2)
    if bracket is None:
        # the balance root is squeezed onto a pole; p2 errs on the safe side
        k = p2
    else:
        k = _bisect_increasing(f, *bracket)
    return min([k] + candidates) ** 2


def _star_lambda1(nat_legs, dir_legs, petal_lengths=()) -> float:
    """Lowest eigenvalue of a rose-star with Dirichlet far ends on
    ``dir_legs``, natural far ends on ``nat_legs`` and cycle petals.

    The balance function sum_N tan(k l) - sum_D cot(k l) + sum 2 tan(kc/2)
    increases from -inf to +inf on (0, first pole), so the root is unique
    there and lies below every centre-vanishing candidate.
    """
    if not dir_legs:
        raise ValidationError("rose-star lambda1 needs at least one Dirichlet leg")
    poles = (
        [math.pi / (2.0 * l) for l in nat_legs]
        + [math.pi / l for l in dir_legs]
        + [math.pi / c for c in petal_lengths]
    )
    upper = min(poles)

    def f(k):
        acc = 0.0
        for l in nat_legs:
            acc += math.tan(k * l)
        for l in dir_legs:
            acc -= 1.0 / math.tan(k * l)
        for c in petal_lengths:
            acc += 2.0 * math.tan(0.5 * k * c)
        return acc

    eps = upper * 1e-12
    k = _bisect_increasing(f, eps, upper - eps)
    return k * k


def _classify_shape(g: MetricGraph):
    """Recognize closed-form shapes after dummy suppression.

    Returns ("path", T, h), ("cycle", T, h) or ("rose", center, h) where a
    rose is one centre vertex with pendant legs and loop petals.  Dirichlet
    marks survive normalization, so marked paths keep their marked ends.
    """
    h = normalize(g)
    if len(h.edges) == 1:
        e = h.edges[0]
        if e.is_loop():
            return ("cycle", e.length, h)
        return ("path", e.length, h)
    degs = {v: h.degree(v) for v in h.vertices}
    centers = [v for v, d in degs.items() if d >= 3]
    if len(centers) == 1 and all(d == 1 for v, d in degs.items() if v != centers[0]):
        if all(not e.is_loop() or e.u == centers[0] for e in h.edges):
            return ("rose", centers[0], h)
    return None


def mu2(g: MetricGraph, method: str | None = None) -> float:
    """First nontrivial natural eigenvalue; closed forms for paths, cycles
    and stars, secular solver otherwise."""
    if not g.is_connected():
        raise ValidationError("mu2 requires a connected graph")
    bare = g.with_dirichlet(())
    if method != "secular":
        shape = _classify_shape(bare)
        if shape is not None:
            kind = shape[0]
            if kind == "path":
                return (math.pi / shape[1]) ** 2
            if kind == "cycle":
                return (2.0 * math.pi / shape[1]) ** 2
            h = shape[2]
            legs = [e.length for e in h.edges if not e.is_loop()]
            petals = [e.length for e in h.edges if e.is_loop()]
            return _star_mu2(legs, petals)
        sys_ = _SecularSystem(bare, frozenset())
        return adaptive_positive_roots(sys_, 1)[0][0] ** 2
    res = eigenvalues(bare, BoundaryConditions.natural(), count=2)
    return res.eigenvalues[1]


def lambda1(g: MetricGraph, dirichlet_set, method: str | None = None) -> float:
    """Lowest eigenvalue with Dirichlet conditions on ``dirichlet_set``.

    The form decouples at Dirichlet vertices, so the value is the minimum
    over the Dirichlet-free pieces, each solved in closed form when it is a
    path or a star, by the secular solver otherwise.
    """
    marks = frozenset(dirichlet_set)
    if not marks:
        raise ValidationError("lambda1 needs a nonempty Dirichlet set")
    if not g.is_connected():
        raise ValidationError("lambda1 requires a connected graph")
    if method == "secular":
        res = eigenvalues(g, BoundaryConditions.dirichlet(marks), count=1)
        return res.eigenvalues[0]
    best = math.inf
    for piece in _dirichlet_pieces(g, marks):
        best = min(best, _piece_lambda1(piece))
    return best


def _dirichlet_pieces(g: MetricGraph, marks: frozenset[str]) -> list[MetricGraph]:
    """Split the graph at its Dirichlet vertices: every stub of a marked
    vertex becomes a fresh marked leaf; return the connected pieces."""
    from .graphs import Edge

    vertices = [v for v in g.vertices if v not in marks]
    new_marks = set()
    edges = []
    counter = 0
    for e in g.edges:
        u, v = e.u, e.v
        if u in marks:
            u = f"{e.u}@d{counter}"
            counter += 1
            vertices.append(u)
            new_marks.add(u)
        if v in marks:
            v = f"{e.v}@d{counter}"
            counter += 1
            vertices.append(v)
            new_marks.add(v)
        edges.append(Edge(e.id, u, v, e.length, e.exact))
    split = MetricGraph(tuple(vertices), tuple(edges), frozenset(new_marks), g.name)
    return [split.induced_subgraph(c) for c in split.components if split.induced_subgraph(c).edges]


def _piece_lambda1(piece: MetricGraph) -> float:
    shape = _classify_shape(piece)
    if shape is not None:
        kind = shape[0]
        if kind == "path":
            h = shape[2]
            e = h.edges[0]
            n_dir = sum(1 for v in (e.u, e.v) if v in h.dirichlet)
            if n_dir == 2:
                return (math.pi / e.length) ** 2
            if n_dir == 1:
                return (math.pi / (2.0 * e.length)) ** 2
            raise ComputationError("Dirichlet-free piece encountered")
        if kind == "rose":
            center, h = shape[1], shape[2]
            nat, dirs, petals = [], [], []
            for e in h.edges:
                if e.is_loop():
                    petals.append(e.length)
                    continue
                leaf = e.other(center)
                (dirs if leaf in h.dirichlet else nat).append(e.length)
            if dirs:
                return _star_lambda1(nat, dirs, petals)
        # cycles cannot carry their own Dirichlet point after splitting
    sys_ = _SecularSystem(piece, frozenset(piece.dirichlet))
    return adaptive_positive_roots(sys_, 1)[0][0] ** 2


# ---------------------------------------------------------------------------
# Finite-difference oracle
# ---------------------------------------------------------------------------


def fd_oracle_eigenvalues(
    g: MetricGraph,
    bc: BoundaryConditions | frozenset | set | tuple = BoundaryConditions.natural(),
    count: int = 5,
    n_per_unit: int = 2000,
    richardson: bool = True,
) -> SpectralResult:
    """Independent eigenvalue oracle: second-order finite differences with
    lumped mass and Kirchhoff vertex rows.

    The raw scheme has eigenvalue error ~ (k h)^2 lambda / 12; a Richardson
    step over grids h and 2h removes that leading term, which the mutual
    agreement tolerances against the secular solver rely on.
    """
    dirichlet = _coerce_dirichlet(bc)
    if not g.is_connected():
        raise ValidationError("fd oracle requires a connected graph")
    if n_per_unit < 100:
        raise ValidationError("n_per_unit must be >= 100")
    est_nodes = sum(int(round(e.length * n_per_unit)) for e in g.edges)
    if est_nodes > 2_000_000:
        raise ComputationError("fd grid too large; lower n_per_unit")
    fine = _fd_eigs(g, dirichlet, count, n_per_unit, halved=False)
    if not richardson:
        return SpectralResult(tuple(fine), "fd_oracle", 0.0)
    coarse = _fd_eigs(g, dirichlet, count, n_per_unit, halved=True)
    vals = tuple((4.0 * f - c) / 3.0 for f, c in zip(fine, coarse))
    return SpectralResult(vals, "fd_oracle", 0.0)


def _fd_eigs(g, dirichlet, count, n_per_unit, halved):
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    # even interior counts let the coarse grid use exactly doubled spacing
    half_counts = {e.id: max(1, round(e.length * n_per_unit / 2.0)) for e in g.edges}
    node_index: dict = {}
    next_idx = 0
    for v in g.vertices:
        if v not in dirichlet:
            node_index[("v", v)] = next_idx
            next_idx += 1
    rows_k, cols_k, data_k = [], [], []
    mass: dict[int, float] = {}

    def add_k(i, j, val):
        rows_k.append(i)
        cols_k.append(j)
        data_k.append(val)

    def add_m(i, val):
        mass[i] = mass.get(i, 0.0) + val

    for e in g.edges:
        n_e = half_counts[e.id] if halved else 2 * half_counts[e.id]
        h = e.length / n_e
        inner = []
        for j in range(1, n_e):
            node_index[("i", e.id, j)] = next_idx
            inner.append(next_idx)
            next_idx += 1
        chain = []
        chain.append(node_index.get(("v", e.u)))  # None when Dirichlet
        chain.extend(inner)
        chain.append(node_index.get(("v", e.v)))
        w = 1.0 / h
        for a, b in zip(chain[:-1], chain[1:]):
            if a is not None:
                add_k(a, a, w)
                add_m(a, h / 2.0)
            if b is not None:
                add_k(b, b, w)
                add_m(b, h / 2.0)
            if a is not None and b is not None:
                add_k(a, b, -w)
                add_k(b, a, -w)
    n = next_idx
    if n <= count + 1:
        raise ComputationError("fd grid too coarse for requested count")
    K = sp.csr_matrix((data_k, (rows_k, cols_k)), shape=(n, n))
    M = sp.diags([mass.get(i, 0.0) for i in range(n)], format="csr")
    k_req = min(count + 2, n - 1)
    vals = spla.eigsh(K, k=k_req, M=M, sigma=-1.0, which="LM", return_eigenvectors=False)
    out = sorted(float(x) for x in np.real(vals))
    return out[:count]
