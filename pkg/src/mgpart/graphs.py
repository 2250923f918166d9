"""Compact metric graphs: data model, .mg parsing, standard families and statistics.

A metric graph is a finite multigraph whose edges carry strictly positive
lengths.  Loops and parallel edges are allowed, graphs may be disconnected,
and an optional set of vertices can be marked as Dirichlet vertices.
"""

from __future__ import annotations

import heapq
import itertools
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property

from .errors import GraphFormatError, ValidationError

__all__ = [
    "Edge",
    "MetricGraph",
    "GraphStats",
    "parse_graph",
    "build_standard",
    "stats",
    "normalize",
    "is_doubly_connected",
    "doubly_connected_pendants",
    "eulerian_trail",
]

_LengthLike = "float | int | Fraction"


def _as_length(value) -> tuple[float, Fraction | None]:
    """Split a length into its float value and, when the input form is exact
    (int or Fraction), its exact rational counterpart.

    Rationality of edge lengths is decided by the input form only, never by
    inspecting floating point digits.
    """
    if isinstance(value, Fraction):
        return float(value), value
    if isinstance(value, int):
        return float(value), Fraction(value)
    return float(value), None


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    length: float
    exact: Fraction | None = None

    def is_loop(self) -> bool:
        return self.u == self.v

    def other(self, vertex: str) -> str:
        return self.v if vertex == self.u else self.u


@dataclass(frozen=True)
class MetricGraph:
    """Immutable compact metric graph.

    ``vertices`` is an ordered tuple of ids, ``edges`` a tuple of
    :class:`Edge`; ``dirichlet`` marks vertices carrying a Dirichlet
    condition for spectral computations (partition machinery ignores it).
    """

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    dirichlet: frozenset[str] = frozenset()
    name: str = ""

    def __post_init__(self):
        seen_v = set()
        for v in self.vertices:
            if v in seen_v:
                raise ValidationError(f"duplicate vertex id {v!r}")
            seen_v.add(v)
        seen_e = set()
        for e in self.edges:
            if e.id in seen_e:
                raise ValidationError(f"duplicate edge id {e.id!r}")
            seen_e.add(e.id)
            if not (e.length > 0.0) or not math.isfinite(e.length):
                raise ValidationError(
                    f"edge {e.id!r} has nonpositive or non-finite length {e.length}"
                )
            for end in (e.u, e.v):
                if end not in seen_v:
                    raise ValidationError(f"edge {e.id!r} references unknown vertex {end!r}")
        for v in self.dirichlet:
            if v not in seen_v:
                raise ValidationError(f"dirichlet mark on unknown vertex {v!r}")

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def from_edges(
        edge_spec,
        dirichlet=(),
        name: str = "",
    ) -> "MetricGraph":
        """Build a graph from ``(edge_id, u, v, length)`` tuples; vertices are
        collected automatically in order of first appearance."""
        vertices: list[str] = []
        seen = set()
        edges = []
        for eid, u, v, length in edge_spec:
            for w in (u, v):
                if w not in seen:
                    seen.add(w)
                    vertices.append(w)
            val, exact = _as_length(length)
            edges.append(Edge(str(eid), str(u), str(v), val, exact))
        return MetricGraph(tuple(vertices), tuple(edges), frozenset(dirichlet), name)

    def with_dirichlet(self, marks) -> "MetricGraph":
        return replace(self, dirichlet=frozenset(marks))

    # -- basic queries ---------------------------------------------------------

    @cached_property
    def edge_map(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def total_length(self) -> float:
        return float(sum(e.length for e in self.edges))

    @cached_property
    def incidence(self) -> dict[str, tuple[tuple[str, int], ...]]:
        """Vertex -> stubs.  A stub is ``(edge_id, end)`` with end 0 at ``u``
        and end 1 at ``v``; a loop contributes both of its stubs."""
        inc: dict[str, list[tuple[str, int]]] = {v: [] for v in self.vertices}
        for e in self.edges:
            inc[e.u].append((e.id, 0))
            inc[e.v].append((e.id, 1))
        return {v: tuple(s) for v, s in inc.items()}

    def degree(self, v: str) -> int:
        return len(self.incidence[v])

    def stubs(self, v: str) -> tuple[tuple[str, int], ...]:
        return self.incidence[v]

    @cached_property
    def components(self) -> tuple[frozenset[str], ...]:
        """Vertex sets of the connected components (isolated vertices included)."""
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for e in self.edges:
            adj[e.u].add(e.v)
            adj[e.v].add(e.u)
        seen: set[str] = set()
        comps = []
        for v in self.vertices:
            if v in seen:
                continue
            stack, comp = [v], set()
            while stack:
                w = stack.pop()
                if w in comp:
                    continue
                comp.add(w)
                stack.extend(adj[w] - comp)
            seen |= comp
            comps.append(frozenset(comp))
        return tuple(comps)

    def is_connected(self) -> bool:
        return len(self.components) == 1

    def has_exact_lengths(self) -> bool:
        return all(e.exact is not None for e in self.edges)

    def scaled(self, factor: float) -> "MetricGraph":
        """Same combinatorics with every length multiplied by ``factor``."""
        fval, fexact = _as_length(factor)
        if not fval > 0:
            raise ValidationError("scale factor must be positive")
        edges = tuple(
            Edge(
                e.id,
                e.u,
                e.v,
                e.length * fval,
                e.exact * fexact if (e.exact is not None and fexact is not None) else None,
            )
            for e in self.edges
        )
        return replace(self, edges=edges)

    def _connected_after_removal(self, removed_edge: str) -> bool:
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for e in self.edges:
            if e.id == removed_edge:
                continue
            adj[e.u].add(e.v)
            adj[e.v].add(e.u)
        start = self.vertices[0]
        seen = {start}
        stack = [start]
        while stack:
            w = stack.pop()
            for x in adj[w]:
                if x not in seen:
                    seen.add(x)
                    stack.append(x)
        return len(seen) == len(self.vertices)

    @cached_property
    def bridges(self) -> tuple[str, ...]:
        """Edge ids whose removal disconnects their component.  Loops and
        members of parallel bundles are never bridges."""
        out = []
        for e in self.edges:
            if e.is_loop():
                continue
            sub = self.component_subgraph(e.u)
            if not sub._connected_after_removal(e.id):
                out.append(e.id)
        return tuple(out)

    def component_subgraph(self, vertex: str) -> "MetricGraph":
        for comp in self.components:
            if vertex in comp:
                return self.induced_subgraph(comp)
        raise ValidationError(f"unknown vertex {vertex!r}")

    def induced_subgraph(self, vertex_set) -> "MetricGraph":
        vs = frozenset(vertex_set)
        vertices = tuple(v for v in self.vertices if v in vs)
        edges = tuple(e for e in self.edges if e.u in vs and e.v in vs)
        return MetricGraph(vertices, edges, self.dirichlet & vs, self.name)


@dataclass(frozen=True)
class GraphStats:
    total_length: float
    ell_min: float
    ell_max: float
    betti: int
    girth: float  # +inf when the graph has no cycle
    degree_one_count: int
    num_components: int
    doubly_connected: bool
    pendant2_count: int
    has_eulerian_path: bool
    eulerian_cover_number: int

    def as_dict(self) -> dict:
        return {
            "total_length": self.total_length,
            "ell_min": self.ell_min,
            "ell_max": self.ell_max,
            "betti": self.betti,
            "girth": self.girth,
            "degree_one_count": self.degree_one_count,
            "num_components": self.num_components,
            "doubly_connected": self.doubly_connected,
            "pendant2_count": self.pendant2_count,
            "has_eulerian_path": self.has_eulerian_path,
            "eulerian_cover_number": self.eulerian_cover_number,
        }


# ---------------------------------------------------------------------------
# .mg parsing
# ---------------------------------------------------------------------------

_LENGTH_INT = re.compile(r"^\d+$")
_LENGTH_FRAC = re.compile(r"^(\d+)/(\d+)$")


def _parse_length(token: str, line: int) -> tuple[float, Fraction | None]:
    if _LENGTH_INT.match(token):
        return float(int(token)), Fraction(int(token))
    m = _LENGTH_FRAC.match(token)
    if m:
        den = int(m.group(2))
        if den == 0:
            raise GraphFormatError("zero denominator in length", line)
        frac = Fraction(int(m.group(1)), den)
        return float(frac), frac
    try:
        return float(token), None
    except ValueError:
        raise GraphFormatError(f"cannot parse length {token!r}", line) from None


def parse_graph(text: str) -> MetricGraph:
    """Parse the line-based ``.mg`` format.

    Directives: ``graph <name>``, ``vertex <id>``,
    ``edge <id> <u> <v> <length>`` and ``dirichlet <vertex-id>``.
    Lengths are decimals or fractions ``p/q``; fractions and bare integers
    are kept exact for rational-dependence tests.  ``#`` starts a comment.
    """
    name = ""
    vertices: list[str] = []
    vset: set[str] = set()
    edges: list[Edge] = []
    eids: set[str] = set()
    dirichlet: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        directive = parts[0]
        if directive == "graph":
            if len(parts) != 2:
                raise GraphFormatError("expected: graph <name>", lineno)
            name = parts[1]
        elif directive == "vertex":
            if len(parts) != 2:
                raise GraphFormatError("expected: vertex <id>", lineno)
            if parts[1] not in vset:
                vset.add(parts[1])
                vertices.append(parts[1])
        elif directive == "edge":
            if len(parts) != 5:
                raise GraphFormatError("expected: edge <id> <u> <v> <length>", lineno)
            eid, u, v, length_tok = parts[1:]
            value, exact = _parse_length(length_tok, lineno)
            if not value > 0:
                raise GraphFormatError(f"nonpositive length {length_tok}", lineno)
            if eid in eids:
                raise GraphFormatError(f"duplicate edge id {eid!r}", lineno)
            for w in (u, v):
                if w not in vset:
                    raise GraphFormatError(f"unknown vertex id {w!r}", lineno)
            eids.add(eid)
            edges.append(Edge(eid, u, v, value, exact))
        elif directive == "dirichlet":
            if len(parts) != 2:
                raise GraphFormatError("expected: dirichlet <vertex-id>", lineno)
            if parts[1] not in vset:
                raise GraphFormatError(f"unknown vertex id {parts[1]!r}", lineno)
            dirichlet.add(parts[1])
        else:
            raise GraphFormatError(f"unknown directive {directive!r}", lineno)
    return MetricGraph(tuple(vertices), tuple(edges), frozenset(dirichlet), name)


def format_graph(g: MetricGraph) -> str:
    """Serialize back to .mg text (exact lengths kept as fractions)."""
    lines = []
    if g.name:
        lines.append(f"graph {g.name}")
    for v in g.vertices:
        lines.append(f"vertex {v}")
    for e in g.edges:
        if e.exact is not None:
            tok = str(e.exact.numerator) if e.exact.denominator == 1 else f"{e.exact.numerator}/{e.exact.denominator}"
        else:
            tok = repr(e.length)
        lines.append(f"edge {e.id} {e.u} {e.v} {tok}")
    for v in sorted(g.dirichlet):
        lines.append(f"dirichlet {v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Standard families
# ---------------------------------------------------------------------------


def _frac_div(length, divisor: int):
    """Divide a length by an integer keeping exactness when possible."""
    if isinstance(length, Fraction):
        return length / divisor
    if isinstance(length, int):
        return Fraction(length, divisor)
    return length / divisor


def build_standard(family: str, **params) -> MetricGraph:
    """Construct a catalog graph.

    Families: interval(length), loop(length), star(m, total_length),
    lasso(stick, loop), dumbbell(loop1, handle, loop2),
    pumpkin_chain(bundles=[(multiplicity, edge_length), ...]),
    caterpillar(bundles=[edge_length, ...], dirichlet_end='left'|'right'),
    windmill(m, n, spoke, loop), two_intervals(a).
    """
    fam = family.lower()
    if fam == "interval":
        length = params.get("length", 1)
        _check_positive(length, "length")
        return MetricGraph.from_edges([("e0", "a", "b", length)], name=f"interval({length})")
    if fam == "loop":
        length = params.get("length", 1)
        _check_positive(length, "length")
        return MetricGraph.from_edges([("e0", "v", "v", length)], name=f"loop({length})")
    if fam == "star":
        m = int(params["m"])
        total = params.get("total_length", params.get("L", m))
        if m < 1:
            raise ValidationError("star needs m >= 1")
        _check_positive(total, "total_length")
        per_edge = _frac_div(total, m)
        rows = [(f"e{i}", "c", f"v{i}", per_edge) for i in range(m)]
        return MetricGraph.from_edges(rows, name=f"star({m})")
    if fam == "lasso":
        stick = params.get("stick", 1)
        loop = params.get("loop", 1)
        _check_positive(stick, "stick")
        _check_positive(loop, "loop")
        return MetricGraph.from_edges(
            [("stick", "w", "v", stick), ("loop", "v", "v", loop)], name="lasso"
        )
    if fam == "dumbbell":
        l1 = params.get("loop1", 1)
        handle = params.get("handle", 1)
        l2 = params.get("loop2", 1)
        for nm, val in (("loop1", l1), ("handle", handle), ("loop2", l2)):
            _check_positive(val, nm)
        return MetricGraph.from_edges(
            [("loop1", "u", "u", l1), ("handle", "u", "v", handle), ("loop2", "v", "v", l2)],
            name="dumbbell",
        )
    if fam == "pumpkin_chain":
        bundles = list(params["bundles"])
        if not bundles:
            raise ValidationError("pumpkin_chain needs at least one bundle")
        rows = []
        for i, (mult, ell) in enumerate(bundles):
            mult = int(mult)
            if mult < 1:
                raise ValidationError("bundle multiplicity must be >= 1")
            _check_positive(ell, f"bundle {i} length")
            for j in range(mult):
                rows.append((f"e{i}_{j}", f"p{i}", f"p{i + 1}", ell))
        return MetricGraph.from_edges(rows, name="pumpkin_chain")
    if fam == "caterpillar":
        bundles = list(params["bundles"])
        end = params.get("dirichlet_end", "left")
        g = build_standard("pumpkin_chain", bundles=[(2, ell) for ell in bundles])
        mark = "p0" if end == "left" else f"p{len(bundles)}"
        return replace(g, dirichlet=frozenset({mark}), name="caterpillar")
    if fam == "windmill":
        m = int(params["m"])
        n = int(params["n"])
        spoke = params.get("spoke", 1)
        loop = params.get("loop", 1)
        if m < 0 or n < 0 or m + n < 1:
            raise ValidationError("windmill needs m + n >= 1 spokes")
        _check_positive(spoke, "spoke")
        _check_positive(loop, "loop")
        rows = []
        for i in range(m):
            rows.append((f"s{i}", "c", f"w{i}", spoke))
            rows.append((f"l{i}", f"w{i}", f"w{i}", loop))
        for i in range(n):
            rows.append((f"t{i}", "c", f"u{i}", spoke))
        return MetricGraph.from_edges(rows, name=f"windmill({m},{n})")
    if fam == "two_intervals":
        a = params.get("a", 1)
        _check_positive(a, "a")
        return MetricGraph.from_edges(
            [("i1", "a0", "a1", 1), ("i2", "b0", "b1", a)], name=f"two_intervals({a})"
        )
    raise ValidationError(f"unknown family {family!r}")


def _check_positive(value, label: str):
    if not (float(value) > 0) or not math.isfinite(float(value)):
        raise ValidationError(f"{label} must be a positive finite number, got {value!r}")


# ---------------------------------------------------------------------------
# Normalization (dummy-vertex suppression)
# ---------------------------------------------------------------------------


def normalize(g: MetricGraph) -> MetricGraph:
    """Suppress unmarked degree-2 vertices by merging their incident edges.

    A pure cycle keeps one vertex (a loop needs a basepoint), so the result
    never has an unmarked degree-2 vertex except the basepoint of a loop
    edge.  Idempotent; vertex identity is not preserved.
    """
    vertices = list(g.vertices)
    edges = {e.id: e for e in g.edges}
    changed = True
    while changed:
        changed = False
        inc: dict[str, list[tuple[str, int]]] = {v: [] for v in vertices}
        for e in edges.values():
            inc[e.u].append((e.id, 0))
            inc[e.v].append((e.id, 1))
        for v in sorted(vertices):
            if v in g.dirichlet or len(inc[v]) != 2:
                continue
            (e1_id, end1), (e2_id, end2) = inc[v]
            if e1_id == e2_id:
                continue  # basepoint of a loop stays
            e1, e2 = edges[e1_id], edges[e2_id]
            a = e1.v if end1 == 0 else e1.u
            b = e2.v if end2 == 0 else e2.u
            exact = e1.exact + e2.exact if (e1.exact is not None and e2.exact is not None) else None
            merged = Edge(f"{e1_id}~{e2_id}", a, b, e1.length + e2.length, exact)
            del edges[e1_id]
            del edges[e2_id]
            edges[merged.id] = merged
            vertices.remove(v)
            changed = True
            break
    order = {v: i for i, v in enumerate(g.vertices)}
    vertices.sort(key=lambda v: order.get(v, len(order)))
    return MetricGraph(
        tuple(vertices),
        tuple(sorted(edges.values(), key=lambda e: e.id)),
        g.dirichlet & frozenset(vertices),
        g.name,
    )


# ---------------------------------------------------------------------------
# Connectivity structure
# ---------------------------------------------------------------------------


def is_doubly_connected(g: MetricGraph) -> bool:
    """True iff no single edge removal disconnects the (connected) graph."""
    if not g.is_connected():
        raise ValidationError("doubly connected is defined for connected graphs")
    if not g.edges:
        return False
    return len(g.bridges) == 0


def doubly_connected_pendants(g: MetricGraph) -> list[MetricGraph]:
    """Maximal doubly connected subgraphs hanging off a single bridge.

    For every bridge the far side is tested; a side qualifies when it has at
    least one edge and is internally bridge-free.  Distinct pendants are
    automatically disjoint.
    """
    if not g.is_connected():
        raise ValidationError("pendant detection requires a connected graph")
    pendants: list[MetricGraph] = []
    claimed: set[str] = set()
    for bid in g.bridges:
        e = g.edge_map[bid]
        adj: dict[str, set[str]] = {v: set() for v in g.vertices}
        for f in g.edges:
            if f.id == bid:
                continue
            adj[f.u].add(f.v)
            adj[f.v].add(f.u)
        for root in (e.u, e.v):
            side = {root}
            stack = [root]
            while stack:
                w = stack.pop()
                for x in adj[w]:
                    if x not in side:
                        side.add(x)
                        stack.append(x)
            sub = g.induced_subgraph(side)
            if not sub.edges:
                continue
            if sub.is_connected() and len(sub.bridges) == 0:
                if not (side & claimed):
                    pendants.append(sub)
                    claimed |= side
    return pendants


# ---------------------------------------------------------------------------
# Eulerian structure
# ---------------------------------------------------------------------------


def _odd_vertices(g: MetricGraph) -> list[str]:
    return [v for v in g.vertices if g.degree(v) % 2 == 1]


def eulerian_cover_number(g: MetricGraph) -> int:
    """Minimum number of trails covering every edge: per component
    max(1, #odd-degree vertices / 2), summed."""
    total = 0
    for comp in g.components:
        sub = g.induced_subgraph(comp)
        if not sub.edges:
            total += 1  # isolated vertex counts as its own (degenerate) piece
            continue
        odd = len(_odd_vertices(sub))
        total += max(1, odd // 2)
    return total


def has_eulerian_path(g: MetricGraph) -> bool:
    if not g.is_connected() or not g.edges:
        return False
    return len(_odd_vertices(g)) in (0, 2)


def eulerian_trail(g: MetricGraph) -> list[tuple[str, bool]]:
    """Hierholzer trail on a connected graph with 0 or 2 odd vertices.

    Returns the edge sequence as ``(edge_id, forward)`` where forward means
    the edge is traversed from u to v.
    """
    if not has_eulerian_path(g):
        raise ValidationError("graph has no Eulerian path")
    odd = _odd_vertices(g)
    start = odd[0] if odd else g.edges[0].u
    remaining: dict[str, list[tuple[str, str, bool]]] = {v: [] for v in g.vertices}
    for e in g.edges:
        remaining[e.u].append((e.id, e.v, True))
        remaining[e.v].append((e.id, e.u, False))
    used: set[str] = set()

    def walk(v0: str) -> list[tuple[str, bool, str]]:
        path = []
        v = v0
        while True:
            found = None
            while remaining[v]:
                eid, w, fwd = remaining[v][-1]
                if eid in used:
                    remaining[v].pop()
                    continue
                found = (eid, w, fwd)
                break
            if found is None:
                return path
            eid, w, fwd = found
            used.add(eid)
            path.append((eid, fwd, w))
            v = w

    # Stitch sub-circuits into the main trail until every edge is used; the
    # anchor sequence includes the start vertex, not just arrival vertices.
    trail = walk(start)
    i = 0
    while len(trail) < len(g.edges):
        if i > len(trail):
            raise ValidationError("graph has no Eulerian path")  # disconnected guard
        anchor = start if i == 0 else trail[i - 1][2]
        extra = walk(anchor)
        if extra:
            trail = trail[:i] + extra + trail[i:]
            i = 0
        else:
            i += 1
    return [(eid, fwd) for eid, fwd, _ in trail]


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def _girth(g: MetricGraph) -> float:
    """Length of the shortest cycle over the metric; +inf when cycle-free.

    For each non-loop edge the shortest u-v path avoiding that edge closes
    the candidate cycle; loops contribute their own length.
    """
    best = math.inf
    for e in g.edges:
        if e.is_loop():
            best = min(best, e.length)
            continue
        dist = _dijkstra(g, e.u, skip_edge=e.id, target=e.v, cutoff=best - e.length)
        if dist is not None:
            best = min(best, dist + e.length)
    return best


def _dijkstra(
    g: MetricGraph, source: str, skip_edge: str | None, target: str, cutoff: float
) -> float | None:
    adj: dict[str, list[tuple[str, float]]] = {v: [] for v in g.vertices}
    for e in g.edges:
        if e.id == skip_edge or e.is_loop():
            continue
        adj[e.u].append((e.v, e.length))
        adj[e.v].append((e.u, e.length))
    dist = {source: 0.0}
    heap = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if v == target:
            return d
        if d > dist.get(v, math.inf) or d > cutoff:
            continue
        for w, ell in adj[v]:
            nd = d + ell
            if nd < dist.get(w, math.inf):
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return None


def stats(g: MetricGraph) -> GraphStats:
    """All combinatorial and metric statistics the bound formulas consume."""
    if not g.edges:
        raise ValidationError("stats requires at least one edge")
    lengths = [e.length for e in g.edges]
    ncomp = len(g.components)
    betti = len(g.edges) - len(g.vertices) + ncomp
    connected = ncomp == 1
    doubly = connected and len(g.bridges) == 0 and bool(g.edges)
    if connected:
        p2 = len(doubly_connected_pendants(g))
    else:
        p2 = sum(
            len(doubly_connected_pendants(g.induced_subgraph(c)))
            for c in g.components
            if g.induced_subgraph(c).edges
        )
    return GraphStats(
        total_length=g.total_length,
        ell_min=min(lengths),
        ell_max=max(lengths),
        betti=betti,
        girth=_girth(g),
        degree_one_count=sum(1 for v in g.vertices if g.degree(v) == 1),
        num_components=ncomp,
        doubly_connected=doubly,
        pendant2_count=p2,
        has_eulerian_path=has_eulerian_path(g),
        eulerian_cover_number=eulerian_cover_number(g),
    )
