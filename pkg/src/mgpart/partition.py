"""Cuts, clusters and partition energies.

A cut configuration lists interior cut points (two fresh degree-1 vertices
each) and vertex splits (a set partition of the incident edge stubs).
Applying it to a graph yields the clusters: connected components of the cut
graph, each carrying the set of boundary vertices the cutting created.
Dirichlet energies put Dirichlet conditions exactly at those boundary
vertices; natural energies ignore them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ComputationError, ValidationError
from .graphs import Edge, MetricGraph
from . import spectral

__all__ = [
    "CutConfig",
    "Partition",
    "EnergyReport",
    "apply_cuts",
    "classify",
    "energy",
    "neighbours",
    "serialize_cut_config",
    "parse_cut_config",
]

Stub = tuple[str, int]

RIGID = "rigid"
CONNECTED_ONLY = "connected_only"
INVALID = "invalid"


@dataclass(frozen=True)
class CutConfig:
    """Interior cut coordinates (edge id, t as a fraction of the edge) plus
    per-vertex stub partitions; hashable and canonically ordered."""

    interior_cuts: tuple[tuple[str, float], ...] = ()
    vertex_splits: tuple[tuple[str, tuple[frozenset[Stub], ...]], ...] = ()

    @staticmethod
    def make(interior_cuts=(), vertex_splits=None) -> "CutConfig":
        cuts = tuple(sorted((str(e), float(t)) for e, t in interior_cuts))
        splits = []
        for v, blocks in (vertex_splits or {}).items():
            blk = tuple(
                sorted(
                    (frozenset((str(e), int(end)) for e, end in b) for b in blocks),
                    key=lambda b: sorted(b),
                )
            )
            splits.append((str(v), blk))
        return CutConfig(cuts, tuple(sorted(splits)))

    def cuts_by_edge(self) -> dict[str, list[float]]:
        out: dict[str, list[float]] = {}
        for e, t in self.interior_cuts:
            out.setdefault(e, []).append(t)
        for ts in out.values():
            ts.sort()
        return out

    def splits_by_vertex(self) -> dict[str, tuple[frozenset[Stub], ...]]:
        return {v: blocks for v, blocks in self.vertex_splits}

    def validate(self, g: MetricGraph) -> None:
        seen = set()
        for e, t in self.interior_cuts:
            if e not in g.edge_map:
                raise ValidationError(f"cut on unknown edge {e!r}")
            if not (0.0 < t < 1.0):
                raise ValidationError(f"cut coordinate {t} on {e!r} not strictly interior")
            if (e, t) in seen:
                raise ValidationError(f"duplicate cut ({e!r}, {t})")
            seen.add((e, t))
        for v, blocks in self.vertex_splits:
            if v not in g.incidence:
                raise ValidationError(f"split at unknown vertex {v!r}")
            stubs = set(g.stubs(v))
            listed = [s for b in blocks for s in b]
            if len(listed) != len(set(listed)):
                raise ValidationError(f"stub repeated in split at {v!r}")
            if set(listed) != stubs:
                raise ValidationError(f"split at {v!r} does not partition its stubs")
            if any(not b for b in blocks):
                raise ValidationError(f"empty block in split at {v!r}")


@dataclass(frozen=True)
class Partition:
    graph: MetricGraph
    cut_config: CutConfig
    clusters: tuple[MetricGraph, ...]
    boundaries: tuple[frozenset[str], ...]  # cut-created vertex names per cluster
    supports: tuple[tuple[tuple[str, float, float], ...], ...]  # (edge, t0, t1) pieces
    classification: str

    @property
    def k(self) -> int:
        return len(self.clusters)

    def cluster_lengths(self) -> tuple[float, ...]:
        return tuple(c.total_length for c in self.clusters)


@dataclass(frozen=True)
class EnergyReport:
    problem: str
    p: float
    per_cluster: tuple[tuple[int, float, float], ...]  # (index, eigenvalue, length)
    energy: float
    largest_cluster_length: float


# ---------------------------------------------------------------------------
# Applying cuts
# ---------------------------------------------------------------------------


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        p = self.parent.setdefault(x, x)
        while p != x:
            self.parent[x] = p = self.parent.setdefault(p, p)
            x, p = p, self.parent[p]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def _handle_name(handle) -> str:
    kind = handle[0]
    if kind == "v":
        return handle[1]
    if kind == "vb":
        return f"{handle[1]}#{handle[2]}"
    _, e, i, side = handle
    return f"{e}@{i}{side}"


def apply_cuts(g: MetricGraph, config: CutConfig) -> Partition:
    """Cut the graph and collect the clusters.

    Interior cut i on edge e produces handles (e, i, 'L') and (e, i, 'R'),
    two new degree-1 vertices; a vertex split reattaches each stub to the
    handle of its block.  Clusters are the connected components; boundary
    vertices are exactly the handles the cutting created.
    """
    config.validate(g)
    if any(g.degree(v) == 0 for v in g.vertices):
        raise ValidationError("apply_cuts requires every vertex to meet an edge")
    cuts = config.cuts_by_edge()
    splits = {v: blocks for v, blocks in config.vertex_splits if len(blocks) >= 2}

    def stub_handle(eid: str, end: int):
        v = g.edge_map[eid].u if end == 0 else g.edge_map[eid].v
        if v in splits:
            for bi, block in enumerate(splits[v]):
                if (eid, end) in block:
                    return ("vb", v, bi)
            raise ValidationError(f"stub ({eid},{end}) missing from split at {v!r}")
        return ("v", v)

    uf = _UnionFind()
    pieces = []  # (edge_id, t0, t1, left_handle, right_handle)
    for e in g.edges:
        ts = cuts.get(e.id, [])
        breaks = [0.0] + ts + [1.0]
        for j in range(len(breaks) - 1):
            left = stub_handle(e.id, 0) if j == 0 else ("cut", e.id, j - 1, "R")
            right = stub_handle(e.id, 1) if j == len(breaks) - 2 else ("cut", e.id, j, "L")
            pieces.append((e.id, breaks[j], breaks[j + 1], left, right))
            uf.union(left, right)

    # number components deterministically by first piece occurrence
    order: dict = {}
    for piece in pieces:
        r = uf.find(piece[3])
        if r not in order:
            order[r] = len(order)
    ncomp = len(order)

    cluster_pieces: list[list] = [[] for _ in range(ncomp)]
    for piece in pieces:
        cluster_pieces[order[uf.find(piece[3])]].append(piece)

    boundary_handles = set()
    for e, ts in cuts.items():
        for i in range(len(ts)):
            boundary_handles.add(("cut", e, i, "L"))
            boundary_handles.add(("cut", e, i, "R"))
    for v, blocks in splits.items():
        for bi in range(len(blocks)):
            boundary_handles.add(("vb", v, bi))

    clusters = []
    boundaries = []
    supports = []
    for comp in cluster_pieces:
        vnames: list[str] = []
        seen = set()
        edges = []
        marks = set()
        for eid, t0, t1, lh, rh in comp:
            for h in (lh, rh):
                nm = _handle_name(h)
                if nm not in seen:
                    seen.add(nm)
                    vnames.append(nm)
                if h in boundary_handles:
                    marks.add(nm)
            base = g.edge_map[eid]
            exact = None
            if t0 == 0.0 and t1 == 1.0:
                exact = base.exact
            edges.append(
                Edge(
                    f"{eid}:{t0:.17g}:{t1:.17g}" if (t0, t1) != (0.0, 1.0) else eid,
                    _handle_name(lh),
                    _handle_name(rh),
                    (t1 - t0) * base.length,
                    exact,
                )
            )
        clusters.append(MetricGraph(tuple(vnames), tuple(edges), frozenset(marks)))
        boundaries.append(frozenset(marks))
        supports.append(tuple((eid, t0, t1) for eid, t0, t1, _, _ in comp))

    # cluster index per handle, for the rigidity test
    handle_cluster = {}
    for ci, comp in enumerate(cluster_pieces):
        for _, _, _, lh, rh in comp:
            handle_cluster[lh] = ci
            handle_cluster[rh] = ci

    label = RIGID
    for e, ts in cuts.items():
        for i in range(len(ts)):
            if handle_cluster[("cut", e, i, "L")] == handle_cluster[("cut", e, i, "R")]:
                label = CONNECTED_ONLY
    for v, blocks in splits.items():
        touched = {handle_cluster[("vb", v, bi)] for bi in range(len(blocks))}
        if len(touched) < 2:
            label = CONNECTED_ONLY

    return Partition(
        graph=g,
        cut_config=config,
        clusters=tuple(clusters),
        boundaries=tuple(boundaries),
        supports=tuple(supports),
        classification=label,
    )


def classify(p: Partition) -> str:
    """Validity and rigidity label; apply_cuts precomputes it, manual
    partitions get re-checked here."""
    for c in p.clusters:
        if not c.edges or not c.is_connected():
            return INVALID
        if c.total_length <= 0.0:
            return INVALID
    covered: dict[str, list[tuple[float, float]]] = {}
    for sup in p.supports:
        for eid, t0, t1 in sup:
            if t1 <= t0:
                return INVALID
            covered.setdefault(eid, []).append((t0, t1))
    for e in p.graph.edges:
        spans = sorted(covered.get(e.id, []))
        pos = 0.0
        for t0, t1 in spans:
            if abs(t0 - pos) > 1e-12:
                return INVALID
            pos = t1
        if abs(pos - 1.0) > 1e-12:
            return INVALID
    return p.classification


# ---------------------------------------------------------------------------
# Energies
# ---------------------------------------------------------------------------


def p_mean(values, p: float) -> float:
    """p-th power mean; max for p = inf, computed against overflow."""
    vals = list(values)
    if not vals:
        raise ValidationError("empty value list")
    top = max(vals)
    if math.isinf(p):
        return top
    if p < 1:
        raise ValidationError("p must satisfy p >= 1")
    if top == 0.0:
        return 0.0
    acc = sum((v / top) ** p for v in vals) / len(vals)
    return top * acc ** (1.0 / p)


def energy(p: Partition, problem: str, p_exponent: float = math.inf) -> EnergyReport:
    """Evaluate the p-mean partition energy.

    Dirichlet clusters take Dirichlet conditions at their cut points only;
    every cluster value is checked against its isoperimetric floor as a
    numerical tripwire.
    """
    if p.classification == INVALID or classify(p) == INVALID:
        raise ValidationError("cannot evaluate the energy of an invalid partition")
    if problem not in ("dirichlet", "natural"):
        raise ValidationError(f"unknown problem {problem!r}")
    per = []
    for i, (cluster, boundary) in enumerate(zip(p.clusters, p.boundaries)):
        ell = cluster.total_length
        if problem == "dirichlet":
            if not boundary:
                raise ValidationError(f"cluster {i} has no boundary vertex for the Dirichlet problem")
            lam = spectral.lambda1(cluster, boundary)
            floor = math.pi**2 / (4.0 * ell * ell)
        else:
            lam = spectral.mu2(cluster)
            floor = math.pi**2 / (ell * ell)
        if lam < floor * (1.0 - 1e-9):
            raise ComputationError(
                f"cluster {i} violates its isoperimetric floor: {lam} < {floor}"
            )
        per.append((i, lam, ell))
    val = p_mean([lam for _, lam, _ in per], p_exponent)
    return EnergyReport(
        problem=problem,
        p=p_exponent,
        per_cluster=tuple(per),
        energy=val,
        largest_cluster_length=max(ell for _, _, ell in per),
    )


def neighbours(p: Partition) -> dict[int, tuple[int, ...]]:
    """Cluster adjacency: i ~ j when a cut location touches both."""
    if classify(p) == INVALID:
        raise ValidationError("neighbours undefined for invalid partitions")
    name_cluster: dict[str, set[int]] = {}
    for ci, b in enumerate(p.boundaries):
        for nm in b:
            name_cluster.setdefault(nm, set()).add(ci)
    # group boundary names by originating cut location
    location_groups: dict[str, set[int]] = {}
    for nm, cls in name_cluster.items():
        if "#" in nm:
            loc = nm.split("#", 1)[0]
        elif "@" in nm:
            loc = nm.rsplit("@", 1)[0] + "@" + nm.rsplit("@", 1)[1][:-1]
        else:
            loc = nm
        location_groups.setdefault(loc, set()).update(cls)
    adj: dict[int, set[int]] = {i: set() for i in range(p.k)}
    for group in location_groups.values():
        for a in group:
            for b in group:
                if a != b:
                    adj[a].add(b)
    return {i: tuple(sorted(s)) for i, s in adj.items()}


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def serialize_cut_config(c: CutConfig) -> str:
    lines = []
    for e, t in c.interior_cuts:
        lines.append(f"cut {e} {t!r}")
    for v, blocks in c.vertex_splits:
        blk = "|".join(",".join(f"{e}.{end}" for e, end in sorted(b)) for b in blocks)
        lines.append(f"split {v} {blk}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_cut_config(text: str) -> CutConfig:
    cuts = []
    splits: dict[str, list] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "cut" and len(parts) == 3:
            cuts.append((parts[1], float(parts[2])))
        elif parts[0] == "split" and len(parts) == 3:
            blocks = []
            for blob in parts[2].split("|"):
                stubs = []
                for tok in blob.split(","):
                    eid, end = tok.rsplit(".", 1)
                    stubs.append((eid, int(end)))
                blocks.append(frozenset(stubs))
            splits[parts[1]] = blocks
        else:
            raise ValidationError(f"cut-config line {lineno}: cannot parse {line!r}")
    return CutConfig.make(cuts, splits)
