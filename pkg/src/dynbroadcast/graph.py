"""Immutable undirected simple graphs and the graph families used throughout.

Nodes are dense integer ids 0..n-1. Constructed family graphs carry a
``FamilyInfo`` annotation with human-readable structure (poles, path node
sequences, clique membership, hub, grid coordinates) so that strategies can
be written against structure instead of raw ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Any, Iterable, Mapping

Edge = tuple[int, int]


class GraphError(ValueError):
    """Invalid graph construction or invalid node/edge reference."""


def _norm_edge(u: int, v: int) -> Edge:
    if u == v:
        raise GraphError(f"self-loop at node {u}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class FamilyInfo:
    """Family annotation: kind, integer parameters, structural labels."""

    kind: str
    params: tuple[int, ...]
    labels: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)


@dataclass(frozen=True)
class Graph:
    """Undirected simple connected graph on nodes 0..node_count-1."""

    node_count: int
    edges: frozenset[Edge]
    family: FamilyInfo | None = field(default=None, compare=False, hash=False)

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise GraphError("graph needs at least one node")
        for u, v in self.edges:
            if not (0 <= u < v < self.node_count):
                raise GraphError(f"bad edge ({u}, {v}) for node count {self.node_count}")

    # -- basic accessors -----------------------------------------------------

    @property
    def nodes(self) -> range:
        return range(self.node_count)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(nbrs)) for nbrs in adj)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency()[v]

    def has_edge(self, u: int, v: int) -> bool:
        return _norm_edge(u, v) in self.edges

    def degree(self, v: int) -> int:
        return len(self.adjacency()[v])

    # -- connectivity and metrics --------------------------------------------

    def is_connected(self, removed: frozenset[Edge] | None = None) -> bool:
        return is_connected(self.node_count, self.edges - (removed or frozenset()))

    def without(self, removed: Iterable[Edge]) -> "Graph":
        """Surviving graph after an edge removal; keeps the family annotation."""
        gone = frozenset(_norm_edge(u, v) for u, v in removed)
        missing = gone - self.edges
        if missing:
            raise GraphError(f"edges not in graph: {sorted(missing)}")
        return Graph(self.node_count, self.edges - gone, self.family)

    def distances_from(self, source: int) -> list[int]:
        """BFS distances; unreachable nodes get -1."""
        dist = [-1] * self.node_count
        dist[source] = 0
        adj = self.adjacency()
        frontier = [source]
        while frontier:
            nxt = []
            for u in frontier:
                for w in adj[u]:
                    if dist[w] < 0:
                        dist[w] = dist[u] + 1
                        nxt.append(w)
            frontier = nxt
        return dist

    def distance(self, u: int, v: int) -> int:
        d = self.distances_from(u)[v]
        if d < 0:
            raise GraphError(f"nodes {u} and {v} are disconnected")
        return d

    def bridges(self) -> frozenset[Edge]:
        """All cut-edges, by removal probing (desk scale)."""
        return frozenset(
            e for e in self.edges if not is_connected(self.node_count, self.edges - {e})
        )


def is_connected(node_count: int, edges: Iterable[Edge]) -> bool:
    adj: list[list[int]] = [[] for _ in range(node_count)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * node_count
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                count += 1
                stack.append(w)
    return count == node_count


def edge_density(g: Graph) -> Fraction:
    """Exact edge density m/n."""
    return Fraction(g.edge_count, g.node_count)


def _build(n: int, edges: Iterable[Edge], family: FamilyInfo | None = None) -> Graph:
    g = Graph(n, frozenset(_norm_edge(u, v) for u, v in edges), family)
    if not g.is_connected():
        raise GraphError("constructed graph is not connected")
    return g


# -- standard families --------------------------------------------------------


def make_path(n: int) -> Graph:
    if n < 2:
        raise GraphError("path needs n >= 2")
    return _build(n, [(i, i + 1) for i in range(n - 1)], FamilyInfo("path", (n,)))


def make_ring(n: int) -> Graph:
    if n < 3:
        raise GraphError("ring needs n >= 3")
    edges = [(i, (i + 1) % n) for i in range(n)]
    return _build(n, edges, FamilyInfo("ring", (n,)))


def make_complete(n: int) -> Graph:
    if n < 2:
        raise GraphError("complete graph needs n >= 2")
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return _build(n, edges, FamilyInfo("complete", (n,)))


def grid_node(rows: int, cols: int, r: int, c: int) -> int:
    return r * cols + c


def make_grid(rows: int, cols: int) -> Graph:
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise GraphError("grid needs at least two nodes")
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((grid_node(rows, cols, r, c), grid_node(rows, cols, r, c + 1)))
            if r + 1 < rows:
                edges.append((grid_node(rows, cols, r, c), grid_node(rows, cols, r + 1, c)))
    fam = FamilyInfo("grid", (rows, cols), {"rows": rows, "cols": cols})
    return _build(rows * cols, edges, fam)


# -- paper families ------------------------------------------------------------


def make_theta(internal_lengths: list[int] | tuple[int, ...]) -> Graph:
    """Two poles N=0, S=1 joined by one internally disjoint path per entry.

    Entry i is the number of internal nodes of path i; zero would create a
    multi-edge between the poles, which simple graphs forbid.
    """
    ds = tuple(internal_lengths)
    if not ds:
        raise GraphError("theta needs at least one path")
    if any(d < 1 for d in ds):
        raise GraphError("every theta path needs at least one internal node")
    north, south = 0, 1
    edges: list[Edge] = []
    paths: list[list[int]] = []
    nxt = 2
    for d in ds:
        internal = list(range(nxt, nxt + d))
        nxt += d
        seq = [north] + internal + [south]
        paths.append(seq)
        edges.extend(zip(seq, seq[1:]))
    fam = FamilyInfo(
        "theta",
        ds,
        {"north": north, "south": south, "paths": [list(p) for p in paths]},
    )
    return _build(nxt, edges, fam)


def make_lollipop(k: int, path_edges: int) -> Graph:
    """Clique on k+2 nodes sharing exactly one node with a path of path_edges edges."""
    if k < 1 or path_edges < 1:
        raise GraphError("lollipop needs k >= 1 and path_edges >= 1")
    clique = list(range(k + 2))
    junction = k + 1
    path_nodes = [junction] + list(range(k + 2, k + 2 + path_edges))
    edges = [(i, j) for i in clique for j in clique if i < j]
    edges += list(zip(path_nodes, path_nodes[1:]))
    fam = FamilyInfo(
        "lollipop",
        (k, path_edges),
        {"clique": clique, "junction": junction, "path": path_nodes},
    )
    return _build(k + 2 + path_edges, edges, fam)


def make_clique_star(n: int, lam: int) -> Graph:
    """lam disjoint cliques on (n-1)/lam nodes plus a hub adjacent to everyone."""
    if lam < 1 or n < 3:
        raise GraphError("clique star needs n >= 3 and lambda >= 1")
    if (n - 1) % lam != 0:
        raise GraphError(f"lambda={lam} must divide n-1={n - 1}")
    block_size = (n - 1) // lam
    if block_size < 2:
        raise GraphError("each block needs at least 2 non-hub nodes")
    hub = 0
    blocks: list[list[int]] = []
    edges: list[Edge] = []
    nxt = 1
    for _ in range(lam):
        block = list(range(nxt, nxt + block_size))
        nxt += block_size
        blocks.append(block)
        edges += [(i, j) for i in block for j in block if i < j]
        edges += [(hub, i) for i in block]
    fam = FamilyInfo("clique_star", (n, lam), {"hub": hub, "blocks": blocks})
    return _build(n, edges, fam)


def make_density_family(n: int, f: int) -> Graph:
    """Theta graph with (n-2)/f paths of f internal nodes each: n nodes total."""
    if f < 1:
        raise GraphError("f must be >= 1")
    if n < 4 or (n - 2) % f != 0:
        raise GraphError(f"f={f} must divide n-2={n - 2} with n >= 4")
    ell = (n - 2) // f
    g = make_theta([f] * ell)
    fam = FamilyInfo("density_family", (n, f), dict(g.family.labels))
    return Graph(g.node_count, g.edges, fam)


# -- surgery -------------------------------------------------------------------


def glue_at_vertex(g: Graph, v: int, h: Graph, u: int) -> Graph:
    """Disjoint union of g and h with v (in g) and u (in h) identified."""
    if not (0 <= v < g.node_count):
        raise GraphError(f"node {v} not in first graph")
    if not (0 <= u < h.node_count):
        raise GraphError(f"node {u} not in second graph")

    def relabel(w: int) -> int:
        if w == u:
            return v
        return g.node_count + w - (1 if w > u else 0)

    edges = set(g.edges)
    edges.update(_norm_edge(relabel(a), relabel(b)) for a, b in h.edges)
    fam = FamilyInfo("glued", (), {"shared_node": v})
    return _build(g.node_count + h.node_count - 1, edges, fam)


def contract_cut_edges(g: Graph) -> tuple[Graph, dict[int, int]]:
    """Contract every bridge; returns the result and the old->new node mapping."""
    if not g.is_connected():
        raise GraphError("graph must be connected")
    parent = list(range(g.node_count))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in g.bridges():
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)

    roots = sorted({find(x) for x in range(g.node_count)})
    new_id = {r: i for i, r in enumerate(roots)}
    mapping = {x: new_id[find(x)] for x in range(g.node_count)}
    edges = {
        _norm_edge(mapping[u], mapping[v]) for u, v in g.edges if mapping[u] != mapping[v]
    }
    fam = FamilyInfo("contracted", (), {"source_kind": g.family.kind if g.family else None})
    return Graph(len(roots), frozenset(edges), fam), mapping


# -- canonical JSON ------------------------------------------------------------


def sorted_edges(g: Graph) -> list[list[int]]:
    return [list(e) for e in sorted(g.edges)]


def graph_to_json(g: Graph) -> str:
    """Canonical byte-stable JSON: edges with u < v, sorted lexicographically."""
    doc: dict[str, Any] = {"nodes": g.node_count, "edges": sorted_edges(g)}
    if g.family is not None:
        doc["family"] = {
            "kind": g.family.kind,
            "params": list(g.family.params),
            "labels": g.family.labels,
        }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def graph_from_json(text: str) -> Graph:
    doc = json.loads(text)
    fam = None
    if "family" in doc:
        fam = FamilyInfo(
            doc["family"]["kind"],
            tuple(doc["family"]["params"]),
            doc["family"].get("labels", {}),
        )
    edges = frozenset(_norm_edge(u, v) for u, v in doc["edges"])
    g = Graph(doc["nodes"], edges, fam)
    if fam is not None:
        _check_label_nodes(g)
    return g


def _check_label_nodes(g: Graph) -> None:
    def walk(x: Any) -> Iterable[int]:
        if isinstance(x, bool):
            return
        if isinstance(x, int):
            yield x
        elif isinstance(x, (list, tuple)):
            for y in x:
                yield from walk(y)
        elif isinstance(x, dict):
            for y in x.values():
                yield from walk(y)

    assert g.family is not None
    for ref in walk(dict(g.family.labels)):
        if not (0 <= ref < g.node_count):
            raise GraphError(f"family label references invalid node {ref}")


# -- expected counts used by postcondition checks ------------------------------


def theta_expected_counts(ds: Iterable[int]) -> tuple[int, int]:
    ds = list(ds)
    return sum(ds) + 2, sum(d + 1 for d in ds)


def lollipop_expected_counts(k: int, path_edges: int) -> tuple[int, int]:
    return path_edges + k + 2, path_edges + comb(k + 2, 2)


def clique_star_expected_edges(n: int, lam: int) -> int:
    return lam * comb((n - 1) // lam + 1, 2)
