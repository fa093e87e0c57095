"""Structural analysis: connectivity measures, bonds, and certified bounds on
the number of agents needed to broadcast against an adversary.

Lower-bound certificates:
  * a minimal edge cut of m pairwise non-adjacent edges lets the adversary
    confine the message to one side unless at least m-1 agents start ignorant;
  * in a 3-vertex-connected graph the adversary wins against up to
    (min degree - 2) ignorant agents by shielding one vertex.

Exact values are attached for recognized families (generalized theta graphs
with all path lengths >= 3, trees, complete graphs, rings, clique stars,
lollipops, and the equal-length theta density family).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import ceil

import networkx as nx

from .graph import Edge, Graph, is_connected


def _nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.node_count))
    h.add_edges_from(g.edges)
    return h


def min_degree(g: Graph) -> int:
    return min(g.degree(v) for v in range(g.node_count))


def edge_connectivity(g: Graph) -> int:
    return nx.edge_connectivity(_nx(g))


def vertex_connectivity(g: Graph) -> int:
    """Vertex connectivity; n-1 for the complete graph by convention."""
    return nx.node_connectivity(_nx(g))


@dataclass(frozen=True)
class Bond:
    """A minimal edge cut: removing it disconnects the graph into exactly the
    two sides, and every proper subset leaves the graph connected."""

    edges: frozenset[Edge]
    side_a: frozenset[int]
    side_b: frozenset[int]

    @property
    def is_matching(self) -> bool:
        """No two cut edges share an endpoint."""
        seen: set[int] = set()
        for u, v in self.edges:
            if u in seen or v in seen:
                return False
            seen.update((u, v))
        return True


def enumerate_bonds(g: Graph, max_nodes: int = 16) -> list[Bond]:
    """All bonds, found by scanning connected bipartitions (exponential in n)."""
    n = g.node_count
    if n > max_nodes:
        raise ValueError(f"bond enumeration limited to {max_nodes} nodes")
    adjacency = g.adjacency()
    bonds = []
    # Fix node 0 on side A to avoid mirrored duplicates.
    rest = list(range(1, n))
    for r in range(0, n - 1):
        for extra in combinations(rest, r):
            side_a = frozenset((0,) + extra)
            side_b = frozenset(v for v in range(n) if v not in side_a)
            if not side_b:
                continue
            cut = frozenset(
                (u, v) for (u, v) in g.edges if (u in side_a) != (v in side_a)
            )
            if not cut:
                continue
            if _connected_within(side_a, adjacency) and _connected_within(
                side_b, adjacency
            ):
                bonds.append(Bond(cut, side_a, side_b))
    return bonds


def _connected_within(nodes: frozenset[int], adjacency) -> bool:
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adjacency[v]:
            if w in nodes and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(nodes)


def y_set_diameter(g: Graph, y: int) -> int:
    """Smallest diameter of an induced connected subgraph on y nodes, measured
    in the base graph; the best-case spread of y agents that must meet."""
    if not 1 <= y <= g.node_count:
        raise ValueError("y out of range")
    adjacency = g.adjacency()
    best = None
    for nodes in combinations(range(g.node_count), y):
        node_set = frozenset(nodes)
        if not _connected_within(node_set, adjacency):
            continue
        diam = max(
            (g.distance(u, v) for u, v in combinations(nodes, 2)), default=0
        )
        if best is None or diam < best:
            best = diam
    if best is None:
        raise ValueError("no connected subset of that size")
    return best


@dataclass(frozen=True)
class TimingBounds:
    """Exact worst-case round counts on a path with x ignorant agents at one
    end and y sources at the other.

    Ceiling convention: the facing pair starts at graph distance n-x-y+1 (one
    more than the number of free nodes between the blocks), and agents meet by
    co-location, never by swapping along an edge, so the first conversion
    takes exactly ceil((n-x-y+1)/2) rounds."""

    first_new_source: int
    all_sources: int

    @staticmethod
    def of(n: int, x: int, y: int) -> "TimingBounds":
        return TimingBounds(
            first_new_source=ceil((n - x - y + 1) / 2),
            all_sources=ceil((n - y) / 2),
        )


def timing_bounds(n: int, x: int, y: int) -> TimingBounds:
    """Worst-case rounds for the first conversion and for full broadcast when
    x agents roam and y agents (including the source) hold a connected block."""
    if y < 1 or x < 0 or x + y > n:
        raise ValueError("invalid agent split")
    return TimingBounds.of(n, x, y)


def tree_meeting_bound(diameter: int) -> int:
    """Rounds for two agents walking toward each other on a tree of the given
    diameter (edges cannot be removed from a tree)."""
    return ceil(diameter / 2)


@dataclass(frozen=True)
class BoundEntry:
    kind: str
    bound_type: str  # "lower", "upper", or "exact"
    value: int
    certificate: tuple = ()
    note: str = ""


@dataclass
class BoundReport:
    graph: Graph
    entries: list[BoundEntry] = field(default_factory=list)

    @property
    def best_lower(self) -> int:
        vals = [e.value for e in self.entries if e.bound_type in ("lower", "exact")]
        return max(vals, default=1)

    @property
    def exact(self) -> int | None:
        for e in self.entries:
            if e.bound_type == "exact":
                return e.value
        return None

    def by_kind(self, kind: str) -> BoundEntry | None:
        for e in self.entries:
            if e.kind == kind:
                return e
        return None


def _theta_lengths(g: Graph) -> tuple[int, ...] | None:
    """Internal path lengths if the graph is a generalized theta, else None.

    Trusts family metadata when present, after a structural sanity check;
    otherwise detects the shape from degrees (exactly two nodes of degree
    >= 3 joined by internally disjoint paths of degree-2 nodes)."""
    fam = g.family
    if fam is not None and fam.kind == "theta":
        lengths = tuple(fam.params)
        labels = fam.labels
        if _theta_matches(g, lengths, labels.get("north", 0), labels.get("south", 1)):
            return lengths
    # Structural detection.
    if g.node_count < 3:
        return None
    hubs = [v for v in range(g.node_count) if g.degree(v) >= 3]
    if len(hubs) == 0:
        return None
    if len(hubs) != 2:
        return None
    north, south = hubs
    lengths = _trace_theta_paths(g, north, south)
    return lengths


def _trace_theta_paths(g: Graph, north: int, south: int) -> tuple[int, ...] | None:
    adjacency = g.adjacency()
    seen = {north, south}
    lengths = []
    for start in adjacency[north]:
        if start == south:
            lengths.append(0)
            continue
        if start in seen:
            return None
        path = [start]
        prev, cur = north, start
        while True:
            if g.degree(cur) != 2:
                return None
            nxts = [w for w in adjacency[cur] if w != prev]
            nxt = nxts[0]
            if nxt == south:
                break
            if nxt in seen or nxt == north:
                return None
            path.append(nxt)
            prev, cur = cur, nxt
        seen.update(path)
        lengths.append(len(path))
    if len(seen) != g.node_count:
        return None
    return tuple(sorted(lengths))


def _theta_matches(g: Graph, lengths, north, south) -> bool:
    expected_nodes = sum(lengths) + 2
    expected_edges = sum(d + 1 for d in lengths)
    return (
        g.node_count == expected_nodes
        and len(g.edges) == expected_edges
        and g.degree(north) == len(lengths)
        and g.degree(south) == len(lengths)
    )


def _is_tree(g: Graph) -> bool:
    return len(g.edges) == g.node_count - 1


def _is_complete(g: Graph) -> bool:
    n = g.node_count
    return len(g.edges) == n * (n - 1) // 2


def _is_ring(g: Graph) -> bool:
    return len(g.edges) == g.node_count and all(
        g.degree(v) == 2 for v in range(g.node_count)
    )


def bound_report(g: Graph, max_bond_nodes: int = 16) -> BoundReport:
    """Certified bounds on the minimum number of ignorant agents the agents
    need so that broadcast is forced from every starting placement."""
    report = BoundReport(g)
    entries = report.entries
    n = g.node_count

    # Exact values for recognized families.
    fam = g.family
    if _is_tree(g):
        entries.append(
            BoundEntry("tree_exact", "exact", 1, note="edges of a tree are unremovable")
        )
    elif _is_complete(g) and n >= 3:
        entries.append(BoundEntry("complete_exact", "exact", n - 2))
    elif _is_ring(g) and n >= 5:
        entries.append(BoundEntry("ring_exact", "exact", 2))
    else:
        lengths = _theta_lengths(g)
        if lengths is not None and all(d >= 3 for d in lengths) and len(lengths) >= 2:
            entries.append(
                BoundEntry(
                    "theta_exact",
                    "exact",
                    len(lengths),
                    certificate=lengths,
                    note="one agent per internal path",
                )
            )
            if fam is not None and fam.kind == "density_family":
                entries.append(
                    BoundEntry(
                        "density_family_exact",
                        "exact",
                        len(lengths),
                        certificate=tuple(fam.params),
                    )
                )
    if fam is not None and fam.kind == "clique_star":
        n_total, lam = fam.params
        if n_total == n:
            entries.append(
                BoundEntry(
                    "clique_star_exact", "exact", n - 2 * lam + 1, certificate=(lam,)
                )
            )
    if fam is not None and fam.kind == "lollipop":
        k, path_edges = fam.params
        entries.append(
            BoundEntry("lollipop_exact", "exact", k, certificate=(k, path_edges))
        )

    # Bond lower bound: a matching bond of m edges defeats m-2 ignorant agents,
    # so at least m-1 are needed.
    if n <= max_bond_nodes:
        best_bond = None
        for bond in enumerate_bonds(g, max_bond_nodes):
            if bond.is_matching and len(bond.edges) >= 2:
                if best_bond is None or len(bond.edges) > len(best_bond.edges):
                    best_bond = bond
        if best_bond is not None:
            entries.append(
                BoundEntry(
                    "bond_lower",
                    "lower",
                    len(best_bond.edges) - 1,
                    certificate=(best_bond,),
                )
            )

    # Degree shield lower bound in 3-vertex-connected graphs.
    if n >= 4 and vertex_connectivity(g) >= 3:
        delta = min_degree(g)
        if delta - 1 >= 1:
            entries.append(
                BoundEntry(
                    "vertex_conn_lower",
                    "lower",
                    delta - 1,
                    note="adversary shields a minimum-degree vertex",
                )
            )

    return report
