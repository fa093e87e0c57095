"""Connectivity metrics, bond enumeration, timing formulas, and bound reports."""

import itertools
from fractions import Fraction
from math import ceil

import networkx as nx
import pytest

from dynbroadcast.analysis import (
    Bond,
    bound_report,
    edge_connectivity,
    enumerate_bonds,
    min_degree,
    timing_bounds,
    tree_meeting_bound,
    vertex_connectivity,
    y_set_diameter,
)
from dynbroadcast.graph import (
    Graph,
    edge_density,
    make_clique_star,
    make_complete,
    make_density_family,
    make_grid,
    make_lollipop,
    make_path,
    make_ring,
    make_theta,
)


def atlas_graphs(max_nodes=5, min_nodes=2):
    for ga in nx.graph_atlas_g()[1:]:
        n = ga.number_of_nodes()
        if n < min_nodes or n > max_nodes or not nx.is_connected(ga):
            continue
        yield Graph(n, frozenset(tuple(sorted(e)) for e in ga.edges()))


class TestConnectivity:
    def test_connectivity_against_brute_force(self):
        """Edge connectivity equals the smallest disconnecting edge subset,
        checked by direct enumeration (independent of networkx)."""
        for g in atlas_graphs():
            want = None
            for r in range(0, g.edge_count + 1):
                if any(
                    not g.is_connected(frozenset(sub))
                    for sub in itertools.combinations(sorted(g.edges), r)
                ):
                    want = r
                    break
            assert edge_connectivity(g) == want

    def test_vertex_connectivity_examples(self):
        assert vertex_connectivity(make_complete(5)) == 4
        assert vertex_connectivity(make_theta([3, 3, 3])) == 2
        assert vertex_connectivity(make_path(5)) == 1

    def test_clique_star_edge_connectivity(self):
        # Hub family: edge connectivity (n-1)/lambda.
        g = make_clique_star(9, 2)
        assert edge_connectivity(g) == 4
        g = make_clique_star(7, 2)
        assert edge_connectivity(g) == 3

    def test_min_degree(self):
        assert min_degree(make_theta([3, 3, 3])) == 2
        assert min_degree(make_complete(4)) == 3


class TestBonds:
    def test_bonds_are_minimal_disconnecting_sets(self):
        for g in atlas_graphs(max_nodes=5, min_nodes=3):
            for bond in enumerate_bonds(g):
                assert not g.is_connected(bond.edges)
                for e in bond.edges:
                    assert g.is_connected(bond.edges - {e})

    def test_bond_sides_partition_nodes(self):
        g = make_theta([3, 3, 3])
        for bond in enumerate_bonds(g):
            assert bond.side_a | bond.side_b == frozenset(g.nodes)
            assert not (bond.side_a & bond.side_b)

    def test_matching_flag(self):
        # Two triangles joined by a perfect matching of 3 edges.
        edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)]
        g = Graph(6, frozenset(edges))
        matching = [b for b in enumerate_bonds(g) if b.is_matching]
        assert max(len(b.edges) for b in matching) == 3

    def test_theta_matching_bond_size(self):
        g = make_theta([3, 3, 3])
        matching = [b for b in enumerate_bonds(g) if b.is_matching]
        assert max(len(b.edges) for b in matching) == 3

    def test_bond_count_oracle(self):
        """Every minimal edge cut between a connected bipartition appears
        exactly once."""
        g = make_ring(5)
        bonds = enumerate_bonds(g)
        # On a ring every bond is a pair of edges: C(5,2) = 10.
        assert len(bonds) == 10
        assert all(len(b.edges) == 2 for b in bonds)


class TestTiming:
    def test_formulas(self):
        for n in range(2, 12):
            for x in (1, 2):
                for y in (1, 2):
                    if x + y > n:
                        continue
                    tb = timing_bounds(n, x, y)
                    assert tb.first_new_source == ceil((n - x - y + 1) / 2)
                    assert tb.all_sources == ceil((n - y) / 2)

    def test_tree_meeting_bound(self):
        for d in range(0, 10):
            assert tree_meeting_bound(d) == ceil(d / 2)

    def test_invalid_split_rejected(self):
        with pytest.raises(ValueError):
            timing_bounds(3, 3, 1)

    def test_y_set_diameter(self):
        g = make_path(6)
        assert y_set_diameter(g, 1) == 0
        assert y_set_diameter(g, 3) == 2


class TestBoundReport:
    def test_theta_exact(self):
        rep = bound_report(make_theta([3, 3, 3]))
        assert rep.exact == 3
        assert rep.best_lower == 3

    def test_tree_rule(self):
        rep = bound_report(make_path(6))
        assert rep.exact == 1

    def test_complete_rule(self):
        rep = bound_report(make_complete(5))
        assert rep.exact == 3
        entry = rep.by_kind("vertex_conn_lower")
        assert entry is not None and entry.value == 3

    def test_ring_rule(self):
        assert bound_report(make_ring(6)).exact == 2

    def test_clique_star_rule(self):
        rep = bound_report(make_clique_star(9, 2))
        assert rep.exact == 9 - 2 * 2 + 1  # n - 2*lambda + 1 = 6
        rep = bound_report(make_clique_star(7, 2))
        assert rep.exact == 4

    def test_lollipop_rule(self):
        assert bound_report(make_lollipop(2, 5)).exact == 2
        assert bound_report(make_lollipop(3, 2)).exact == 3

    def test_bond_lower_bound_present(self):
        rep = bound_report(make_theta([3, 3, 3]))
        entry = rep.by_kind("bond_lower")
        assert entry is not None
        assert entry.value == 2  # largest matching bond 3 -> m-1

    def test_unlabeled_theta_recognized_structurally(self):
        # Same theta without family metadata: structural detection still fires.
        g0 = make_theta([3, 3, 3])
        g = Graph(g0.node_count, g0.edges)
        assert bound_report(g).exact == 3


class TestDensityFormulas:
    def test_uniform_theta_closed_form(self):
        for ell in range(2, 9):
            for d in range(3, 9):
                if ell * d + 2 > 200:
                    continue
                g = make_theta([d] * ell)
                assert edge_density(g) == 1 + Fraction(ell - 2, ell * d + 2)

    def test_density_family_closed_form(self):
        for n in range(4, 201):
            for f in range(1, 8):
                if (n - 2) % f or (n - 2) // f < 2:
                    continue
                ell = (n - 2) // f
                g = make_density_family(n, f)
                assert edge_density(g) == 1 + Fraction(ell - 2, n)

    def test_lollipop_density_bounded(self):
        # k=2 blocks stay at or below density 3/2 for every path length.
        for p in range(1, 190):
            assert edge_density(make_lollipop(2, p)) <= Fraction(3, 2)

    def test_clique_star_density(self):
        from math import comb

        for lam in range(1, 6):
            for block in range(2, 8):
                n = lam * block + 1
                if n > 200:
                    continue
                g = make_clique_star(n, lam)
                assert edge_density(g) == Fraction(lam * comb(block + 1, 2), n)
