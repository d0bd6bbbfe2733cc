"""Pattern-graph operations: parsing, reductions, combinatorial quantities."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from uptail import graphs as G
from uptail.errors import DomainError, ParseError, ResourceError


def _random_graph(rng, n, p=0.5):
    edges = tuple(
        (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p
    )
    return G.Graph(n, edges)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def test_parse_named_specs():
    k3 = G.parse_graph("cycle:3")
    assert k3.vertex_count == 3 and k3.edge_count == 3
    assert G.parse_graph("clique:4").edge_count == 6
    assert G.parse_graph("star:3").degrees() == [3, 1, 1, 1]
    assert G.parse_graph("path:4").edge_count == 3
    kb = G.parse_graph("complete_bipartite:2:3")
    assert kb.vertex_count == 5 and kb.edge_count == 6


def test_parse_edge_list():
    g = G.parse_graph("0 1\n1 2")
    assert g.vertex_count == 3 and g.edges == ((0, 1), (1, 2))
    g = G.parse_graph("# comment\n\n0 1\n 2 3 \n")
    assert g.edge_count == 2 and g.vertex_count == 4


@pytest.mark.parametrize(
    "text",
    ["0 0", "0 1\n0 1", "0 1\n1", "a b", "frobnicate:3", "cycle:x", "0 -1"],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        G.parse_graph(text)


# ---------------------------------------------------------------------------
# two_core
# ---------------------------------------------------------------------------

def test_two_core_examples():
    k3 = G.clique(3)
    core, kept = G.two_core(k3)
    assert core.edges == k3.edges and kept == [0, 1, 2]

    core, kept = G.two_core(G.path(4))
    assert core.vertex_count == 0 and kept == []

    # K3 with one pendant vertex: peel the pendant by hand -> K3 remains
    g = G.Graph(4, ((0, 1), (0, 2), (1, 2), (2, 3)))
    core, kept = G.two_core(g)
    assert kept == [0, 1, 2]
    assert core.edges == ((0, 1), (0, 2), (1, 2))


def test_two_core_idempotent():
    rng = np.random.default_rng(424)
    for _ in range(40):
        g = _random_graph(rng, int(rng.integers(2, 9)), 0.35)
        core1, _ = G.two_core(g)
        core2, kept2 = G.two_core(core1)
        assert core2.edges == core1.edges
        assert kept2 == list(range(core1.vertex_count))


# ---------------------------------------------------------------------------
# delta_star / h_star
# ---------------------------------------------------------------------------

def test_delta_star_examples():
    assert G.delta_star(G.clique(3)) == 2
    assert G.delta_star(G.star(3)) == 2
    assert G.delta_star(G.cycle(5)) == 2
    assert G.delta_star(G.clique(4)) == 3
    with pytest.raises(DomainError):
        G.delta_star(G.Graph(3, ()))


def test_h_star_examples():
    k3 = G.clique(3)
    assert G.h_star(k3).edges == k3.edges
    # K_{1,2}: the apex has degree 2, leaves degree 1
    hs = G.h_star(G.star(2))
    assert hs.vertex_count == 1 and hs.edge_count == 0
    c4 = G.cycle(4)
    assert G.h_star(c4).vertex_count == 4 and G.h_star(c4).edge_count == 4


def test_h_star_regular_identity():
    rng = np.random.default_rng(7)
    for g in (G.cycle(5), G.clique(4), G.complete_bipartite(3, 3)):
        hs = G.h_star(g)
        assert hs.vertex_count == g.vertex_count
        assert hs.edges == g.edges
    del rng


# ---------------------------------------------------------------------------
# independence polynomial / independent sets
# ---------------------------------------------------------------------------

def _independent_subsets_oracle(g):
    out = []
    adj = g.neighbors()
    for r in range(g.vertex_count + 1):
        for subset in itertools.combinations(range(g.vertex_count), r):
            ok = all(v not in adj[u] for u, v in itertools.combinations(subset, 2))
            if ok:
                out.append(frozenset(subset))
    return out


def test_independence_polynomial_examples():
    assert G.independence_polynomial(G.clique(3)).coefficients == (1, 3)
    assert G.independence_polynomial(G.Graph(1, ())).coefficients == (1, 1)
    assert G.independence_polynomial(G.cycle(4)).coefficients == (1, 4, 2)


def test_independent_sets_examples():
    sets = G.independent_sets(G.clique(3))
    assert sets == [frozenset(), frozenset({0}), frozenset({1}), frozenset({2})]
    assert len(G.independent_sets(G.Graph(2, ()))) == 4
    assert len(G.independent_sets(G.cycle(4))) == 7


def test_polynomial_matches_enumeration():
    rng = np.random.default_rng(99)
    for _ in range(30):
        g = _random_graph(rng, int(rng.integers(1, 9)), 0.4)
        oracle = _independent_subsets_oracle(g)
        poly = G.independence_polynomial(g)
        sets = G.independent_sets(g)
        assert sorted(sets, key=lambda s: (len(s), sorted(s))) == sets
        assert set(sets) == set(oracle)
        assert sum(poly.coefficients) == len(oracle)
        assert poly(0.0) == 1.0
        assert poly(1.0) == len(oracle)
        assert poly.coefficients[0] == 1
        if g.vertex_count:
            assert poly.coefficients[1] == g.vertex_count


def test_enumeration_cap():
    big = G.Graph(21, ())
    with pytest.raises(ResourceError):
        G.independence_polynomial(big)
    with pytest.raises(ResourceError):
        G.independent_sets(big)


# ---------------------------------------------------------------------------
# f exponent
# ---------------------------------------------------------------------------

def _f_exponent_oracle(g):
    """Literal double enumeration over subsets, kept separate from the
    library implementation."""
    n = g.vertex_count
    verts = list(range(n))

    def e_in(subset):
        s = set(subset)
        return sum(1 for u, v in g.edges if u in s and v in s)

    best = Fraction(0)
    for r in range(1, n + 1):
        for f_set in itertools.combinations(verts, r):
            best = max(best, Fraction(2 * e_in(f_set), len(f_set)))
    for rs in range(1, n + 1):
        for s_set in itertools.combinations(verts, rs):
            rest = [v for v in verts if v not in s_set]
            for rt in range(rs + 1, len(rest) + 1):
                for t_set in itertools.combinations(rest, rt):
                    val = 1 + Fraction(
                        e_in(s_set + t_set) - e_in(t_set) - len(t_set), len(s_set)
                    )
                    best = max(best, val)
    return best


DIAMOND = G.Graph(4, ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3)))


def test_f_exponent_examples():
    assert G.f_exponent(G.clique(3)) == 2
    assert G.f_exponent(G.clique(4)) == 3
    assert G.f_exponent(DIAMOND) == Fraction(5, 2)


def test_f_exponent_against_oracle():
    rng = np.random.default_rng(5)
    cases = [G.cycle(4), G.cycle(5), DIAMOND, G.complete_bipartite(2, 3)]
    tries = 0
    while len(cases) < 10 and tries < 200:
        tries += 1
        g = _random_graph(rng, int(rng.integers(3, 7)), 0.6)
        if g.vertex_count and g.min_degree() >= 2:
            cases.append(g)
    for g in cases:
        assert G.f_exponent(g) == _f_exponent_oracle(g)
        # first term with F = V is a hard lower bound
        assert G.f_exponent(g) >= Fraction(2 * g.edge_count, g.vertex_count)


def test_f_exponent_requires_two_core():
    with pytest.raises(DomainError):
        G.f_exponent(G.path(4))
