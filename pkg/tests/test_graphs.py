import random
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from copocert.copositive import CopStatus, horn, is_copositive
from copocert.exactpoly import ExactPolynomial, evaluate
from copocert.graphs import (
    Graph,
    GraphFormatError,
    add_isolated,
    all_graphs,
    alpha,
    complete,
    cycle,
    empty,
    format_graph,
    graph_matrix,
    graph_poly,
    parse_graph,
    petersen,
    random_graph,
    read_graph,
    theta_r,
    verify_isolated_identity,
    write_graph,
)
from copocert.symmat import SymmetricMatrix, quartic_form


def brute_alpha(G):
    adj = G.neighbours()
    for k in range(G.n, 0, -1):
        for S in combinations(range(G.n), k):
            if all(b not in adj[a] for a, b in combinations(S, 2)):
                return k
    return 0


@st.composite
def graphs_st(draw, max_n=8):
    n = draw(st.integers(0, max_n))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    edges = [e for e in pairs if draw(st.booleans())]
    return Graph(n, edges)


def test_alpha_examples():
    assert alpha(empty(6)) == 6
    assert alpha(complete(5)) == 1
    assert alpha(cycle(5)) == 2 == brute_alpha(cycle(5))
    assert alpha(Graph(0)) == 0
    assert alpha(petersen()) == 4
    assert alpha(add_isolated(cycle(5))) == 3


@given(graphs_st())
def test_alpha_matches_enumeration(G):
    assert alpha(G) == brute_alpha(G)


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(3, [(1, 1)])
    with pytest.raises(ValueError):
        Graph(3, [(1, 4)])
    assert Graph(3, [(1, 2), (2, 1)]).m == 1


def test_graph_matrix_examples():
    assert graph_matrix(cycle(5)) == horn()
    assert graph_matrix(complete(4)) == SymmetricMatrix.zeros(4)
    two = SymmetricMatrix.from_rows([[1, -1], [-1, 1]])
    assert graph_matrix(empty(2)) == two
    assert graph_matrix(add_isolated(Graph(1))) == two


def test_graph_poly_examples():
    assert graph_poly(complete(3)).is_zero()
    x1, x2 = ExactPolynomial.variable(2, 0), ExactPolynomial.variable(2, 1)
    assert graph_poly(empty(2)) == (x1**2 - x2**2) ** 2
    assert graph_poly(cycle(5)) == quartic_form(horn())
    # vanishes at (scaled) characteristic vectors of maximum stable sets
    assert evaluate(graph_poly(cycle(5)), (3, 0, 3, 0, 0)) == 0


@given(graphs_st(max_n=6).filter(lambda G: G.n > 0), st.integers(1, 5))
def test_graph_poly_vanishes_on_stable_sets(G, scale):
    adj = G.neighbours()
    a = alpha(G)
    for S in combinations(range(G.n), a):
        if all(b not in adj[u] for u, b in combinations(S, 2)):
            point = [scale if i in S else 0 for i in range(G.n)]
            assert evaluate(graph_poly(G), point) == 0
            break


def test_theta_examples():
    assert abs(theta_r(complete(3), 0) - 1) < 1e-6
    assert abs(theta_r(cycle(5), 1) - 2) < 1e-4
    assert theta_r(cycle(5), 0) > 2 + 1e-3
    with pytest.raises(ValueError):
        theta_r(Graph(0), 0)


@settings(max_examples=12)
@given(graphs_st(max_n=5).filter(lambda G: G.n > 0))
def test_theta_sandwich(G):
    a = alpha(G)
    t0 = theta_r(G, 0)
    t1 = theta_r(G, 1)
    assert a - 1e-4 <= t1 <= t0 + 1e-4


@settings(max_examples=30)
@given(graphs_st(max_n=6).filter(lambda G: G.n > 0))
def test_graph_matrix_is_copositive(G):
    assert is_copositive(graph_matrix(G), max_depth=6).status is not CopStatus.NOT_COPOSITIVE


def test_isolated_identity_examples():
    assert verify_isolated_identity(Graph(1))
    assert verify_isolated_identity(cycle(5))
    rng = random.Random(2)
    for _ in range(50):
        assert verify_isolated_identity(random_graph(rng.randint(1, 8), 0.5, rng))


@given(graphs_st().filter(lambda G: G.n > 0))
def test_isolated_identity_property(G):
    assert verify_isolated_identity(G)


def test_atlas_counts():
    counts = {}
    for G in all_graphs(5):
        counts[G.n] = counts.get(G.n, 0) + 1
    assert counts == {1: 1, 2: 2, 3: 4, 4: 11, 5: 34}


def test_dimacs_round_trip(tmp_path):
    G = petersen()
    text = format_graph(G)
    lines = text.splitlines()
    assert lines[0] == "p edge 10 15"
    assert lines[1:] == sorted(lines[1:], key=lambda s: tuple(map(int, s.split()[1:])))
    assert parse_graph(text) == G
    write_graph(G, tmp_path / "p.g")
    assert read_graph(tmp_path / "p.g") == G
    assert parse_graph("c comment\np edge 3 0\n") == Graph(3)


@given(graphs_st())
def test_dimacs_round_trip_property(G):
    assert parse_graph(format_graph(G)) == G


def test_dimacs_errors():
    for bad in ["e 1 2\n", "p edge 2 1\n", "p edge 2 1\ne 1 3\n", "p edge x 1\n", "p edge 2 0\nq 1\n"]:
        with pytest.raises(GraphFormatError):
            parse_graph(bad)
