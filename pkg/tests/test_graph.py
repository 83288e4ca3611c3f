import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from gsr.graph import (Graph, GraphError, add_random_edges, bfs_spanning_tree, components,
                       eccentricities, gen_ba, gen_complete, gen_er, gen_g4, gen_g4_minus,
                       gen_grid, gen_line, gen_ring, gen_star, gen_tree_random, induced_subgraph,
                       is_connected, is_hub, is_tree, loads_graph, dumps_graph, load_graph,
                       radius_and_center, save_graph)


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


def test_graph_rejects_bad_edges():
    with pytest.raises(GraphError):
        Graph(3, [(0, 0)])
    with pytest.raises(GraphError):
        Graph(3, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        Graph(3, [(0, 3)])


def test_line_and_ring():
    assert gen_line(3).edges == {(0, 1), (1, 2)}
    assert gen_ring(3).edges == {(0, 1), (1, 2), (0, 2)}
    r = gen_ring(8)
    assert r.num_edges == 8 and all(r.degree(v) == 2 for v in range(8))
    with pytest.raises(GraphError):
        gen_line(1)


def test_g4_family():
    g = gen_g4(8)
    assert g.num_edges == 16 and all(g.degree(v) == 4 for v in range(8))
    h = gen_g4_minus(12, [4])
    assert gen_g4(12).edges - h.edges == {(3, 5)}
    assert gen_g4_minus(9, []) == gen_g4(9)
    with pytest.raises(GraphError):
        gen_g4_minus(12, [4, 4])
    with pytest.raises(GraphError):
        gen_g4(4)


@pytest.mark.parametrize("n", [5, 6, 11, 20])
def test_g4_minus_edge_count(n):
    D = list(range(0, n, 3))[: n // 3]
    assert gen_g4_minus(n, D).num_edges == 2 * n - len(D)


def test_grid_tree_er():
    assert gen_grid(3).n == 9 and gen_grid(3).num_edges == 12
    t = gen_tree_random(100, 5)
    assert is_tree(t) and t.num_edges == 99
    assert gen_er(60, 1.0, 1) == gen_complete(60)
    assert gen_er(30, 0.0, 1).num_edges == 0
    assert gen_tree_random(50, 3, "recursive") == gen_tree_random(50, 3, "recursive")
    assert gen_tree_random(50, 3) != gen_tree_random(50, 4)


def test_ba_shape():
    g = gen_ba(200, 10, 3, seed=1)
    assert g.num_edges == 9 + 3 * 190
    assert is_connected(g, range(g.n))
    assert g == gen_ba(200, 10, 3, seed=1)
    with pytest.raises(GraphError):
        gen_ba(20, 2, 3)


def test_add_random_edges():
    g = gen_tree_random(40, 0)
    h = add_random_edges(g, 25, 1)
    assert h.num_edges == 39 + 25 and g.edges <= h.edges


def test_is_connected_examples():
    assert not is_connected(gen_line(4), [0, 2])
    assert is_connected(gen_g4(8), [0, 2, 4])
    assert is_connected(gen_line(4), [3])
    with pytest.raises(GraphError):
        is_connected(gen_line(4), [])


def test_is_hub():
    g = gen_g4(10)
    assert is_hub(g, [1, 3, 5, 7, 9], [0, 2, 4, 6, 8])
    assert not is_hub(gen_line(5), [0, 2], [1])


def test_bfs_tree_and_radius():
    parent = bfs_spanning_tree(gen_ring(6), 0)
    assert parent == {0: None, 1: 0, 5: 0, 2: 1, 4: 5, 3: 2}
    assert radius_and_center(gen_ring(8))[0] == 4
    assert radius_and_center(gen_line(5)) == (2, 2)
    assert radius_and_center(gen_g4(16))[0] == 4
    with pytest.raises(GraphError):
        bfs_spanning_tree(Graph(3, [(0, 1)]), 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 60), st.floats(0.02, 0.4), st.integers(0, 10_000))
def test_radius_matches_networkx(n, p, seed):
    g = add_random_edges(gen_tree_random(n, seed), min(int(p * n), n * (n - 1) // 2 - (n - 1)), seed)
    h = to_nx(g)
    R, c = radius_and_center(g)
    assert R == nx.radius(h)
    assert c == min(nx.center(h))
    assert eccentricities(g) == nx.eccentricity(h)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.floats(0.0, 1.0), st.integers(0, 1000), st.data())
def test_is_connected_matches_networkx(n, p, seed, data):
    g = gen_er(n, p, seed)
    nodes = data.draw(st.sets(st.integers(0, n - 1), min_size=1))
    assert is_connected(g, nodes) == nx.is_connected(to_nx(g).subgraph(nodes))


def test_components_and_induced():
    g = Graph(6, [(0, 1), (2, 3), (3, 4)])
    assert components(g) == [[0, 1], [2, 3, 4], [5]]
    sub, ids = induced_subgraph(g, [2, 3, 4])
    assert ids == [2, 3, 4] and sub.edges == {(0, 1), (1, 2)}


def test_file_round_trip(tmp_path):
    g = gen_ba(50, 5, 2, seed=3)
    text = dumps_graph(g)
    assert loads_graph(text) == g
    assert dumps_graph(loads_graph(text)) == text
    path = tmp_path / "g.txt"
    save_graph(g, path)
    assert path.read_text() == text and load_graph(path) == g
    assert loads_graph("# comment\nn 3\n0 1\n\n# more\n1 2\n") == gen_line(3)
    with pytest.raises(GraphError):
        loads_graph("0 1\n")
