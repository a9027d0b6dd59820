import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispersion import portgraph as pg
from dispersion.portgraph import GraphSpec, from_edge_list, generate, m_prime, neighbor_via


def test_smallest_graph(p2):
    assert p2.n == 2 and p2.m == 1
    assert p2.degree(0) == p2.degree(1) == 1


def test_port_clash():
    with pytest.raises(pg.PortClash):
        from_edge_list(2, [(0, 0, 1, 0), (0, 0, 1, 1)])


def test_p3_ports(p3):
    assert p3.adjacency[1][0][0] == 0
    assert p3.adjacency[1][1][0] == 2


@pytest.mark.parametrize(
    "n, edges, err",
    [
        (2, [(0, 0, 0, 1)], pg.SelfLoop),
        (3, [(0, 0, 1, 0), (1, 1, 0, 1)], pg.DuplicateEdge),
        (2, [(0, 1, 1, 0)], pg.PortGap),
        (4, [(0, 0, 1, 0), (2, 0, 3, 0)], pg.Disconnected),
        (2, [(0, 0, 5, 0)], pg.GraphError),
    ],
)
def test_invalid_edge_lists(n, edges, err):
    with pytest.raises(err):
        from_edge_list(n, edges)


def test_neighbor_via(p2, p3):
    assert neighbor_via(p3, 1, 1) == (2, 0)
    assert neighbor_via(p2, 0, 0) == (1, 0)
    with pytest.raises(pg.InvalidPort):
        neighbor_via(p3, 0, 1)
    with pytest.raises(pg.InvalidPort):
        neighbor_via(p3, 0, -1)


def test_generate_examples():
    path = generate(GraphSpec("path", {"n": 5}, seed=1))
    assert (path.m, path.max_degree) == (4, 2)
    k4 = generate(GraphSpec("complete", {"n": 4}, seed=7))
    assert (k4.m, k4.max_degree) == (6, 3)
    ring = generate(GraphSpec("ring", {"n": 3}, seed=0))
    k3 = generate(GraphSpec("complete", {"n": 3}, seed=0))
    as_sets = lambda g: {(u, v) for u, _, v, _ in g.edges()}  # noqa: E731
    assert as_sets(ring) == as_sets(k3)


def test_grid_is_four_neighbour_lattice():
    g = generate(GraphSpec("grid", {"rows": 3, "cols": 4}, seed=2))
    assert g.n == 12 and g.m == 3 * 3 + 2 * 4
    assert g.max_degree == 4
    assert pg.grid_shape(12) == (3, 4)


def test_tree_has_n_minus_one_edges():
    g = generate(GraphSpec("tree", {"n": 40}, seed=3))
    assert g.m == 39


def test_generate_bad_params():
    with pytest.raises(pg.InvalidParams):
        generate(GraphSpec("ring", {"n": 2}))
    with pytest.raises(pg.InvalidParams):
        generate(GraphSpec("hypercube", {"n": 8}))
    with pytest.raises(pg.InvalidParams):
        generate(GraphSpec("erdos-renyi", {"n": 8, "p": 1.5}))


def test_erdos_renyi_gives_up():
    with pytest.raises(pg.ConnectivityFailure):
        generate(GraphSpec("erdos-renyi", {"n": 30, "p": 0.0}, seed=1))


@pytest.mark.parametrize(
    "spec, k, expected",
    [
        (GraphSpec("complete", {"n": 4}), 2, 1),
        (GraphSpec("path", {"n": 5}), 5, 4),
        (GraphSpec("ring", {"n": 10}), 4, 4),
    ],
)
def test_m_prime(spec, k, expected):
    assert m_prime(generate(spec), k) == expected


def test_roundtrip_is_byte_stable(p3):
    text = pg.dumps(p3)
    assert text == "3 2\n0 0 1 0\n1 1 2 0\n"
    again = pg.loads(text)
    assert again == p3
    assert pg.dumps(again) == text


def test_load_examples(tmp_path):
    assert pg.loads("2 1\n0 0 1 0\n") == from_edge_list(2, [(0, 0, 1, 0)])
    with pytest.raises(pg.ParseError):
        pg.loads("3 2\n0 0 1 0\n")
    with pytest.raises(pg.ParseError):
        pg.loads("2 1\n0 0 x 0\n")
    with pytest.raises(pg.PortClash):
        pg.loads("3 2\n0 0 1 0\n0 0 2 0\n")
    path = tmp_path / "g.txt"
    g = generate(GraphSpec("tree", {"n": 20}, seed=9))
    pg.save(g, path)
    assert pg.load(path) == g
    buf = io.StringIO()
    pg.save(g, buf)
    buf.seek(0)
    assert pg.load(buf) == g
    assert generate(GraphSpec("file", {"path": str(path)})) == g


specs = st.builds(
    lambda fam, n, seed: GraphSpec(fam, {"n": n, "p": 0.3} if fam == "erdos-renyi" else {"n": n}, seed),
    st.sampled_from(["path", "ring", "tree", "grid", "erdos-renyi", "complete"]),
    st.integers(3, 24),
    st.integers(0, 2**64 - 1),
)


@settings(max_examples=60, deadline=None)
@given(specs)
def test_generated_graph_invariants(spec):
    g = generate(spec)
    for v in range(g.n):
        assert len(set(g.neighbors(v))) == g.degree(v)
        assert v not in g.neighbors(v)
        for p in range(g.degree(v)):
            u, q = neighbor_via(g, v, p)
            assert neighbor_via(g, u, q) == (v, p)
    assert generate(spec) == g
    assert pg.loads(pg.dumps(g)) == g


@settings(max_examples=60, deadline=None)
@given(specs, st.data())
def test_m_prime_bounds(spec, data):
    g = generate(spec)
    k = data.draw(st.integers(1, g.n))
    mp = m_prime(g, k)
    assert mp <= g.m
    assert mp <= k * (k - 1) // 2
    assert mp <= k * g.max_degree / 2
