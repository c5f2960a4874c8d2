import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geonet.graphs import (
    EdgeListError,
    Graph,
    average_path_length,
    clustering_coefficient,
    gen_ba,
    gen_er,
    gen_ws,
    load_edge_list,
    path_length_summary,
    save_edge_list,
)
from geonet.numkit import make_rng

from oracles import brute_apl, brute_clustering


def _check_invariants(g: Graph):
    assert np.all(np.diff(g.nodes) > 0)
    if g.m:
        assert np.all(g.edges[:, 0] < g.edges[:, 1])
        assert len(g.edge_set()) == g.m


@pytest.mark.parametrize("n", [1, 7, 30])
def test_er_extremes(n):
    empty, full = gen_er(n, 0.0, make_rng(0)), gen_er(n, 1.0, make_rng(0))
    assert empty.n == n and empty.m == 0
    assert full.m == n * (n - 1) // 2
    _check_invariants(full)


def test_er_edge_count_within_five_sigma():
    sigma = math.sqrt(4950 * 0.05 * 0.95)
    assert abs(gen_er(100, 0.05, make_rng(0)).m - 247.5) < 5 * sigma


def test_er_mean_over_seeds():
    counts = [gen_er(100, 0.05, make_rng(s)).m for s in range(50)]
    sigma = math.sqrt(4950 * 0.05 * 0.95)
    assert abs(np.mean(counts) - 247.5) < 3 * sigma / math.sqrt(50)


def test_generators_deterministic_per_seed():
    assert gen_er(50, 0.1, make_rng(4)) == gen_er(50, 0.1, make_rng(4))
    assert gen_ws(50, 4, 0.3, make_rng(4)) == gen_ws(50, 4, 0.3, make_rng(4))
    assert gen_ba(50, 3, make_rng(4)) == gen_ba(50, 3, make_rng(4))


@pytest.mark.parametrize("n,k", [(10, 2), (20, 4), (31, 6)])
def test_ws_unrewired_is_regular(n, k):
    g = gen_ws(n, k, 0.0, make_rng(0))
    assert np.all(g.degrees() == k)


def test_ws_rewiring_keeps_edge_count():
    g = gen_ws(100, 6, 0.5, make_rng(1))
    assert g.m == 300
    _check_invariants(g)


@pytest.mark.parametrize("n,m", [(10, 1), (50, 3), (200, 5)])
def test_ba_edge_count(n, m):
    g = gen_ba(n, m, make_rng(0))
    assert g.m == m * (m - 1) // 2 + (n - m) * m
    _check_invariants(g)


@pytest.mark.parametrize("call", [
    lambda: gen_er(10, 1.5),
    lambda: gen_ws(10, 3, 0.1),
    lambda: gen_ws(10, 4, -0.1),
    lambda: gen_ba(5, 5),
    lambda: gen_ba(5, 0),
])
def test_generator_parameter_violations(call):
    with pytest.raises(ValueError):
        call()


def test_small_world_beats_matched_random_graph():
    ws_c, er_c = [], []
    for s in range(5):
        ws = gen_ws(200, 6, 0.1, make_rng(s))
        ws_c.append(clustering_coefficient(ws))
        er_c.append(clustering_coefficient(gen_er(200, ws.m / (200 * 199 / 2), make_rng(s))))
    assert statistics.median(ws_c) > statistics.median(er_c)


def test_edge_list_parse(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("0 1\n1 2")
    g = load_edge_list(path)
    assert (g.n, g.m) == (3, 2)


def test_self_loop_warns_and_is_dropped(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("5 5\n")
    with pytest.warns(UserWarning, match="self-loop"):
        g = load_edge_list(path)
    assert g.m == 0


def test_comments_and_duplicates(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("# header\n\n2 1\n1 2\n7\n")
    g = load_edge_list(path)
    assert g.edge_set() == {(1, 2)}
    assert g.nodes.tolist() == [1, 2, 7]


@pytest.mark.parametrize("bad,line", [("0 1\n1 x\n", 2), ("# c\n0 1 2\n", 2), ("-1 3\n", 1)])
def test_bad_tokens_name_the_line(tmp_path, bad, line):
    path = tmp_path / "g.txt"
    path.write_text(bad)
    with pytest.raises(EdgeListError) as info:
        load_edge_list(path)
    assert info.value.line_no == line
    assert f":{line}:" in str(info.value)


@pytest.mark.parametrize("seed", range(5))
def test_edge_list_round_trip(tmp_path, seed):
    g = gen_er(40, 0.05, make_rng(seed))
    save_edge_list(g, tmp_path / "g.txt")
    assert load_edge_list(tmp_path / "g.txt") == g


def test_sparse_ids_round_trip(tmp_path):
    g = Graph.from_edges([(10, 400), (400, 9000)], nodes=[3])
    save_edge_list(g, tmp_path / "g.txt")
    assert load_edge_list(tmp_path / "g.txt") == g


def test_graph_rejects_noncanonical_edges():
    with pytest.raises(ValueError):
        Graph([0, 1], [(1, 0)])
    with pytest.raises(ValueError):
        Graph([0, 1], [(0, 1), (0, 1)])
    with pytest.raises(ValueError):
        Graph([0, 1], [(0, 2)])


def test_triangle_metrics():
    g = Graph.from_edges([(0, 1), (1, 2), (0, 2)])
    assert clustering_coefficient(g) == 1.0
    assert average_path_length(g) == 1.0


def test_path_metrics():
    g = Graph.from_edges([(0, 1), (1, 2)])
    assert clustering_coefficient(g) == 0.0
    assert average_path_length(g) == 4 / 3


def test_edgeless_path_length_is_an_error():
    with pytest.raises(ValueError, match="no reachable pairs"):
        average_path_length(Graph(np.arange(4)))


def test_disconnected_reports_reachable_fraction():
    g = Graph.from_edges([(0, 1), (2, 3)])
    apl, frac = path_length_summary(g)
    assert apl == 1.0 and frac == 4 / 12


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 8).flatmap(
    lambda n: st.tuples(st.just(n), st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))))))
def test_metrics_match_brute_force(case):
    n, pairs = case
    edges = sorted({(min(u, v), max(u, v)) for u, v in pairs if u != v})
    g = Graph(np.arange(n), np.array(edges, dtype=np.int64).reshape(-1, 2))
    c = clustering_coefficient(g)
    assert c == brute_clustering(n, edges)
    assert 0.0 <= c <= 1.0
    expected = brute_apl(n, edges)
    if expected is None:
        with pytest.raises(ValueError):
            average_path_length(g)
    else:
        assert average_path_length(g) == expected
        assert expected >= 1.0
