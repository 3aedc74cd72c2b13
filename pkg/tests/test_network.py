import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coachrank.errors import DegenerateNetwork, NotConverged
from coachrank.network import (
    CentralityVector,
    EdgeData,
    SeasonNetwork,
    adjacency_matrix,
    build_network,
    eigenvector_centrality,
    export_dot,
    export_graphml,
    format_graphml,
    power_iteration,
)

from conftest import dense_centrality, game

# dense eigensolve of [[0,1,0],[0,0,1],[0,0,0]] + 1e-4, unit norm
CHAIN_SCORES = (0.99885476, 0.04779514, 0.00218713)


def test_repeated_wins_collect_margins():
    net = build_network([game("A", 64, "B", 60), game("B", 40, "A", 55)])
    e = net.edge("A", "B")
    assert (e.weight, e.margins) == (2, (4, 15))
    assert net.edge("B", "A") is None


def test_single_game_edge():
    net = build_network([game("A", 1, "B", 0)])
    assert net.edge("A", "B") == EdgeData(1, (1,))


def test_split_series_gives_opposing_edges():
    net = build_network([game("A", 70, "B", 60), game("B", 80, "A", 66)])
    assert net.edge("A", "B") == EdgeData(1, (10,))
    assert net.edge("B", "A") == EdgeData(1, (14,))


def test_nodes_are_sorted_and_no_self_loops():
    net = build_network([game("Zeta", 1, "Alpha", 0), game("Mid", 3, "Alpha", 0)])
    assert net.teams == ("Alpha", "Mid", "Zeta")
    assert all(i != j for i, j in net.edges)


def test_edge_data_invariants():
    with pytest.raises(ValueError):
        EdgeData(2, (3,))
    with pytest.raises(ValueError):
        EdgeData(1, (0,))


def test_adjacency_examples():
    assert adjacency_matrix(build_network([game("A", 1, "B", 0)])).tolist() == [[0, 1], [0, 0]]
    two = build_network([game("A", 1, "B", 0), game("A", 5, "B", 2)])
    assert adjacency_matrix(two).tolist() == [[0, 2], [0, 0]]
    assert adjacency_matrix(SeasonNetwork(("A", "B"), {})).tolist() == [[0, 0], [0, 0]]


def test_three_cycle_is_uniform():
    net = build_network([game("A", 2, "B", 1), game("B", 2, "C", 1), game("C", 2, "A", 1)])
    c = eigenvector_centrality(net)
    for v in c.scores.values():
        assert v == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    assert c.converged


def test_chain_matches_dense_eigensolve():
    net = build_network([game("A", 2, "B", 1), game("B", 2, "C", 1)])
    c = eigenvector_centrality(net, epsilon=1e-4)
    got = [c.scores[t] for t in "ABC"]
    assert got == pytest.approx(CHAIN_SCORES, abs=1e-8)
    assert got[0] > got[1] > got[2] > 0


def test_fewer_than_two_teams():
    with pytest.raises(DegenerateNetwork):
        eigenvector_centrality(SeasonNetwork(("A",), {}))


def test_zero_damping_on_acyclic_season():
    net = build_network([game("A", 2, "B", 1), game("B", 2, "C", 1)])
    with pytest.raises(DegenerateNetwork):
        eigenvector_centrality(net, epsilon=0.0)


def test_zero_damping_on_cycle_is_fine():
    net = build_network([game("A", 2, "B", 1), game("B", 2, "C", 1), game("C", 2, "A", 1)])
    assert eigenvector_centrality(net, epsilon=0.0).converged


def test_not_converged_carries_iterate():
    net = build_network([game("A", 2, "B", 1), game("B", 2, "C", 1), game("C", 2, "A", 1), game("A", 9, "C", 1)])
    with pytest.raises(NotConverged) as info:
        eigenvector_centrality(net, max_iter=2)
    result = info.value.result
    assert not result.converged and result.iterations == 2
    assert set(result.scores) == {"A", "B", "C"}


def test_eigenvalue_is_rayleigh_quotient():
    net = build_network([game("A", 2, "B", 1), game("B", 2, "C", 1), game("C", 2, "A", 1)])
    c = eigenvector_centrality(net, epsilon=0.0)
    assert c.eigenvalue == pytest.approx(1.0, abs=1e-10)


def test_ranked_breaks_ties_by_name():
    net = build_network([game("B", 2, "A", 1), game("A", 2, "C", 1), game("C", 2, "B", 1)])
    c = eigenvector_centrality(net)
    assert [t for t, _ in c.ranked()] == ["A", "B", "C"]


def random_digraph(rng, n):
    w = rng.integers(0, 4, size=(n, n)).astype(float)
    w[rng.random((n, n)) < 0.5] = 0.0
    np.fill_diagonal(w, 0.0)
    return w


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_power_iteration_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    w = random_digraph(rng, n)
    damped = w + 1e-4
    x, lam, _, converged = power_iteration(damped)
    assert converged
    ref = dense_centrality(w, 1e-4)
    assert np.max(np.abs(x - ref)) < 1e-8
    assert np.all(x > 0)
    assert abs(np.linalg.norm(x) - 1) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_scaling_weights_keeps_order(n, seed, k):
    rng = np.random.default_rng(seed)
    w = random_digraph(rng, n)
    eps = 1e-4
    x1, *_ = power_iteration(w + eps)
    xk, *_ = power_iteration(k * w + eps)
    # damping is not scaled with the weights, so compare only pairs whose
    # order is clear in both exact solutions
    ref1, refk = dense_centrality(w, eps), dense_centrality(k * w, eps)
    for i in range(n):
        for j in range(n):
            if ref1[i] - ref1[j] > 1e-6 and refk[i] - refk[j] > 1e-6:
                assert x1[i] > x1[j] and xk[i] > xk[j]
            if ref1[i] - ref1[j] > 1e-3:
                assert refk[i] > refk[j]


def test_scale_invariance_on_designed_graph():
    games = [game("A", 2, "B", 1), game("A", 2, "C", 1), game("B", 2, "C", 1), game("C", 3, "D", 1)]
    order = [t for t, _ in eigenvector_centrality(build_network(games)).ranked()]
    tripled = [g for g in games for _ in range(3)]
    assert [t for t, _ in eigenvector_centrality(build_network(tripled)).ranked()] == order


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_perron_positivity(n, seed):
    rng = np.random.default_rng(seed)
    x, *_ = power_iteration(random_digraph(rng, n) + 1e-4)
    assert np.all(x > 0)


def _cycle_net():
    return build_network([game("A", 2, "B", 1), game("B", 2, "C", 1), game("C", 2, "A", 1)])


def test_graphml_two_nodes(tmp_path):
    net = build_network([game("A", 70, "B", 60)])
    c = eigenvector_centrality(net)
    export_graphml(net, c, tmp_path / "n.graphml")
    root = ET.parse(tmp_path / "n.graphml").getroot()
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    assert len(root.findall(".//g:node", ns)) == 2
    (edge,) = root.findall(".//g:edge", ns)
    data = {d.get("key"): d.text for d in edge.findall("g:data", ns)}
    assert data == {"weight": "1", "margins": "10"}


def test_graphml_is_byte_stable(tmp_path):
    net = _cycle_net()
    c = eigenvector_centrality(net)
    export_graphml(net, c, tmp_path / "a.graphml")
    export_graphml(_cycle_net(), eigenvector_centrality(_cycle_net()), tmp_path / "b.graphml")
    assert (tmp_path / "a.graphml").read_bytes() == (tmp_path / "b.graphml").read_bytes()


def test_graphml_three_cycle_weights():
    text = format_graphml(_cycle_net(), eigenvector_centrality(_cycle_net()))
    root = ET.fromstring(text)
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    weights = [d.text for d in root.findall(".//g:edge/g:data[@key='weight']", ns)]
    assert weights == ["1", "1", "1"]
    cents = [float(d.text) for d in root.findall(".//g:node/g:data[@key='centrality']", ns)]
    assert cents == pytest.approx([1 / math.sqrt(3)] * 3)


def test_graphml_escapes_names():
    net = build_network([game('A&"B"', 2, "<C>", 1)])
    ET.fromstring(format_graphml(net, eigenvector_centrality(net)))


def test_graphml_requires_every_team():
    net = _cycle_net()
    with pytest.raises(ValueError):
        format_graphml(net, CentralityVector({"A": 1.0}, 1.0, 1, True))


def test_dot_width_tracks_centrality(tmp_path):
    net = build_network([game("A", 2, "B", 1), game("B", 2, "C", 1)])
    export_dot(net, eigenvector_centrality(net), tmp_path / "n.dot")
    text = (tmp_path / "n.dot").read_text()
    assert text.startswith("digraph season {")
    assert '"A" [width=2.000000' in text
    assert '"A" -> "B" [weight=1, margins="1"];' in text
