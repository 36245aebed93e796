import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mcrank.engine import EngineConfig
from mcrank.experiments import cost_arrays, replay_costs
from mcrank.graph import Graph
from mcrank.oracle import power_iteration_pagerank
from mcrank.synth import (ArrivalStream, StreamError, StreamEvent, degree_cdfs,
                          dirichlet_source_probs, dirichlet_stream, example1_edges, example1_graph, example1_nodes,
                          fit_powerlaw, interpolated_precision_11pt, mx_statistic, mx_values,
                          powerlaw_edges, powerlaw_graph, random_permutation_stream,
                          write_precision_csv)


# ---------------------------------------------------------------- streams

def test_permutation_of_one_edge():
    s = random_permutation_stream([(0, 1)], np.random.default_rng(0))
    assert s.edges() == [(0, 1)]
    assert s[0].op == "add"


def test_permutation_orders_are_uniform():
    edges = [(0, 1), (1, 2), (2, 0)]
    rng = np.random.default_rng(0)
    orders = {p: 0 for p in itertools.permutations(edges)}
    trials = 60_000
    for _ in range(trials):
        orders[tuple(random_permutation_stream(edges, rng).edges())] += 1
    p = 1 / 6
    sigma = math.sqrt(trials * p * (1 - p))
    for count in orders.values():
        assert abs(count - trials * p) <= 3 * sigma
    assert stats.chisquare(list(orders.values())).pvalue > 1e-3


def test_permutation_replay_rebuilds_edge_set():
    rng = np.random.default_rng(2)
    edges = powerlaw_edges(300, 0.76, rng, avg_degree=5)
    s = random_permutation_stream(edges, rng)
    s.validate()
    g = s.replay(Graph(300))
    assert g.edge_set() == set(map(tuple, edges))


def test_stream_validation_errors():
    with pytest.raises(StreamError):
        ArrivalStream.of_adds([(0, 1), (0, 1)]).validate()
    with pytest.raises(StreamError):
        ArrivalStream([StreamEvent("remove", 0, 1)]).validate()
    ArrivalStream([("add", 0, 1), ("remove", 0, 1), ("add", 0, 1)]).validate()


def test_stream_from_files(tmp_path):
    (tmp_path / "a.tsv").write_text("0\t1\n1\t2\n")
    (tmp_path / "r.tsv").write_text("0 1\n")
    s = ArrivalStream.from_files(tmp_path / "a.tsv", tmp_path / "r.tsv")
    assert [e.op for e in s] == ["add", "add", "remove"]
    assert s.replay(Graph(3)).edge_set() == {(1, 2)}


def test_dirichlet_first_source_uniform():
    rng = np.random.default_rng(3)
    firsts = np.array([dirichlet_stream(5, 1, rng)[0].src for _ in range(20_000)])
    _, p = stats.chisquare(np.bincount(firsts, minlength=5))
    assert p > 1e-3


def test_dirichlet_source_law():
    assert dirichlet_source_probs([1, 0]).tolist() == pytest.approx([2 / 3, 1 / 3])
    assert dirichlet_source_probs([0, 0, 0, 0]).tolist() == [0.25] * 4


def test_dirichlet_second_source_follows_law():
    # n=3, one arrival so far: the earlier source has weight (1+1)/(1+3)
    rng = np.random.default_rng(4)
    trials = 30_000
    hits = 0
    for _ in range(trials):
        s = dirichlet_stream(3, 2, rng)
        hits += s[1].src == s[0].src
    assert hits / trials == pytest.approx(0.5, abs=0.015)
    with pytest.raises(ValueError):
        dirichlet_stream(2, 3, rng)


def test_dirichlet_stream_is_valid_and_sized():
    s = dirichlet_stream(50, 500, np.random.default_rng(6))
    assert len(s) == 500
    s.validate()
    assert all(e.src != e.dst for e in s)


def test_example1_single():
    g, trigger = example1_graph(1)
    assert g.n == 4
    ids = example1_nodes(1)
    v, u, x, y = ids["v"][0], ids["u"], ids["x"][0], ids["y"][0]
    assert g.edge_set() == {(v, u), (u, x), (x, u), (v, y), (y, v)}
    assert trigger == (u, v)
    assert not g.has_edge(*trigger)


@pytest.mark.parametrize("N", [2, 5, 100])
def test_example1_structure(N):
    g, trigger = example1_graph(N)
    ids = example1_nodes(N)
    assert g.n == 3 * N + 1 and g.m == 6 * N
    assert len(set(example1_edges(N))) == 6 * N
    u = ids["u"]
    assert g.in_degree(u) == 2 * N and g.out_degree(u) == N
    assert g.out_degree(ids["v"][0]) == N + 2
    assert trigger == (u, ids["v"][0])


def test_powerlaw_small_graph_is_simple():
    g = powerlaw_graph(10, 0.76, np.random.default_rng(0))
    edges = list(g.edges())
    assert all(u != v for u, v in edges)
    assert len(edges) == len(set(edges)) == g.m > 0


def test_powerlaw_exponents_at_scale():
    g = powerlaw_graph(10_000, 0.76, np.random.default_rng(0))
    indeg = np.sort(np.asarray(g.in_degrees()))[::-1]
    a_in = fit_powerlaw(indeg).alpha
    assert a_in == pytest.approx(0.76, abs=0.1)
    pr = np.sort(power_iteration_pagerank(g, 0.2))[::-1]
    assert fit_powerlaw(pr).alpha == pytest.approx(a_in, abs=0.1)


def test_generators_are_deterministic():
    a = powerlaw_edges(500, 0.7, np.random.default_rng(9))
    b = powerlaw_edges(500, 0.7, np.random.default_rng(9))
    assert a == b
    assert (dirichlet_stream(40, 200, np.random.default_rng(9)).events
            == dirichlet_stream(40, 200, np.random.default_rng(9)).events)
    e = powerlaw_edges(100, 0.7, np.random.default_rng(1))
    assert (random_permutation_stream(e, np.random.default_rng(2)).events
            == random_permutation_stream(e, np.random.default_rng(2)).events)


def test_dirichlet_update_work_within_bound():
    n, m, R, eps = 300, 3000, 3, 0.2
    totals = []
    for seed in range(5):
        rng = np.random.default_rng(seed)
        s = dirichlet_stream(n, m, rng)
        _, costs = replay_costs(s, n, EngineConfig(epsilon=eps, walks_per_node=R), rng)
        totals.append(cost_arrays(costs)[1].sum())
    assert np.mean(totals) <= n * R / eps ** 2 * math.log((m + n) / n)


# ---------------------------------------------------------------- power-law fits

@pytest.mark.parametrize("alpha", [0.76, 0.5])
def test_fit_recovers_exact_exponent(alpha):
    vals = np.arange(1, 2001, dtype=float) ** -alpha
    fit = fit_powerlaw(vals)
    assert fit.alpha == pytest.approx(alpha, abs=0.005)
    assert fit.r_squared >= 0.999
    assert fit.window == (1, 2000)


def test_fit_constant_is_degenerate():
    fit = fit_powerlaw(np.full(50, 3.0))
    assert fit.alpha == 0.0 and fit.degenerate


def test_fit_rejects_tiny_windows_and_bad_input():
    vals = np.arange(1, 100, dtype=float) ** -0.5
    with pytest.raises(ValueError):
        fit_powerlaw(vals, (5, 10))
    with pytest.raises(ValueError):
        fit_powerlaw(vals[::-1])
    with pytest.raises(ValueError):
        fit_powerlaw(np.zeros(20), (1, 20))


def test_fit_window_restricts_ranks():
    vals = np.concatenate([np.full(10, 100.0), 50 * np.arange(11, 211, dtype=float) ** -0.9])
    fit = fit_powerlaw(vals, (11, 210))
    assert fit.alpha == pytest.approx(0.9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 1.5), st.floats(1e-6, 1e6), st.integers(20, 300))
def test_fit_is_scale_invariant(alpha, scale, size):
    rng = np.random.default_rng(size)
    vals = np.sort(np.arange(1, size + 1) ** -alpha * rng.uniform(0.8, 1.2, size))[::-1]
    f1, f2 = fit_powerlaw(vals), fit_powerlaw(vals * scale)
    assert f2.alpha == pytest.approx(f1.alpha, rel=1e-7, abs=1e-9)
    assert f2.r_squared == pytest.approx(f1.r_squared, rel=1e-7, abs=1e-9)


# ---------------------------------------------------------------- mX and CDFs

def test_mx_two_cycle_smoke():
    s = ArrivalStream.of_adds([(0, 1), (1, 0)])
    vals = mx_values(s, n=2)
    assert vals.shape == (2,) and np.all(np.isfinite(vals))
    # after both edges pi = (1/2, 1/2) so t * pi / outdeg = 1
    assert vals[-1] == pytest.approx(1.0)


@pytest.fixture(scope="module")
def perm_stream():
    rng = np.random.default_rng(5)
    edges = powerlaw_edges(2000, 0.76, rng)
    return random_permutation_stream(edges, np.random.default_rng(0))


def test_mx_near_one_for_random_order(perm_stream):
    half = len(perm_stream) // 2
    base = ArrivalStream(perm_stream.events[:half]).replay(Graph(2000))
    late = ArrivalStream(perm_stream.events[half:])
    assert mx_statistic(late, base=base) == pytest.approx(1.0, abs=0.1)


def test_mx_deviates_for_adversarial_order():
    g, trigger = example1_graph(100)
    s = ArrivalStream.of_adds(example1_edges(100) + [trigger])
    assert abs(mx_statistic(s, n=g.n) - 1.0) > 0.1


def test_cdfs_all_degree_one():
    g = Graph.from_edges([(0, 1), (1, 2), (2, 0)])
    c = degree_cdfs(g, [(0, 1), (1, 2), (2, 0)])
    assert c.arrival[1] == 1.0 and c.existing[1] == 1.0


def test_cdfs_track_for_random_order(perm_stream):
    g = perm_stream.replay(Graph(2000))
    recent = perm_stream.events[-len(perm_stream) // 5:]
    c = degree_cdfs(g, recent)
    assert c.sup_distance() <= 0.05
    for curve in (c.arrival, c.existing):
        assert np.all(np.diff(curve) >= -1e-12)
        assert curve[-1] == pytest.approx(1.0)


def test_cdfs_separate_for_low_degree_first(perm_stream):
    edges = perm_stream.edges()
    deg = np.bincount([u for u, _ in edges], minlength=2000)
    order = sorted(edges, key=lambda e: (deg[e[0]], e))
    g = Graph.from_edges(order, n=2000)
    assert degree_cdfs(g, order[-len(order) // 5:]).sup_distance() > 0.2


def test_cdfs_final_reference_and_errors():
    g = Graph.from_edges([(0, 1), (0, 2), (1, 2)])
    c = degree_cdfs(g, [(0, 2)], reference="final")
    assert c.arrival.tolist() == [0.0, 0.0, 1.0]
    assert c.existing.tolist() == pytest.approx([0.0, 1 / 3, 1.0])
    with pytest.raises(ValueError):
        degree_cdfs(g, [], reference="median")
    assert list(degree_cdfs(g, []).rows())[-1][1] == 1.0


# ---------------------------------------------------------------- precision

def test_precision_identity_and_disjoint():
    assert interpolated_precision_11pt([1, 2, 3], [1, 2, 3]) == [1.0] * 11
    assert interpolated_precision_11pt([1, 2], [3, 4, 5]) == [0.0] * 11


def test_precision_hand_case():
    curve = interpolated_precision_11pt(["a", "b"], ["a", "x", "b"])
    assert curve[-1] == pytest.approx(2 / 3)
    assert curve[:6] == [1.0] * 6
    with pytest.raises(ValueError):
        interpolated_precision_11pt([], [1])


def test_precision_csv(tmp_path):
    write_precision_csv(tmp_path / "p.csv", [1.0] * 11)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "recall,precision" and len(lines) == 12
    assert lines[-1] == "1.0,1.000000"
