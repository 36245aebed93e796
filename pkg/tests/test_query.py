from collections import Counter
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcrank.engine import EngineConfig, build_all, build_salsa
from mcrank.graph import Graph
from mcrank.oracle import exact_personalized_pagerank, personalized_salsa
from mcrank.query import (Fetcher, QueryConfig, StitchError, corollary_fetch_bound,
                          rank_visits, stitch_walk, theoretical_fetch_bound, top_k,
                          walk_length_for_top_k, write_stats_csv, write_topk_csv)
from mcrank.synth import powerlaw_graph, random_digraph
from mcrank.walks import WalkStore


def two_cycle():
    return Graph.from_edges([(0, 1), (1, 0)])


def charge_bound(walk, R):
    counts = Counter(walk.path)
    return 1 + sum(max(0, c - R) for c in counts.values())


# ---------------------------------------------------------------- fetches

def test_fetch_twice_is_cache_hit():
    g = two_cycle()
    ws, _ = build_all(g, EngineConfig(walks_per_node=3), np.random.default_rng(0))
    f = Fetcher(g, ws)
    first = f.fetch(0)
    second = f.fetch(0)
    assert second is first
    assert f.stats.fetches == 1 and f.stats.cache_hits == 1
    assert len(first.segments) == 3
    assert all(s.source == 0 for s in first.segments)


def test_empty_store_still_returns_neighbours():
    g = Graph.from_edges([(0, 1), (0, 2), (2, 0)])
    res = Fetcher(g, WalkStore(3)).fetch(0)
    assert res.segments == []
    assert sorted(res.out_neighbors) == [1, 2]


def test_light_fetch_returns_segments_then_single_edges():
    g = Graph.from_edges([(0, 1), (0, 2), (2, 0), (1, 0)])
    ws, _ = build_all(g, EngineConfig(walks_per_node=2), np.random.default_rng(0))
    f = Fetcher(g, ws, light=True, rng=np.random.default_rng(1))
    res = f.fetch(0)
    assert res.out_neighbors == [] and len(res.segments) == 2
    draws = {f.fetch_edge(0) for _ in range(50)}
    assert draws == {1, 2}
    assert f.stats.fetches == 51


def test_light_fetch_within_twice_the_charge_bound():
    g = powerlaw_graph(2000, 0.76, np.random.default_rng(0))
    R = 5
    ws, _ = build_all(g, EngineConfig(walks_per_node=R), np.random.default_rng(1))
    for sd in (3, 44, 901):
        walk, st_ = stitch_walk(g, ws, sd, 5000, QueryConfig(light_fetch=True),
                                np.random.default_rng(sd))
        excess = charge_bound(walk, R) - 1
        assert st_.fetches <= 1 + 2 * excess


# ---------------------------------------------------------------- stitching

def test_zero_length_walk():
    g = two_cycle()
    ws, _ = build_all(g, EngineConfig(), np.random.default_rng(0))
    walk, st_ = stitch_walk(g, ws, 1, 0, QueryConfig(), np.random.default_rng(0))
    assert walk.path == [1]
    assert st_.fetches == 0


def test_long_seed_segment_needs_one_fetch():
    g = Graph.from_edges([(0, 1), (1, 2), (2, 0)])
    ws = WalkStore(3)
    ws.add(0, [i % 3 for i in range(60)])
    walk, st_ = stitch_walk(g, ws, 0, 50, QueryConfig(epsilon=1e-9), np.random.default_rng(0))
    assert st_.fetches == 1
    assert walk.length >= 50
    assert st_.segment_reuses == 1


def test_negative_length_rejected():
    g = two_cycle()
    with pytest.raises(ValueError):
        stitch_walk(g, WalkStore(2), 0, -1, QueryConfig(), np.random.default_rng(0))


def test_step_cap_raises():
    g = two_cycle()
    cfg = QueryConfig(epsilon=1e-9, step_cap_factor=1)
    with pytest.raises(StitchError):
        stitch_walk(g, WalkStore(2), 0, 3, cfg, np.random.default_rng(0))


def assert_walk_valid(g, walk):
    resets = set(walk.reset_positions)
    assert walk.path[0] == walk.seed
    for i in range(1, len(walk.path)):
        if i in resets:
            assert walk.path[i] == walk.seed
        else:
            assert g.has_edge(walk.path[i - 1], walk.path[i])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 2000))
def test_fetch_accounting_invariants(seed, R, L):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 40))
    g = random_digraph(n, 4 * n, rng, min_out=0)
    ws, _ = build_all(g, EngineConfig(walks_per_node=R), rng)
    src = int(rng.integers(n))
    walk, st_ = stitch_walk(g, ws, src, L, QueryConfig(), rng)
    assert walk.length >= L
    assert st_.fetches <= len(set(walk.path))
    assert st_.fetches <= charge_bound(walk, R)
    assert_walk_valid(g, walk)


def test_visit_frequencies_match_personalized_pagerank():
    rng = np.random.default_rng(7)
    g = random_digraph(10, 30, rng)
    ws, _ = build_all(g, EngineConfig(walks_per_node=5), rng)
    walk, _ = stitch_walk(g, ws, 0, 1_000_000, QueryConfig(), rng)
    freq = np.bincount(walk.path, minlength=g.n) / walk.length
    p = exact_personalized_pagerank(g, 0, 0.2)
    assert 0.5 * np.abs(freq - p).sum() <= 0.01


def test_salsa_stitching_matches_personalized_authority():
    rng = np.random.default_rng(3)
    g = random_digraph(12, 40, rng)
    cfg = EngineConfig(walks_per_node=4, mode="salsa")
    ws = build_salsa(g, cfg, rng)
    walk, _ = stitch_walk(g, ws, 2, 300_000, QueryConfig(mode="salsa"), rng)
    assert len(walk.authority_positions) == walk.length
    counts = walk.visit_counts()
    freq = np.array([counts.get(v, 0) for v in range(g.n)], dtype=float)
    freq /= freq.sum()
    _, auth = personalized_salsa(g, 2, 0.2, iters=500)
    assert 0.5 * np.abs(freq - auth).sum() <= 0.02


def test_salsa_walk_alternates_sides():
    rng = np.random.default_rng(4)
    g = random_digraph(15, 60, rng)
    ws = build_salsa(g, EngineConfig(walks_per_node=3, mode="salsa"), rng)
    walk, _ = stitch_walk(g, ws, 0, 2000, QueryConfig(mode="salsa"), rng)
    resets = set(walk.reset_positions)
    for i in range(1, walk.length):
        a, b = walk.path[i - 1], walk.path[i]
        if i in resets:
            assert b == 0 and not walk.authority_positions[i]
        elif walk.authority_positions[i]:
            assert not walk.authority_positions[i - 1] and g.has_edge(a, b)
        else:
            assert walk.authority_positions[i - 1] and g.has_edge(b, a)


# ---------------------------------------------------------------- bounds

def test_walk_length_reference_value():
    assert walk_length_for_top_k(100, 10**8, 0.75, 5) == 63246


def test_walk_length_direct_cases():
    assert walk_length_for_top_k(10, 1000, 0.5, 5) == 1000
    assert walk_length_for_top_k(50, 50, 0.5, 5) == 500
    assert walk_length_for_top_k(7, 7, 0.75, 3) == math.ceil(3 * 7 / 0.25)


@pytest.mark.parametrize("args", [(0, 10, 0.5, 5), (11, 10, 0.5, 5), (1, 10, 1.0, 5),
                                  (1, 10, 0.0, 5), (1, 10, 0.5, 0.5)])
def test_walk_length_domain(args):
    with pytest.raises(ValueError):
        walk_length_for_top_k(*args)


def test_fetch_bound_reference_value():
    assert theoretical_fetch_bound(63246, 10**8, 10, 0.75) == pytest.approx(2001, abs=1.0)
    assert theoretical_fetch_bound(1, 10**8, 10, 0.75) == pytest.approx(1.0, abs=1e-3)


def test_fetch_bound_scaling_in_R():
    t1 = theoretical_fetch_bound(5e4, 10**6, 10, 0.75) - 1
    t2 = theoretical_fetch_bound(5e4, 10**6, 20, 0.75) - 1
    assert t2 / t1 == pytest.approx(2 ** (-1 / 3), rel=1e-12)


def test_fetch_bound_domain():
    with pytest.raises(ValueError):
        theoretical_fetch_bound(10, 100, 0, 0.5)
    with pytest.raises(ValueError):
        theoretical_fetch_bound(10, 100, 5, 1.0)


def test_top_k_fetch_bound_reference_values():
    assert corollary_fetch_bound(100, 10, 0.75, 5) == pytest.approx(2001, abs=1.0)
    assert corollary_fetch_bound(0, 10, 0.75, 5) == 1.0


def test_top_k_fetch_bound_agrees_with_walk_bound():
    rng = np.random.default_rng(11)
    for _ in range(20):
        alpha = rng.uniform(0.3, 0.95)
        c = rng.uniform(1, 10)
        k = int(rng.integers(1, 500))
        n = int(k * rng.integers(1, 10**5))
        R = int(rng.integers(1, 50))
        s = walk_length_for_top_k(k, n, alpha, c)
        thm = theoretical_fetch_bound(s, n, R, alpha)
        cor = corollary_fetch_bound(k, R, alpha, c)
        # the walk length is rounded up to an integer
        exact_s = c / (1 - alpha) * k * (n / k) ** (1 - alpha)
        slack = (cor - 1) * ((s / exact_s) ** (1 / alpha) - 1)
        assert cor - 1e-9 * cor <= thm <= cor + slack + 1e-9 * cor


# ---------------------------------------------------------------- top-k

def test_star_top_k_empty_and_flagged():
    g = two_cycle()
    ws, _ = build_all(g, EngineConfig(), np.random.default_rng(0))
    res, _ = top_k(g, ws, 0, 1, QueryConfig(), exclusions={1}, rng=np.random.default_rng(0))
    assert res.items == [] and res.truncated


def test_rank_visits_tie_break():
    ranked = rank_visits(Counter({3: 2, 1: 2, 2: 5, 4: 0}))
    assert ranked == [(2, 5), (1, 2), (3, 2)]
    assert rank_visits(Counter({3: 2, 1: 2}), exclude={1}) == [(3, 2)]


def test_top_k_default_length_and_order():
    rng = np.random.default_rng(5)
    g = random_digraph(200, 1500, rng)
    ws, _ = build_all(g, EngineConfig(walks_per_node=5), rng)
    cfg = QueryConfig()
    res, stats = top_k(g, ws, 10, 5, cfg, exclusions=g.out_adj[10], rng=rng)
    assert res.walk_length >= walk_length_for_top_k(5, 200, cfg.alpha, cfg.c)
    counts = [c for _, c in res.items]
    assert counts == sorted(counts, reverse=True)
    assert 10 not in res.nodes and not set(res.nodes) & set(g.out_adj[10])
    assert len(res.items) == 5 and not res.truncated
    assert stats.fetches >= 1


def test_top_k_clamps_alpha_with_warning():
    g = two_cycle()
    ws, _ = build_all(g, EngineConfig(), np.random.default_rng(0))
    with pytest.warns(UserWarning):
        res, _ = top_k(g, ws, 0, 1, QueryConfig(alpha=1.3), rng=np.random.default_rng(0))
    assert res.nodes == [1]


def test_query_config_validation():
    with pytest.raises(ValueError):
        QueryConfig(epsilon=0)
    with pytest.raises(ValueError):
        QueryConfig(mode="hits")


def test_csv_writers(tmp_path):
    g = two_cycle()
    ws, _ = build_all(g, EngineConfig(), np.random.default_rng(0))
    res, stats = top_k(g, ws, 0, 1, QueryConfig(), rng=np.random.default_rng(0))
    write_topk_csv(tmp_path / "t.csv", res)
    write_stats_csv(tmp_path / "s.csv", stats, res.walk_length)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "rank,node,count"
    assert lines[1].startswith("1,1,")
    srows = (tmp_path / "s.csv").read_text().splitlines()
    assert srows[0] == "fetches,cache_hits,segment_reuses,walk_length"
    assert srows[1].split(",")[0] == str(stats.fetches)
