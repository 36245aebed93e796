import numpy as np
import pytest

from mcrank.graph import Graph
from mcrank.linkpred import (METHODS, captured, evaluate, holdout_split, oracle_scorer,
                             random_capture_mean, random_scorer, ranked_candidates,
                             score_candidates, write_table_csv)
from mcrank.synth import community_powerlaw_graph


@pytest.fixture(scope="module")
def small_split():
    rng = np.random.default_rng(0)
    g, _ = community_powerlaw_graph(100, rng, n_communities=4)
    return holdout_split(g, rng, n_seeds=20, min_out=5, max_out=60)


def test_holdout_split_hides_edges(small_split):
    sp = small_split
    assert len(sp.seeds) == 20
    for s, held in sp.held_out.items():
        assert held
        for v in held:
            assert not sp.train.has_edge(s, v)
            assert sp.train.in_degree(v) >= 2


def test_holdout_split_validation():
    g = Graph.from_edges([(0, 1), (1, 0)])
    with pytest.raises(ValueError):
        holdout_split(g, np.random.default_rng(0), n_seeds=1)
    with pytest.raises(ValueError):
        holdout_split(g, np.random.default_rng(0), fraction=1.0)


def test_ranking_ties_and_exclusion():
    scores = np.array([0.5, 0.9, 0.5, 0.1])
    assert ranked_candidates(scores, set()).tolist() == [1, 0, 2, 3]
    assert ranked_candidates(scores, {1, 3}).tolist() == [0, 2]
    assert captured([4, 2, 7], [7, 9], 2) == 0
    assert captured([4, 2, 7], [7, 9], 3) == 1


def test_oracle_ceiling_captures_everything(small_split):
    table = evaluate(small_split, methods=("oracle",), ks=(20,),
                     scorer=oracle_scorer(small_split))
    per_seed = [row[0] for row in table.per_seed["oracle"]]
    assert per_seed == [len(small_split.held_out[s]) for s in small_split.seeds]


def test_random_baseline_matches_hypergeometric_mean(small_split):
    sp = small_split
    rng = np.random.default_rng(1)
    k = 20
    got, expected = [], []
    for _ in range(40):
        table = evaluate(sp, methods=("random",), ks=(k,), scorer=random_scorer(rng))
        got.append(table.mean("random", k))
    for s, held in sp.held_out.items():
        candidates = sp.train.n - 1 - sp.train.out_degree(s)
        expected.append(random_capture_mean(k, len(held), candidates))
    # 40 repeats x 20 seeds: standard error of the mean is well under 0.05
    assert np.mean(got) == pytest.approx(np.mean(expected), abs=0.1)


def test_unknown_method():
    g = Graph.from_edges([(0, 1), (1, 0)])
    with pytest.raises(ValueError):
        score_candidates(g, 0, "Katz")


def test_small_graph_ordering(small_split):
    table = evaluate(small_split, ks=(20,))
    hits = table.mean("HITS", 20)
    assert table.mean("PageRank", 20) > hits
    assert table.mean("SALSA", 20) > hits


def test_table_csv(tmp_path, small_split):
    table = evaluate(small_split, ks=(10, 20))
    write_table_csv(tmp_path / "lp.csv", table, comment="n=100")
    lines = (tmp_path / "lp.csv").read_text().splitlines()
    assert lines[0] == "cutoff," + ",".join(METHODS)
    assert lines[1] == "# n=100"
    assert [ln.split(",")[0] for ln in lines[2:]] == ["Top 10", "Top 20"]
