"""Experiment drivers shared by the command line and the benchmark tests.

Each function returns plain arrays or small dataclasses so callers can
print, plot or assert on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import EngineConfig, MonteCarloEngine, UpdateCost, build_all
from .graph import Graph
from .oracle import exact_personalized_pagerank
from .query import QueryConfig, rank_visits, stitch_walk, theoretical_fetch_bound
from .synth import (ArrivalStream, dirichlet_stream, example1_edges, example1_graph, fit_powerlaw,
                    interpolated_precision_11pt, personalized_fit_window, powerlaw_edges,
                    random_permutation_stream)

STREAM_KINDS = ("permutation", "dirichlet", "example1", "file")


def make_stream(kind: str, n: int, m: int, rng, N: int = 100) -> tuple[ArrivalStream, int]:
    """A synthetic stream and the node count it needs.

    ``permutation`` shuffles a fixed power-law edge set of about ``m``
    edges; ``example1`` lists the adversarial construction with its
    trigger edge last.
    """
    if kind == "permutation":
        edges = powerlaw_edges(n, 0.76, rng, avg_degree=m / n)
        return random_permutation_stream(edges, rng), n
    if kind == "dirichlet":
        return dirichlet_stream(n, m, rng), n
    if kind == "example1":
        g, trigger = example1_graph(N)
        return ArrivalStream.of_adds(example1_edges(N) + [trigger]), g.n
    raise ValueError(f"unknown stream kind {kind!r}")


def replay_costs(stream: ArrivalStream, n: int, cfg: EngineConfig, rng=None,
                 base: Optional[Graph] = None) -> tuple[MonteCarloEngine, list[UpdateCost]]:
    """Build walks on ``base`` (empty by default), then apply ``stream`` incrementally."""
    g = base.copy() if base is not None else Graph(n)
    g.grow(n)
    eng = MonteCarloEngine(g, cfg, rng)
    eng.build()
    costs = []
    for ev in stream:
        if ev.op == "add":
            costs.append(eng.add_edge(ev.src, ev.dst))
        else:
            costs.append(eng.remove_edge(ev.src, ev.dst))
    return eng, costs


def cost_arrays(costs: Sequence[UpdateCost]) -> tuple[np.ndarray, np.ndarray]:
    rer = np.fromiter((c.segments_rerouted for c in costs), dtype=np.int64, count=len(costs))
    steps = np.fromiter((c.rewalk_steps for c in costs), dtype=np.int64, count=len(costs))
    return rer, steps


def loglog_slope(per_arrival: np.ndarray, t_min: int = 1, bins: int = 20) -> float:
    """Slope of log(mean value) against log(t) over log-spaced bins of ``t``.

    ``per_arrival[i]`` belongs to arrival ``t = i + 1``.  Only arrivals
    with ``t >= t_min`` are used and empty or all-zero bins are skipped.
    """
    y = np.asarray(per_arrival, dtype=float)
    t = np.arange(1, y.size + 1)
    edges = np.unique(np.geomspace(max(1, t_min), y.size + 1, bins + 1).astype(int))
    xs, ys = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (t >= lo) & (t < hi)
        if sel.any() and y[sel].mean() > 0:
            xs.append(np.log(t[sel].mean()))
            ys.append(np.log(y[sel].mean()))
    if len(xs) < 2:
        raise ValueError("not enough non-empty bins for a slope")
    return float(np.polyfit(xs, ys, 1)[0])


@dataclass
class DeletionSample:
    rerouted: np.ndarray
    steps: np.ndarray


def deletion_costs(eng: MonteCarloEngine, count: int, rng) -> DeletionSample:
    """Cost of deleting ``count`` uniformly chosen edges, each from the same state.

    After measuring a deletion, the edge and every touched segment are
    put back exactly, so the samples are independent draws against one
    graph and walk store.
    """
    g, ws = eng.graph, eng.store
    edges = list(g.edges())
    picks = rng.choice(len(edges), size=count, replace=True)
    rer = np.zeros(count, dtype=np.int64)
    steps = np.zeros(count, dtype=np.int64)
    for i, j in enumerate(picks.tolist()):
        u, v = edges[j]
        saved = {sid: (list(ws.segments[sid].path), ws.segments[sid].dangling_end)
                 for sid in set(ws.visit_map(u)) | set(ws.visit_map(v))}
        cost = eng.remove_edge(u, v)
        rer[i], steps[i] = cost.segments_rerouted, cost.rewalk_steps
        g.add_edge(u, v)
        for sid, (path, dangling) in saved.items():
            seg = ws.segments[sid]
            if seg.path != path or seg.dangling_end != dangling:
                ws.truncate_and_replace(sid, 0, path[1:], dangling)
    return DeletionSample(rer, steps)


# --------------------------------------------------------------------------
# fetch curves and top-k quality


def pick_seeds(g: Graph, count: int, rng, min_out: int = 20, max_out: int = 30) -> np.ndarray:
    """Random seeds whose out-degree lies in ``[min_out, max_out]`` (widened if scarce)."""
    outd = np.asarray(g.out_degrees())
    lo, hi = min_out, max_out
    while True:
        cands = np.flatnonzero((outd >= lo) & (outd <= hi))
        if cands.size >= count or (lo <= 1 and hi >= outd.max()):
            break
        lo, hi = max(1, lo - 1), hi + 1
    return rng.choice(cands, size=min(count, cands.size), replace=False)


def seed_alpha(g: Graph, seed: int, epsilon: float = 0.2) -> float:
    """Power-law exponent of a seed's personalized vector over its friend window."""
    p = np.sort(exact_personalized_pagerank(g, seed, epsilon, tol=1e-10))[::-1]
    return fit_powerlaw(p, personalized_fit_window(g.out_degree(seed))).alpha


@dataclass
class FetchCurve:
    R: int
    s: np.ndarray
    measured: np.ndarray
    bound: np.ndarray


def fetch_curves(g: Graph, seeds: Sequence[int], R_values=(5, 10, 20),
                 s_values: Optional[Sequence[int]] = None, epsilon: float = 0.2,
                 alphas: Optional[Sequence[float]] = None, rng_seed: int = 0) -> list[FetchCurve]:
    """Mean fetches of stitched walks against the averaged per-seed bound.

    Each seed runs one walk of the largest length; the fetch count at
    shorter lengths is read off the prefix.  Exponents at or above 1 are
    clamped to 0.99 before evaluating the bound.
    """
    if s_values is None:
        s_values = np.unique(np.geomspace(100, 5e4, 12).astype(int))
    s_values = np.asarray(s_values, dtype=int)
    if alphas is None:
        alphas = [seed_alpha(g, int(sd), epsilon) for sd in seeds]
    alphas = [min(float(a), 0.99) for a in alphas]
    cfg = QueryConfig(epsilon=epsilon)
    curves = []
    for R in R_values:
        ws, _ = build_all(g, EngineConfig(epsilon=epsilon, walks_per_node=R),
                          np.random.default_rng([rng_seed, R]))
        meas = np.zeros(s_values.size)
        bound = np.zeros(s_values.size)
        for sd, a in zip(seeds, alphas):
            walk, _ = stitch_walk(g, ws, int(sd), int(s_values[-1]), cfg,
                                  np.random.default_rng([rng_seed, R, int(sd)]))
            meas += [walk.fetches_before(int(s)) for s in s_values]
            bound += [theoretical_fetch_bound(float(s), g.n, R, a) for s in s_values]
        curves.append(FetchCurve(R, s_values, meas / len(seeds), bound / len(seeds)))
    return curves


def topk_precision(g: Graph, seeds: Sequence[int], R: int = 10, steps: int = 10_000,
                   k_true: int = 50, k_retrieved: int = 500, epsilon: float = 0.2,
                   rng_seed: int = 0) -> np.ndarray:
    """Per-seed 11-point precision curves: stitched-walk ranking vs exact ranking.

    Both rankings exclude the seed and its out-neighbours.
    """
    ws, _ = build_all(g, EngineConfig(epsilon=epsilon, walks_per_node=R),
                      np.random.default_rng(rng_seed))
    curves = []
    for sd in (int(x) for x in seeds):
        exclude = set(g.out_adj[sd]) | {sd}
        p = exact_personalized_pagerank(g, sd, epsilon)
        truth = [int(v) for v in np.argsort(-p, kind="stable") if int(v) not in exclude][:k_true]
        walk, _ = stitch_walk(g, ws, sd, steps, QueryConfig(epsilon=epsilon),
                              np.random.default_rng([rng_seed, sd]))
        retrieved = [v for v, _ in rank_visits(walk.visit_counts(), exclude)][:k_retrieved]
        curves.append(interpolated_precision_11pt(truth, retrieved))
    return np.asarray(curves)


# --------------------------------------------------------------------------
# distribution checks


@dataclass
class BandCheck:
    """Where a candidate vector sits among reference draws of the same vector."""

    statistic: float
    threshold: float
    node_coverage: float

    @property
    def inside(self) -> bool:
        return self.statistic <= self.threshold


def _loo_max_z(pool: np.ndarray, j: int) -> float:
    rest = np.delete(pool, j, axis=0)
    mu = rest.mean(axis=0)
    sd = rest.std(axis=0, ddof=1)
    diff = np.abs(pool[j] - mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, diff / np.where(sd > 0, sd, 1.0), np.where(diff > 0, np.inf, 0.0))
    return float(z.max())


def simultaneous_band(reference: np.ndarray, candidate: np.ndarray,
                      level: float = 0.99) -> BandCheck:
    """Exchangeable max-|z| check of ``candidate`` against ``reference`` rows.

    The candidate is pooled with the reference draws; each pooled vector
    gets its largest per-node standardised deviation from the others.
    The candidate passes when its score does not exceed the ``level``
    quantile of all pooled scores, so an exchangeable candidate fails only
    when it is the single most extreme vector.  ``node_coverage`` is the
    fraction of nodes whose candidate value lies inside the per-node
    central ``level`` interval of the reference draws.
    """
    reference = np.asarray(reference, dtype=float)
    candidate = np.asarray(candidate, dtype=float)
    pool = np.vstack([reference, candidate[None, :]])
    scores = np.array([_loo_max_z(pool, j) for j in range(pool.shape[0])])
    thr = float(np.quantile(scores, level))
    lo, hi = np.quantile(reference, [(1 - level) / 2, (1 + level) / 2], axis=0)
    coverage = float(np.mean((candidate >= lo) & (candidate <= hi)))
    return BandCheck(float(scores[-1]), thr, coverage)
