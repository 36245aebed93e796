"""Synthetic graphs, arrival streams and the statistics used to validate them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .graph import DirectedEdge, Graph, parse_edge_lines
from .oracle import power_iteration_pagerank


class StreamEvent(NamedTuple):
    op: str  # "add" or "remove"
    src: int
    dst: int

    @property
    def edge(self) -> DirectedEdge:
        return DirectedEdge(self.src, self.dst)


class StreamError(ValueError):
    pass


class ArrivalStream:
    """Ordered edge events; adds never duplicate a live edge, removes never miss."""

    def __init__(self, events: Iterable[StreamEvent] = ()):
        self.events: list[StreamEvent] = [StreamEvent(*e) for e in events]

    @classmethod
    def of_adds(cls, edges: Iterable[tuple[int, int]]) -> "ArrivalStream":
        return cls(StreamEvent("add", u, v) for u, v in edges)

    def __iter__(self) -> Iterator[StreamEvent]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, i):
        return self.events[i]

    def edges(self) -> list[DirectedEdge]:
        return [e.edge for e in self.events]

    def validate(self, base: Optional[Graph] = None) -> None:
        live = base.edge_set() if base is not None else set()
        for i, (op, u, v) in enumerate(self.events):
            if op == "add":
                if (u, v) in live:
                    raise StreamError(f"event {i}: add of live edge ({u}, {v})")
                live.add((u, v))
            elif op == "remove":
                if (u, v) not in live:
                    raise StreamError(f"event {i}: remove of absent edge ({u}, {v})")
                live.remove((u, v))
            else:
                raise StreamError(f"event {i}: unknown op {op!r}")

    def replay(self, g: Graph) -> Graph:
        for op, u, v in self.events:
            if op == "add":
                g.add_edge(u, v)
            else:
                g.remove_edge(u, v)
        return g

    @classmethod
    def from_files(cls, add_path=None, remove_path=None) -> "ArrivalStream":
        """Adds from one edge file, then removals from another."""
        events = []
        for path, op in ((add_path, "add"), (remove_path, "remove")):
            if path is None:
                continue
            with Path(path).open() as fh:
                events.extend(StreamEvent(op, u, v) for u, v in parse_edge_lines(fh, path))
        return cls(events)


def random_permutation_stream(edges: Sequence[tuple[int, int]], rng) -> ArrivalStream:
    edges = list(edges)
    order = rng.permutation(len(edges))
    return ArrivalStream.of_adds(edges[i] for i in order)


def _uniform_dst(u: int, n: int, taken, rng) -> int:
    for _ in range(64):
        v = int(rng.integers(n))
        if v != u and v not in taken:
            return v
    free = [v for v in range(n) if v != u and v not in taken]
    return free[int(rng.integers(len(free)))]


def dirichlet_source_probs(out_degrees: Sequence[int]) -> np.ndarray:
    """Source law of the next arrival given current out-degrees: ``(d + 1) / (t - 1 + n)``."""
    d = np.asarray(out_degrees, dtype=float)
    return (d + 1.0) / (d.sum() + d.size)


def dirichlet_stream(n: int, m: int, rng) -> ArrivalStream:
    """Arrivals whose source is chosen with probability (outdeg + 1) / (t - 1 + n).

    Destinations are uniform over nodes that would not create a
    self-loop or duplicate edge.  A source with no free destination left
    is redrawn, so the law is conditioned on non-saturated sources.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if n < 2 or m > n * (n - 1):
        raise ValueError("need n >= 2 and m <= n(n-1)")
    tickets = list(range(n))
    out: list[set[int]] = [set() for _ in range(n)]
    events = []
    while len(events) < m:
        u = tickets[int(rng.integers(len(tickets)))]
        if len(out[u]) == n - 1:
            continue
        v = _uniform_dst(u, n, out[u], rng)
        out[u].add(v)
        tickets.append(u)
        events.append(StreamEvent("add", u, v))
    return ArrivalStream(events)


def example1_nodes(N: int) -> dict[str, object]:
    """Node ids of the adversarial construction: cycle v, hub u, x's and y's."""
    return {"v": list(range(N)), "u": N, "x": list(range(N + 1, 2 * N + 1)),
            "y": list(range(2 * N + 1, 3 * N + 1))}


def example1_edges(N: int) -> list[DirectedEdge]:
    if N < 1:
        raise ValueError("N must be >= 1")
    ids = example1_nodes(N)
    v, u, x, y = ids["v"], ids["u"], ids["x"], ids["y"]
    edges = []
    if N >= 2:  # a 1-cycle would be a self-loop
        edges += [DirectedEdge(v[j], v[(j + 1) % N]) for j in range(N)]
    edges += [DirectedEdge(vj, u) for vj in v]
    edges += [DirectedEdge(u, xj) for xj in x]
    edges += [DirectedEdge(xj, u) for xj in x]
    edges += [DirectedEdge(v[0], yj) for yj in y]
    edges += [DirectedEdge(yj, v[0]) for yj in y]
    return edges


def example1_graph(N: int) -> tuple[Graph, DirectedEdge]:
    """The adversarial graph and its (not yet added) trigger edge ``u -> v_1``."""
    g = Graph.from_edges(example1_edges(N), n=3 * N + 1)
    ids = example1_nodes(N)
    return g, DirectedEdge(ids["u"], ids["v"][0])


def _rank_weights(n: int, alpha: float) -> np.ndarray:
    w = np.arange(1, n + 1, dtype=float) ** -alpha
    return w / w.sum()


def powerlaw_indegrees(n: int, m: int, alpha: float) -> np.ndarray:
    """Integer in-degree targets for ranks ``1..n`` decaying like ``j**-alpha``."""
    w = _rank_weights(n, alpha)
    d = np.maximum(1, np.rint(w * m)).astype(np.int64)
    return np.minimum(d, n - 1)


def powerlaw_edges(n: int, target_alpha: float, rng, avg_degree: float = 10.0,
                   out_alpha: float = 0.5) -> list[DirectedEdge]:
    """Edges with power-law in-degrees and weight-proportional sources.

    Node ranks are shuffled; the node of in-rank ``j`` receives
    ``~ m * j**-target_alpha / sum`` in-edges, and the source of each
    in-edge is drawn in proportion to an independent out-weight
    ``rank**-out_alpha`` (attachment by popularity on both sides).
    Self-loops and duplicates are redrawn.
    """
    if not 0.0 < target_alpha < 1.0:
        raise ValueError("target_alpha must lie in (0, 1)")
    if n < 2:
        raise ValueError("n must be >= 2")
    m = min(int(round(n * avg_degree)), n * (n - 1) // 2)
    indeg = powerlaw_indegrees(n, m, target_alpha)
    dst_nodes = rng.permutation(n)
    stubs = np.repeat(dst_nodes, indeg)
    src_cdf = np.cumsum(_rank_weights(n, out_alpha)[rng.permutation(n)])
    seen: set[tuple[int, int]] = set()
    edges: list[DirectedEdge] = []
    pending = stubs[rng.permutation(stubs.size)]
    for _ in range(1000):
        if pending.size == 0:
            break
        us = np.minimum(np.searchsorted(src_cdf, rng.random(pending.size) * src_cdf[-1]), n - 1)
        retry = []
        for u, v in zip(us.tolist(), pending.tolist()):
            if u == v or (u, v) in seen:
                retry.append(v)
                continue
            seen.add((u, v))
            edges.append(DirectedEdge(u, v))
        pending = np.asarray(retry, dtype=np.int64)
    return edges


def powerlaw_graph(n: int, target_alpha: float, rng, avg_degree: float = 10.0,
                   out_alpha: float = 0.5) -> Graph:
    return Graph.from_edges(powerlaw_edges(n, target_alpha, rng, avg_degree, out_alpha), n=n)


def community_powerlaw_graph(n: int, rng, n_communities: int = 20, target_alpha: float = 0.76,
                             avg_degree: float = 10.0, p_in: float = 0.8,
                             out_alpha: float = 0.5) -> tuple[Graph, np.ndarray]:
    """Power-law attachment graph with planted communities.

    With probability ``p_in`` an edge's destination is drawn from the
    source's own community, otherwise from the whole graph, in both cases
    proportionally to in-weight.  Returns the graph and community labels.
    """
    labels = rng.integers(n_communities, size=n)
    in_w = _rank_weights(n, target_alpha)[rng.permutation(n)]
    out_w = _rank_weights(n, out_alpha)[rng.permutation(n)]
    m = min(int(round(n * avg_degree)), n * (n - 1) // 2)
    members = [np.flatnonzero(labels == c) for c in range(n_communities)]
    cdfs = [np.cumsum(in_w[idx]) for idx in members]
    gcdf = np.cumsum(in_w)
    ocdf = np.cumsum(out_w)
    seen: set[tuple[int, int]] = set()
    edges = []
    while len(edges) < m:
        u = int(min(np.searchsorted(ocdf, rng.random() * ocdf[-1]), n - 1))
        if rng.random() < p_in and members[labels[u]].size > 1:
            idx, cdf = members[labels[u]], cdfs[labels[u]]
            v = int(idx[min(np.searchsorted(cdf, rng.random() * cdf[-1]), idx.size - 1)])
        else:
            v = int(min(np.searchsorted(gcdf, rng.random() * gcdf[-1]), n - 1))
        if u == v or (u, v) in seen:
            continue
        seen.add((u, v))
        edges.append(DirectedEdge(u, v))
    return Graph.from_edges(edges, n=n), labels


def random_digraph(n: int, m: int, rng, min_out: int = 1) -> Graph:
    """Uniform simple digraph with ``m`` edges; every node gets ``min_out`` out-edges first."""
    if m > n * (n - 1):
        raise ValueError("too many edges")
    g = Graph(n)
    for u in range(n):
        for _ in range(min_out):
            g.add_edge(u, _uniform_dst(u, n, set(g.out_adj[u]), rng))
    while g.m < m:
        u, v = (int(x) for x in rng.integers(n, size=2))
        if u != v and not g.has_edge(u, v):
            g.add_edge(u, v)
    return g


# --------------------------------------------------------------------------
# estimators


@dataclass
class PowerLawFit:
    alpha: float
    window: tuple[int, int]
    r_squared: float
    intercept: float = 0.0
    degenerate: bool = False


def fit_powerlaw(sorted_values: Sequence[float], window: Optional[tuple[int, int]] = None,
                 min_points: int = 10) -> PowerLawFit:
    """Least-squares slope of log(value) against log(rank) over a 1-based rank window.

    ``alpha`` is the negated slope.  Without a window the fit spans every
    leading positive entry.
    """
    vals = np.asarray(sorted_values, dtype=float)
    if window is None:
        positive = np.flatnonzero(vals <= 0)
        hi = int(positive[0]) if positive.size else vals.size
        window = (1, hi)
    lo, hi = int(window[0]), int(min(window[1], vals.size))
    if lo < 1 or hi - lo + 1 < min_points:
        raise ValueError(f"fit window [{lo}, {hi}] has fewer than {min_points} points")
    y = vals[lo - 1:hi]
    if np.any(y <= 0):
        raise ValueError("values must be positive inside the fit window")
    if np.any(np.diff(y) > 0):
        raise ValueError("values must be sorted non-increasing")
    x = np.log(np.arange(lo, hi + 1, dtype=float))
    ly = np.log(y)
    slope, intercept = np.polyfit(x, ly, 1)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    if ss_tot <= 1e-24:
        return PowerLawFit(0.0, (lo, hi), float("nan"), float(ly.mean()), True)
    ss_res = float(((ly - (slope * x + intercept)) ** 2).sum())
    return PowerLawFit(float(-slope), (lo, hi), 1.0 - ss_res / ss_tot, float(intercept))


def personalized_fit_window(friends: int) -> tuple[int, int]:
    """Rank window ``[2f, 20f]`` used for a seed with ``f`` out-neighbours."""
    f = max(1, friends)
    return 2 * f, 20 * f


def mx_values(stream: ArrivalStream, base: Optional[Graph] = None, n: Optional[int] = None,
              epsilon: float = 0.2, checkpoint: Optional[int] = None) -> np.ndarray:
    """Per-arrival ``t * pi[src] / outdeg(src)`` with ``t`` the edge count after arrival.

    PageRank is recomputed after the first arrival and then every
    ``checkpoint`` arrivals (default ``max(1, len(stream) // 50)``).
    """
    g = base.copy() if base is not None else Graph(n or 0)
    if n is not None:
        g.grow(n)
    adds = [e for e in stream if e.op == "add"]
    if checkpoint is None:
        checkpoint = max(1, len(adds) // 50)
    out = np.empty(len(adds))
    pi = None
    for i, (_, u, v) in enumerate(adds):
        g.add_edge(u, v)
        if pi is None or i % checkpoint == 0 or pi.size < g.n:
            pi = power_iteration_pagerank(g, epsilon, tol=1e-10)
        out[i] = g.m * pi[u] / g.out_degree(u)
    return out


def mx_statistic(stream: ArrivalStream, base: Optional[Graph] = None, n: Optional[int] = None,
                 epsilon: float = 0.2, checkpoint: Optional[int] = None) -> float:
    """Mean of :func:`mx_values`; ``1`` in expectation for random-order arrivals."""
    return float(mx_values(stream, base, n, epsilon, checkpoint).mean())


@dataclass
class DegreeCDFs:
    d: np.ndarray
    arrival: np.ndarray
    existing: np.ndarray

    def sup_distance(self) -> float:
        return float(np.abs(self.arrival - self.existing).max())

    def rows(self):
        return zip(self.d.tolist(), self.arrival.tolist(), self.existing.tolist())


def degree_cdfs(g: Graph, recent_arrivals: Iterable[tuple[int, int]],
                reference: str = "time_averaged") -> DegreeCDFs:
    """Arrival and existing out-degree CDFs.

    ``g`` is the graph after the recent arrivals.  An arrival's degree is
    its source's out-degree right after that arrival, recovered by
    rewinding the arrivals.

    The existing CDF weights each node by its out-degree.  With
    ``reference="final"`` the weights come from ``g`` alone; with the
    default ``"time_averaged"`` the existing CDF is evaluated on the
    graph as it stood at every arrival of the window and averaged, so
    both curves describe the same stretch of time.  The difference
    matters when the window is a sizeable fraction of the stream.
    """
    if reference not in ("final", "time_averaged"):
        raise ValueError(f"unknown reference {reference!r}")
    arrivals = [(e[-2], e[-1]) for e in recent_arrivals]
    deg = np.asarray(g.out_degrees(), dtype=np.int64)
    top = int(deg.max(initial=0))
    run = deg.copy()
    m = g.m
    arr_deg = np.empty(len(arrivals), dtype=np.int64)
    acc = np.zeros(top + 1)
    for i in range(len(arrivals) - 1, -1, -1):
        u = arrivals[i][0]
        if reference == "time_averaged":
            acc += np.cumsum(np.bincount(run, weights=run, minlength=top + 1)) / max(1, m)
        arr_deg[i] = run[u]
        run[u] -= 1
        m -= 1
    grid = np.arange(0, top + 1)
    a = np.searchsorted(np.sort(arr_deg), grid, side="right") / max(1, len(arrivals))
    if reference == "time_averaged" and arrivals:
        e = acc / len(arrivals)
    else:
        e = np.cumsum(np.bincount(deg, weights=deg, minlength=top + 1)) / max(1, g.m)
    if not arrivals:
        a = np.ones(top + 1)
    return DegreeCDFs(grid, a, e)


def interpolated_precision_11pt(truth: Sequence[int], retrieved: Sequence[int]) -> list[float]:
    """Interpolated precision at recall 0.0, 0.1, ..., 1.0."""
    relevant = set(truth)
    if not relevant:
        raise ValueError("truth must be non-empty")
    precisions, recalls = [], []
    hits = 0
    for i, v in enumerate(retrieved, start=1):
        if v in relevant:
            hits += 1
        precisions.append(hits / i)
        recalls.append(hits / len(relevant))
    p = np.asarray(precisions)
    r = np.asarray(recalls)
    out = []
    for level in np.linspace(0.0, 1.0, 11):
        mask = r >= level - 1e-12
        out.append(float(p[mask].max()) if mask.any() else 0.0)
    return out


def write_precision_csv(path, curve: Sequence[float]) -> None:
    with open(path, "w") as fh:
        fh.write("recall,precision\n")
        for i, p in enumerate(curve):
            fh.write(f"{i / 10:.1f},{p:.6f}\n")


def harmonic(m: int) -> float:
    return float(sum(1.0 / t for t in range(1, m + 1)))


def update_work_bound(n: int, R: int, eps: float, m: int) -> float:
    """Upper bound on expected total rewalk steps over ``m`` random-order arrivals."""
    return n * R / eps ** 2 * math.log(m)
