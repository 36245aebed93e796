"""Personalized top-k queries built by stitching stored walk segments.

A personalized walk from a seed takes ordinary reset-walk steps but,
whenever it stands on a node that still has an unused stored segment,
splices that whole segment in and resets.  Reading a node's segments
and adjacency from the store is a *fetch*; fetches are the cost unit
modelled here.
"""

from __future__ import annotations

import bisect
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .graph import Graph
from .walks import SegmentKind, WalkSegment, WalkStore


class StitchError(RuntimeError):
    """The walk exceeded its step budget (pathological configuration)."""


@dataclass(frozen=True)
class QueryConfig:
    epsilon: float = 0.2
    alpha: float = 0.76
    c: float = 5.0
    mode: str = "pagerank"
    light_fetch: bool = False
    step_cap_factor: int = 100

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.mode not in ("pagerank", "salsa"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class FetchResult:
    node: int
    out_neighbors: list[int]
    segments: list[WalkSegment]
    in_neighbors: Optional[list[int]] = None


@dataclass
class FetchStats:
    fetches: int = 0
    cache_hits: int = 0
    segment_reuses: int = 0


@dataclass
class StitchedWalk:
    seed: int
    path: list[int]
    reset_positions: list[int] = field(default_factory=list)
    fetch_lengths: list[int] = field(default_factory=list)
    authority_positions: Optional[list[bool]] = None

    @property
    def length(self) -> int:
        return len(self.path)

    def fetches_before(self, s: int) -> int:
        """Fetches made by the prefix walk that first reaches length ``s``."""
        return bisect.bisect_left(self.fetch_lengths, s)

    def visit_counts(self) -> Counter:
        if self.authority_positions is None:
            return Counter(self.path)
        return Counter(v for v, auth in zip(self.path, self.authority_positions) if auth)


@dataclass
class TopKResult:
    items: list[tuple[int, int]]
    k: int
    excluded: frozenset = frozenset()
    truncated: bool = False
    walk_length: int = 0

    @property
    def nodes(self) -> list[int]:
        return [v for v, _ in self.items]


class Fetcher:
    """Query-local view of the stores with fetch accounting and caching.

    Parameters
    ----------
    light : bool
        Use the reduced fetch that returns either a node's stored
        segments or a single sampled out-edge, never the full
        adjacency list.
    """

    def __init__(self, graph: Graph, store: WalkStore, mode: str = "pagerank",
                 light: bool = False, rng=None):
        self.graph = graph
        self.store = store
        self.mode = mode
        self.light = light
        self.rng = rng
        self.stats = FetchStats()
        self._cache: dict[int, FetchResult] = {}

    def is_fetched(self, u: int) -> bool:
        return u in self._cache

    def fetch(self, u: int) -> FetchResult:
        hit = self._cache.get(u)
        if hit is not None:
            self.stats.cache_hits += 1
            return hit
        self.stats.fetches += 1
        g = self.graph
        if self.mode == "salsa":
            segs = (self.store.segments_from(u, SegmentKind.SALSA_FORWARD)
                    + self.store.segments_from(u, SegmentKind.SALSA_BACKWARD))
        else:
            segs = self.store.segments_from(u, SegmentKind.PAGERANK)
        if self.light:
            res = FetchResult(u, [], segs)
        else:
            res = FetchResult(u, list(g.out_adj[u]), segs,
                              list(g.in_adj[u]) if self.mode == "salsa" else None)
        self._cache[u] = res
        return res

    def fetch_edge(self, u: int, forward: bool = True) -> Optional[int]:
        """Light-mode fetch of one uniformly sampled neighbour (``None`` if none)."""
        self.stats.fetches += 1
        nbrs = self.graph.out_adj[u] if forward else self.graph.in_adj[u]
        if not nbrs:
            return None
        return nbrs[int(self.rng.random() * len(nbrs))]


def stitch_walk(g: Graph, ws: WalkStore, seed: int, L: int, cfg: QueryConfig = QueryConfig(),
                rng=None, fetcher: Optional[Fetcher] = None) -> tuple[StitchedWalk, FetchStats]:
    """Personalized walk from ``seed`` of length at least ``L``.

    Resets append the seed and count as visits to it.  A consumed
    segment contributes its nodes after the current one, followed by a
    reset.  Fetching a node does not advance the walk; the loop simply
    runs again at the same endpoint.
    """
    if L < 0:
        raise ValueError("L must be non-negative")
    if fetcher is None:
        fetcher = Fetcher(g, ws, cfg.mode, cfg.light_fetch, rng)
    if cfg.mode == "salsa":
        return _stitch_salsa(seed, L, cfg, rng, fetcher)
    eps = cfg.epsilon
    light = fetcher.light
    walk = StitchedWalk(seed, [seed])
    path = walk.path
    pools: dict[int, list[list[int]]] = {}
    adj: dict[int, list[int]] = {}
    stats = fetcher.stats
    cap = cfg.step_cap_factor * max(L, 1)
    iterations = 0
    while len(path) < L:
        iterations += 1
        if iterations > cap:
            raise StitchError(f"walk from {seed} exceeded {cap} iterations")
        u = path[-1]
        if rng.random() < eps:
            walk.reset_positions.append(len(path))
            path.append(seed)
            continue
        pool = pools.get(u)
        if pool:
            path.extend(pool.pop()[1:])
            stats.segment_reuses += 1
            walk.reset_positions.append(len(path))
            path.append(seed)
            continue
        if fetcher.is_fetched(u):
            if light:
                walk.fetch_lengths.append(len(path))
                nxt = fetcher.fetch_edge(u)
            else:
                stats.cache_hits += 1
                out = adj[u]
                nxt = out[int(rng.random() * len(out))] if out else None
            if nxt is None:
                walk.reset_positions.append(len(path))
                path.append(seed)
            else:
                path.append(nxt)
            continue
        walk.fetch_lengths.append(len(path))
        res = fetcher.fetch(u)
        pools[u] = [s.path for s in reversed(res.segments)]
        adj[u] = res.out_neighbors
    return walk, stats


def _stitch_salsa(seed, L, cfg, rng, fetcher):
    """Alternating variant: seed is a hub, resets happen at authority positions."""
    eps = cfg.epsilon
    walk = StitchedWalk(seed, [seed], authority_positions=[False])
    path, auth = walk.path, walk.authority_positions
    pools: dict[tuple[int, bool], list[list[int]]] = {}
    adj: dict[tuple[int, bool], list[int]] = {}
    stats = fetcher.stats
    cap = cfg.step_cap_factor * max(L, 1)
    iterations = 0

    def reset():
        walk.reset_positions.append(len(path))
        path.append(seed)
        auth.append(False)

    while len(path) < L:
        iterations += 1
        if iterations > cap:
            raise StitchError(f"walk from {seed} exceeded {cap} iterations")
        u = path[-1]
        at_hub = not auth[-1]
        if not at_hub and rng.random() < eps:
            reset()
            continue
        pool = pools.get((u, at_hub))
        if pool:
            seg = pool.pop()
            side = at_hub  # authority flag of seg[1]: the opposite side
            for node in seg[1:]:
                path.append(node)
                auth.append(side)
                side = not side
            stats.segment_reuses += 1
            reset()
            continue
        if fetcher.is_fetched(u):
            if fetcher.light:
                walk.fetch_lengths.append(len(path))
                nxt = fetcher.fetch_edge(u, forward=at_hub)
            else:
                stats.cache_hits += 1
                nbrs = adj[(u, at_hub)]
                nxt = nbrs[int(rng.random() * len(nbrs))] if nbrs else None
            if nxt is None:
                reset()
            else:
                path.append(nxt)
                auth.append(at_hub)
            continue
        walk.fetch_lengths.append(len(path))
        res = fetcher.fetch(u)
        fwd = [s.path for s in reversed(res.segments) if s.kind is SegmentKind.SALSA_FORWARD]
        bwd = [s.path for s in reversed(res.segments) if s.kind is SegmentKind.SALSA_BACKWARD]
        pools[(u, True)] = fwd
        pools[(u, False)] = bwd
        adj[(u, True)] = res.out_neighbors
        adj[(u, False)] = res.in_neighbors or []
    return walk, stats


# --------------------------------------------------------------------------
# sizing and bounds


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def walk_length_for_top_k(k: int, n: int, alpha: float, c: float) -> int:
    """Shortest walk expected to visit each of the top ``k`` nodes ``c`` times."""
    _check_alpha(alpha)
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if c < 1:
        raise ValueError("c must be >= 1")
    s = c / (1.0 - alpha) * k * (n / k) ** (1.0 - alpha)
    return int(math.ceil(s - 1e-9 * s))


def theoretical_fetch_bound(s: float, n: int, R: int, alpha: float) -> float:
    """Expected-fetch upper bound for a stitched walk of length ``s``."""
    _check_alpha(alpha)
    if R < 1:
        raise ValueError("R must be >= 1")
    if n < 1 or s < 0:
        raise ValueError("need n >= 1 and s >= 0")
    return 1.0 + (2.0 * (1.0 - alpha) / (n * R)) ** (1.0 / alpha - 1.0) * s ** (1.0 / alpha)


def corollary_fetch_bound(k: int, R: int, alpha: float, c: float) -> float:
    """Expected fetches needed to find the top ``k`` nodes."""
    _check_alpha(alpha)
    if R < 1 or k < 0 or c < 1:
        raise ValueError("need R >= 1, k >= 0, c >= 1")
    return 1.0 + c ** (1.0 / alpha) / ((1.0 - alpha) * (R / 2.0) ** (1.0 / alpha - 1.0)) * k


def rank_visits(counts: Counter, exclude: Iterable[int] = ()) -> list[tuple[int, int]]:
    """Nodes by descending visit count, ties broken by ascending id."""
    skip = set(exclude)
    items = [(v, c) for v, c in counts.items() if c > 0 and v not in skip]
    items.sort(key=lambda vc: (-vc[1], vc[0]))
    return items


def top_k(g: Graph, ws: WalkStore, seed: int, k: int, cfg: QueryConfig = QueryConfig(),
          exclusions: Iterable[int] = (), rng=None,
          L: Optional[int] = None) -> tuple[TopKResult, FetchStats]:
    """The ``k`` most visited nodes of a stitched personalized walk.

    ``L`` defaults to :func:`walk_length_for_top_k` with the config's
    ``alpha`` and ``c``; exponents at or above 1 are clamped to 0.99.
    """
    excluded = frozenset(exclusions) | {seed}
    if L is None:
        alpha = cfg.alpha
        if alpha >= 1.0:
            warnings.warn(f"alpha {alpha} >= 1 clamped to 0.99 for walk sizing")
            alpha = 0.99
        L = walk_length_for_top_k(max(1, min(k, g.n)), g.n, alpha, cfg.c)
    walk, stats = stitch_walk(g, ws, seed, L, cfg, rng)
    ranked = rank_visits(walk.visit_counts(), excluded)
    available = g.n - len(excluded)
    truncated = k > available or len(ranked) < k
    return TopKResult(ranked[:k], k, excluded, truncated, walk.length), stats


def write_topk_csv(path, result: TopKResult) -> None:
    with open(path, "w") as fh:
        fh.write("rank,node,count\n")
        for i, (v, c) in enumerate(result.items, start=1):
            fh.write(f"{i},{v},{c}\n")


def write_stats_csv(path, stats: FetchStats, walk_length: int) -> None:
    with open(path, "w") as fh:
        fh.write("fetches,cache_hits,segment_reuses,walk_length\n")
        fh.write(f"{stats.fetches},{stats.cache_hits},{stats.segment_reuses},{walk_length}\n")
