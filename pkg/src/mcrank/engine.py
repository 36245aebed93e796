"""Monte Carlo PageRank / SALSA from stored walk segments, with incremental repair.

Every node owns ``R`` short walks that stop at their first reset.  The
PageRank estimate of ``v`` is ``X_v * eps / (n R)`` where ``X_v`` counts
visits over all stored walks.  When an edge arrives or leaves, only the
walks whose random choice at the edge's endpoint would now differ are
truncated and re-simulated, which keeps the stored walks distributed
exactly as freshly generated walks on the current graph.

SALSA walks alternate forward (out-edge) and backward (in-edge) steps.
A forward step out of a hub is always taken; the reset coin is flipped
at authority positions, so a SALSA walk can only stop on the authority
side (or where the required step does not exist).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import Graph
from .walks import SegmentKind, WalkSegment, WalkStore

PAGERANK = "pagerank"
SALSA = "salsa"


@dataclass(frozen=True)
class EngineConfig:
    epsilon: float = 0.2
    walks_per_node: int = 10
    mode: str = PAGERANK
    dangling_policy: str = "reset"
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if self.mode not in (PAGERANK, SALSA):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.dangling_policy != "reset":
            raise ValueError("only the 'reset' dangling policy is supported")

    @property
    def R(self) -> int:
        return self.walks_per_node

    def make_rng(self) -> np.random.Generator:
        return np.random.default_rng(self.rng_seed)


@dataclass
class UpdateCost:
    t: int
    segments_rerouted: int = 0
    rewalk_steps: int = 0
    store_called: bool = False


# --------------------------------------------------------------------------
# walk simulation


def _pagerank_tail(g: Graph, node: int, eps: float, rng) -> tuple[list[int], bool]:
    """Continue a PageRank walk sitting at ``node`` whose coin is not yet flipped.

    Returns the nodes appended after ``node`` and whether the walk
    stopped at a dangling node.
    """
    steps = int(rng.geometric(eps)) - 1
    if steps == 0:
        return [], False
    out_adj = g.out_adj
    draws = rng.random(steps).tolist()
    tail = []
    cur = node
    for r in draws:
        out = out_adj[cur]
        if not out:
            return tail, True
        cur = out[int(r * len(out))]
        tail.append(cur)
    return tail, False


def _salsa_tail(g: Graph, node: int, hub_side: bool, eps: float,
                rng) -> tuple[list[int], bool]:
    """Continue an alternating walk at ``node``.

    ``hub_side`` says the next move out of ``node`` is a forward step
    (always attempted); otherwise the reset coin is flipped first and a
    backward step follows on survival.
    """
    backward = int(rng.geometric(eps)) - 1
    draws = rng.random(2 * backward + 2).tolist()
    out_adj, in_adj = g.out_adj, g.in_adj
    tail = []
    cur = node
    i = 0
    while True:
        if hub_side:
            out = out_adj[cur]
            if not out:
                return tail, True
            cur = out[int(draws[i] * len(out))]
        else:
            if backward == 0:
                return tail, False
            backward -= 1
            inn = in_adj[cur]
            if not inn:
                return tail, True
            cur = inn[int(draws[i] * len(inn))]
        i += 1
        tail.append(cur)
        hub_side = not hub_side


def generate_segment(g: Graph, source: int, cfg: EngineConfig, rng,
                     kind=SegmentKind.PAGERANK, seg_id: int = -1) -> WalkSegment:
    """Simulate one walk from ``source`` until its first reset."""
    kind = SegmentKind(kind)
    if not 0 <= source < g.n:
        raise IndexError(f"source {source} not in graph")
    if kind is SegmentKind.PAGERANK:
        tail, dangling = _pagerank_tail(g, source, cfg.epsilon, rng)
    else:
        tail, dangling = _salsa_tail(g, source, kind is SegmentKind.SALSA_FORWARD,
                                     cfg.epsilon, rng)
    return WalkSegment(seg_id, source, [source] + tail, kind, dangling)


def _build_pagerank_segments(g: Graph, ws: WalkStore, cfg: EngineConfig, rng) -> None:
    n, R, eps = g.n, cfg.walks_per_node, cfg.epsilon
    sources = np.repeat(np.arange(n), R)
    steps = (rng.geometric(eps, size=sources.size) - 1).tolist()
    draws = rng.random(int(sum(steps))).tolist()
    out_adj = g.out_adj

    def walks():
        k = 0
        for src, s in zip(sources.tolist(), steps):
            path = [src]
            cur = src
            dangling = False
            for r in draws[k:k + s]:
                out = out_adj[cur]
                if not out:
                    dangling = True
                    break
                cur = out[int(r * len(out))]
                path.append(cur)
            k += s
            yield src, path, dangling

    ws.grow(n)
    ws.add_many(walks(), SegmentKind.PAGERANK)


def build_all(g: Graph, cfg: EngineConfig, rng=None) -> tuple[WalkStore, np.ndarray]:
    """Store ``R`` PageRank walks per node and return the store and estimate."""
    rng = cfg.make_rng() if rng is None else rng
    ws = WalkStore(g.n)
    _build_pagerank_segments(g, ws, cfg, rng)
    return ws, estimate_pagerank(ws, g.n, cfg)


def estimate_pagerank(ws: WalkStore, n: int, cfg: EngineConfig,
                      normalize: bool = False) -> np.ndarray:
    """``X_v * epsilon / (n R)`` for every node.

    Walks that stop at a dangling node are shorter than ``1/epsilon`` on
    average, so on graphs with dangling nodes these values sum to less
    than one.  ``normalize=True`` returns ``X_v / sum(X)`` instead, the
    consistent estimate of PageRank with dangling mass spread uniformly.
    """
    visits = np.zeros(n)
    x = ws.visits()[:n]
    visits[:x.size] = x
    if normalize:
        total = visits.sum()
        return visits / total if total else visits
    return visits * cfg.epsilon / (n * cfg.walks_per_node)


def should_notify(d: int, W: int, rng) -> bool:
    """Decide whether an arrival at a node of out-degree ``d`` touches the walk store.

    True with probability ``1 - (1 - 1/d)**W``: the chance that at
    least one of ``W`` visits picks the new edge.
    """
    if d < 1:
        raise ValueError("out-degree must be >= 1 after an arrival")
    if W <= 0:
        return False
    if d == 1:
        return True
    return rng.random() < -math.expm1(W * math.log1p(-1.0 / d))


def _fires_given_any(count: int, p: float, rng) -> list[int]:
    """Indices of ``count`` Bernoulli(p) trials, conditioned on at least one success."""
    if p >= 1.0:
        return list(range(count))
    log_q = math.log1p(-p)
    none = math.exp(count * log_q)
    u = rng.random()
    first = int(math.log1p(-u * (1.0 - none)) / log_q)
    first = min(first, count - 1)
    rest = np.flatnonzero(rng.random(count - first - 1) < p) + first + 1
    return [first] + rest.tolist()


def on_edge_arrival(g: Graph, ws: WalkStore, e, cfg: EngineConfig, rng) -> UpdateCost:
    """Repair PageRank walks after ``e = (u, v)`` has been added to ``g``.

    Each visit to ``u`` that stepped onward (or stopped only because
    ``u`` was dangling) switches to the new edge with probability
    ``1/outdeg(u)``.  The earliest switching visit of a segment wins.
    """
    u, v = e
    cost = UpdateCost(t=g.t)
    d = g.out_degree(u)
    X = ws.visit_count(u)
    if not should_notify(d, X, rng):
        return cost
    cost.store_called = True
    visits = [(sid, pos) for sid, positions in ws.visit_map(u).items()
              for pos in positions]
    segments = ws.segments
    chosen: dict[int, int] = {}
    for i in _fires_given_any(len(visits), 1.0 / d, rng):
        sid, pos = visits[i]
        if sid in chosen:
            continue
        seg = segments[sid]
        if pos == len(seg.path) - 1 and not seg.dangling_end:
            continue
        chosen[sid] = pos
    for sid, pos in chosen.items():
        tail, dangling = _pagerank_tail(g, v, cfg.epsilon, rng)
        suffix = [v] + tail
        ws.truncate_and_replace(sid, pos, suffix, dangling)
        cost.segments_rerouted += 1
        cost.rewalk_steps += len(suffix)
    return cost


def on_edge_removal(g: Graph, ws: WalkStore, e, cfg: EngineConfig, rng) -> UpdateCost:
    """Repair PageRank walks after ``e = (u, v)`` has been removed from ``g``."""
    u, v = e
    cost = UpdateCost(t=g.t)
    hits = []
    for sid, positions in ws.visit_map(u).items():
        path = ws.segments[sid].path
        last = len(path) - 1
        for pos in positions:
            if pos < last and path[pos + 1] == v:
                hits.append((sid, pos))
                break
    if hits:
        cost.store_called = True
    out = g.out_adj[u]
    for sid, pos in hits:
        if out:
            nxt = out[int(rng.random() * len(out))]
            tail, dangling = _pagerank_tail(g, nxt, cfg.epsilon, rng)
            suffix = [nxt] + tail
        else:
            suffix, dangling = [], True
        ws.truncate_and_replace(sid, pos, suffix, dangling)
        cost.segments_rerouted += 1
        cost.rewalk_steps += len(suffix)
    return cost


# --------------------------------------------------------------------------
# SALSA


def build_salsa(g: Graph, cfg: EngineConfig, rng=None) -> WalkStore:
    """Store ``R`` forward-start and ``R`` backward-start walks per node."""
    rng = cfg.make_rng() if rng is None else rng
    ws = WalkStore(g.n)
    eps = cfg.epsilon
    for src in range(g.n):
        for kind in (SegmentKind.SALSA_FORWARD, SegmentKind.SALSA_BACKWARD):
            hub = kind is SegmentKind.SALSA_FORWARD
            for _ in range(cfg.walks_per_node):
                tail, dangling = _salsa_tail(g, src, hub, eps, rng)
                ws.add(src, [src] + tail, kind, dangling)
    return ws


def salsa_side_counts(ws: WalkStore, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Visit counts split into hub-side and authority-side positions."""
    hub = np.zeros(n)
    auth = np.zeros(n)
    for seg in ws:
        path = seg.path
        hub_first = seg.kind is not SegmentKind.SALSA_BACKWARD
        even = path[0::2]
        odd = path[1::2]
        np.add.at(hub if hub_first else auth, even, 1)
        np.add.at(auth if hub_first else hub, odd, 1)
    return hub, auth


def estimate_salsa(ws: WalkStore, n: int, cfg: EngineConfig) -> tuple[np.ndarray, np.ndarray]:
    """Hub and authority estimates, each normalised to sum to one."""
    hub, auth = salsa_side_counts(ws, n)
    scale = cfg.epsilon / (2 * n * cfg.walks_per_node)
    hub, auth = hub * scale, auth * scale
    hs, as_ = hub.sum(), auth.sum()
    return (hub / hs if hs else hub), (auth / as_ if as_ else auth)


def _salsa_reroute(g, ws, sid, pos, seg, u, v, cfg, rng, cost):
    if seg.is_hub_position(pos):
        new, hub_next = v, False
    else:
        new, hub_next = u, True
    tail, dangling = _salsa_tail(g, new, hub_next, cfg.epsilon, rng)
    suffix = [new] + tail
    ws.truncate_and_replace(sid, pos, suffix, dangling)
    cost.segments_rerouted += 1
    cost.rewalk_steps += len(suffix)


def on_edge_arrival_salsa(g: Graph, ws: WalkStore, e, cfg: EngineConfig, rng) -> UpdateCost:
    """Repair SALSA walks after ``e = (u, v)`` has been added.

    Forward steps out of hub visits of ``u`` switch to ``v`` with
    probability ``1/outdeg(u)``; backward steps out of authority visits
    of ``v`` switch to ``u`` with probability ``1/indeg(v)``.
    """
    u, v = e
    cost = UpdateCost(t=g.t)
    segments = ws.segments
    cand: dict[int, list[tuple[int, float]]] = {}

    def collect(node, want_hub, p):
        for sid, positions in ws.visit_map(node).items():
            seg = segments[sid]
            last = len(seg.path) - 1
            for pos in positions:
                if seg.is_hub_position(pos) != want_hub:
                    continue
                if pos == last and not seg.dangling_end:
                    continue
                cand.setdefault(sid, []).append((pos, p))

    collect(u, True, 1.0 / g.out_degree(u))
    collect(v, False, 1.0 / g.in_degree(v))
    if not cand:
        return cost
    cost.store_called = True
    for sid, entries in cand.items():
        entries.sort()
        draws = rng.random(len(entries))
        for (pos, p), r in zip(entries, draws):
            if r < p:
                _salsa_reroute(g, ws, sid, pos, segments[sid], u, v, cfg, rng, cost)
                break
    return cost


def on_edge_removal_salsa(g: Graph, ws: WalkStore, e, cfg: EngineConfig, rng) -> UpdateCost:
    """Repair SALSA walks after ``e = (u, v)`` has been removed."""
    u, v = e
    cost = UpdateCost(t=g.t)
    segments = ws.segments
    hits: dict[int, int] = {}
    for node, want_hub, other in ((u, True, v), (v, False, u)):
        for sid, positions in ws.visit_map(node).items():
            seg = segments[sid]
            path = seg.path
            for pos in positions:
                if (pos + 1 < len(path) and path[pos + 1] == other
                        and seg.is_hub_position(pos) == want_hub):
                    if pos < hits.get(sid, len(path)):
                        hits[sid] = pos
                    break
    for sid, pos in hits.items():
        seg = segments[sid]
        hub = seg.is_hub_position(pos)
        nbrs = g.out_adj[u] if hub else g.in_adj[v]
        if nbrs:
            new = nbrs[int(rng.random() * len(nbrs))]
            tail, dangling = _salsa_tail(g, new, not hub, cfg.epsilon, rng)
            suffix = [new] + tail
        else:
            suffix, dangling = [], True
        ws.truncate_and_replace(sid, pos, suffix, dangling)
        cost.segments_rerouted += 1
        cost.rewalk_steps += len(suffix)
    cost.store_called = bool(hits)
    return cost


# --------------------------------------------------------------------------


class MonteCarloEngine:
    """Graph plus walk store kept consistent under edge arrivals and removals.

    >>> eng = MonteCarloEngine(Graph.from_edges([(0, 1), (1, 0)]),
    ...                        EngineConfig(walks_per_node=50))
    >>> eng.build()
    >>> round(float(eng.pagerank().sum()), 6) > 0
    True
    """

    def __init__(self, graph: Optional[Graph] = None, cfg: Optional[EngineConfig] = None,
                 rng=None):
        self.graph = graph if graph is not None else Graph()
        self.cfg = cfg or EngineConfig()
        self.rng = self.cfg.make_rng() if rng is None else rng
        self.store = WalkStore(self.graph.n)

    @property
    def salsa(self) -> bool:
        return self.cfg.mode == SALSA

    def build(self) -> None:
        if self.salsa:
            self.store = build_salsa(self.graph, self.cfg, self.rng)
        else:
            self.store, _ = build_all(self.graph, self.cfg, self.rng)

    def _ensure_nodes(self, *nodes: int) -> None:
        """Give newly seen nodes their own walks before they take part in repairs."""
        top = max(nodes) + 1
        old = self.graph.n
        if top <= old:
            return
        self.graph.grow(top)
        self.store.grow(top)
        kinds = ((SegmentKind.SALSA_FORWARD, SegmentKind.SALSA_BACKWARD) if self.salsa
                 else (SegmentKind.PAGERANK,))
        for src in range(old, top):
            for kind in kinds:
                for _ in range(self.cfg.walks_per_node):
                    seg = generate_segment(self.graph, src, self.cfg, self.rng, kind)
                    self.store.add(src, seg.path, kind, seg.dangling_end)

    def add_edge(self, u: int, v: int) -> UpdateCost:
        self._ensure_nodes(u, v)
        self.graph.add_edge(u, v)
        fn = on_edge_arrival_salsa if self.salsa else on_edge_arrival
        return fn(self.graph, self.store, (u, v), self.cfg, self.rng)

    def remove_edge(self, u: int, v: int) -> UpdateCost:
        self.graph.remove_edge(u, v)
        fn = on_edge_removal_salsa if self.salsa else on_edge_removal
        return fn(self.graph, self.store, (u, v), self.cfg, self.rng)

    def pagerank(self, normalize: bool = False) -> np.ndarray:
        return estimate_pagerank(self.store, self.graph.n, self.cfg, normalize)

    def hubs_authorities(self) -> tuple[np.ndarray, np.ndarray]:
        return estimate_salsa(self.store, self.graph.n, self.cfg)
