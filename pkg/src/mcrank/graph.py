"""In-memory directed graph with random-access adjacency.

Plays the role of the social graph database: callers stream edges in,
the store keeps out/in adjacency lists and degree counters, and walkers
sample uniform out-edges from it.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator, NamedTuple


class GraphError(Exception):
    """Base class for graph store errors."""


class DuplicateEdgeError(GraphError, ValueError):
    pass


class MissingEdgeError(GraphError, KeyError):
    pass


class NodeRangeError(GraphError, IndexError):
    pass


class DanglingNodeError(GraphError):
    """Raised when an out-edge is requested from a node with out-degree 0."""

    def __init__(self, node: int):
        super().__init__(f"node {node} has no out-edges")
        self.node = node


class EdgeFileError(GraphError, ValueError):
    def __init__(self, path, lineno: int, line: str):
        super().__init__(f"{path}:{lineno}: malformed edge line {line!r}")
        self.path = path
        self.lineno = lineno


class DirectedEdge(NamedTuple):
    src: int
    dst: int


class Graph:
    """Directed simple graph over dense integer node ids ``0..n-1``.

    Parameters
    ----------
    n : int
        Initial number of nodes.
    auto_grow : bool
        If true, ``add_edge`` extends ``n`` to cover unseen node ids;
        otherwise an out-of-range id raises :class:`NodeRangeError`.

    Notes
    -----
    Removal swaps the removed neighbour with the last entry of the
    adjacency list, so list order is not preserved across deletions.
    """

    def __init__(self, n: int = 0, auto_grow: bool = True):
        if n < 0:
            raise ValueError("n must be non-negative")
        self.auto_grow = auto_grow
        self.out_adj: list[list[int]] = [[] for _ in range(n)]
        self.in_adj: list[list[int]] = [[] for _ in range(n)]
        # (src, dst) -> (index in out_adj[src], index in in_adj[dst])
        self._slot: dict[tuple[int, int], list[int]] = {}
        self.t = 0

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], n: int = 0,
                   auto_grow: bool = True) -> "Graph":
        g = cls(n, auto_grow=auto_grow)
        for u, v in edges:
            g.add_edge(u, v)
        return g

    @property
    def n(self) -> int:
        return len(self.out_adj)

    @property
    def m(self) -> int:
        return len(self._slot)

    def grow(self, n: int) -> None:
        while len(self.out_adj) < n:
            self.out_adj.append([])
            self.in_adj.append([])

    def _check(self, *nodes: int) -> None:
        for x in nodes:
            if x < 0:
                raise NodeRangeError(f"negative node id {x}")
            if x >= self.n:
                if not self.auto_grow:
                    raise NodeRangeError(f"node {x} out of range (n={self.n})")
                self.grow(x + 1)

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._slot

    def add_edge(self, u: int, v: int) -> int:
        """Insert edge ``u -> v`` and return its 1-based arrival index."""
        self._check(u, v)
        if (u, v) in self._slot:
            raise DuplicateEdgeError(f"edge ({u}, {v}) already present")
        self._slot[(u, v)] = [len(self.out_adj[u]), len(self.in_adj[v])]
        self.out_adj[u].append(v)
        self.in_adj[v].append(u)
        self.t += 1
        return self.t

    def remove_edge(self, u: int, v: int) -> None:
        slot = self._slot.pop((u, v), None)
        if slot is None:
            raise MissingEdgeError(f"edge ({u}, {v}) not present")
        i, j = slot
        out = self.out_adj[u]
        last = out.pop()
        if i < len(out):
            out[i] = last
            self._slot[(u, last)][0] = i
        inn = self.in_adj[v]
        last = inn.pop()
        if j < len(inn):
            inn[j] = last
            self._slot[(last, v)][1] = j

    def out_degree(self, u: int) -> int:
        return len(self.out_adj[u])

    def in_degree(self, v: int) -> int:
        return len(self.in_adj[v])

    def out_degrees(self) -> list[int]:
        return [len(a) for a in self.out_adj]

    def in_degrees(self) -> list[int]:
        return [len(a) for a in self.in_adj]

    def sample_out_edge(self, u: int, rng) -> int:
        """Return a uniformly random out-neighbour of ``u``.

        Raises :class:`DanglingNodeError` when ``u`` has no out-edges.
        """
        out = self.out_adj[u]
        if not out:
            raise DanglingNodeError(u)
        return out[int(rng.random() * len(out))]

    def edges(self) -> Iterator[DirectedEdge]:
        for u, out in enumerate(self.out_adj):
            for v in out:
                yield DirectedEdge(u, v)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(self._slot)

    def copy(self) -> "Graph":
        g = Graph(self.n, auto_grow=self.auto_grow)
        g.out_adj = [list(a) for a in self.out_adj]
        g.in_adj = [list(a) for a in self.in_adj]
        g._slot = {k: list(s) for k, s in self._slot.items()}
        g.t = self.t
        return g

    def to_csr(self):
        """Row-stochastic-ready CSR adjacency ``A[u, v] = 1`` for ``u -> v``."""
        import numpy as np
        from scipy import sparse

        if self.m:
            src, dst = zip(*self._slot)
        else:
            src, dst = (), ()
        data = np.ones(len(src))
        return sparse.csr_matrix((data, (np.asarray(src, dtype=np.int64),
                                         np.asarray(dst, dtype=np.int64))),
                                 shape=(self.n, self.n))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def parse_edge_lines(lines: Iterable[str], source="<edges>") -> Iterator[DirectedEdge]:
    """Parse ``src<TAB>dst`` lines; blanks and ``#`` comments are skipped."""
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeFileError(source, lineno, raw.rstrip("\n"))
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeFileError(source, lineno, raw.rstrip("\n")) from None
        if u < 0 or v < 0:
            raise EdgeFileError(source, lineno, raw.rstrip("\n"))
        yield DirectedEdge(u, v)


def read_edge_file(path) -> list[DirectedEdge]:
    path = Path(path)
    with path.open() as fh:
        return list(parse_edge_lines(fh, source=path))


def read_graph(path, n: int = 0) -> Graph:
    """Graph over the edges of an edge file (node count grows to fit)."""
    return Graph.from_edges(read_edge_file(path), n=n)


def write_edge_file(path, edges: Iterable[tuple[int, int]]) -> None:
    with Path(path).open("w") as fh:
        for u, v in edges:
            fh.write(f"{u}\t{v}\n")
