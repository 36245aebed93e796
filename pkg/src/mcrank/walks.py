"""Storage for random-walk segments with a per-node visit index."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np


class SegmentKind(str, Enum):
    PAGERANK = "pagerank"
    SALSA_FORWARD = "salsa_forward_start"
    SALSA_BACKWARD = "salsa_backward_start"

    def __str__(self) -> str:
        return self.value


class WalkStoreError(Exception):
    pass


class DuplicateSegmentError(WalkStoreError, ValueError):
    pass


class SegmentPositionError(WalkStoreError, IndexError):
    pass


@dataclass(slots=True)
class WalkSegment:
    """One stored walk: ``path[0]`` is the source; the final reset is implicit.

    ``dangling_end`` records that the walk stopped because the required
    step did not exist (no out-edge, or no in-edge for a SALSA backward
    step) rather than because the reset coin fired.
    """

    id: int
    source: int
    path: list[int]
    kind: SegmentKind = SegmentKind.PAGERANK
    dangling_end: bool = False

    def __len__(self) -> int:
        return len(self.path)

    def is_hub_position(self, pos: int) -> bool:
        """True when the step taken out of ``path[pos]`` is a forward step."""
        if self.kind is SegmentKind.SALSA_BACKWARD:
            return pos % 2 == 1
        return pos % 2 == 0 if self.kind is SegmentKind.SALSA_FORWARD else True


class WalkStore:
    """All live walk segments plus the index needed for incremental repair.

    For every node ``v`` the index maps segment id to the ascending list
    of positions at which that segment visits ``v``.  ``visit_count(v)``
    is the total number of visits (``X_v``) and ``distinct_segments(v)``
    the number of segments touching ``v`` (``W(v)``).
    """

    def __init__(self, n: int = 0):
        self.segments: dict[int, WalkSegment] = {}
        self._index: list[dict[int, list[int]]] = [{} for _ in range(n)]
        self._visits: list[int] = [0] * n
        self._by_source: list[list[int]] = [[] for _ in range(n)]
        self._next_id = 0

    @property
    def n(self) -> int:
        return len(self._index)

    def grow(self, n: int) -> None:
        while len(self._index) < n:
            self._index.append({})
            self._visits.append(0)
            self._by_source.append([])

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> Iterator[WalkSegment]:
        return iter(self.segments.values())

    def new_id(self) -> int:
        sid = self._next_id
        self._next_id += 1
        return sid

    def add(self, source: int, path: list[int], kind=SegmentKind.PAGERANK,
            dangling_end: bool = False) -> WalkSegment:
        seg = WalkSegment(self.new_id(), source, path, SegmentKind(kind), dangling_end)
        self.put_segment(seg)
        return seg

    def add_many(self, segments: Iterable[tuple[int, list[int], bool]],
                 kind=SegmentKind.PAGERANK) -> None:
        """Bulk :meth:`add` of ``(source, path, dangling_end)`` triples.

        Paths must start at their source and name existing nodes; this
        skips the per-segment checks, so callers vouch for both.
        """
        kind = SegmentKind(kind)
        store, index, visits, by_source = self.segments, self._index, self._visits, self._by_source
        sid = self._next_id
        for source, path, dangling in segments:
            store[sid] = WalkSegment(sid, source, path, kind, dangling)
            by_source[source].append(sid)
            for pos, node in enumerate(path):
                index[node].setdefault(sid, []).append(pos)
                visits[node] += 1
            sid += 1
        self._next_id = sid

    def put_segment(self, seg: WalkSegment) -> None:
        if seg.id in self.segments:
            raise DuplicateSegmentError(f"segment {seg.id} already stored")
        if not seg.path or seg.path[0] != seg.source:
            raise WalkStoreError("segment path must start at its source")
        top = max(seg.path)
        if top >= self.n:
            self.grow(top + 1)
        self.segments[seg.id] = seg
        self._next_id = max(self._next_id, seg.id + 1)
        self._by_source[seg.source].append(seg.id)
        sid = seg.id
        index, visits = self._index, self._visits
        for pos, node in enumerate(seg.path):
            index[node].setdefault(sid, []).append(pos)
            visits[node] += 1

    def remove_segment(self, sid: int) -> WalkSegment:
        seg = self.segments.pop(sid)
        for node in seg.path:
            self._index[node].pop(sid, None)
            self._visits[node] -= 1
        self._by_source[seg.source].remove(sid)
        return seg

    def truncate_and_replace(self, sid: int, cut: int, suffix: list[int],
                             dangling_end: bool = False) -> None:
        """Keep ``path[:cut + 1]`` and append ``suffix``."""
        seg = self.segments[sid]
        path = seg.path
        if not 0 <= cut < len(path):
            raise SegmentPositionError(
                f"cut position {cut} outside path of length {len(path)}")
        index, visits = self._index, self._visits
        # Descending order keeps each per-node position list sorted on pop().
        for pos in range(len(path) - 1, cut, -1):
            node = path[pos]
            entry = index[node][sid]
            entry.pop()
            if not entry:
                del index[node][sid]
            visits[node] -= 1
        del path[cut + 1:]
        if suffix:
            top = max(suffix)
            if top >= self.n:
                self.grow(top + 1)
        for node in suffix:
            pos = len(path)
            path.append(node)
            entry = index[node].get(sid)
            if entry is None:
                index[node][sid] = [pos]
            else:
                entry.append(pos)
            visits[node] += 1
        seg.dangling_end = dangling_end

    def visit_count(self, v: int) -> int:
        return self._visits[v] if v < self.n else 0

    def distinct_segments(self, v: int) -> int:
        return len(self._index[v]) if v < self.n else 0

    def segments_visiting(self, v: int) -> list[tuple[int, int]]:
        if v >= self.n:
            return []
        return [(sid, pos) for sid, positions in self._index[v].items()
                for pos in positions]

    def visit_map(self, v: int) -> dict[int, list[int]]:
        """Live view of ``{segment id: positions}`` for node ``v``."""
        return self._index[v]

    def segments_from(self, source: int, kind=None) -> list[WalkSegment]:
        if source >= self.n:
            return []
        segs = [self.segments[sid] for sid in self._by_source[source]]
        if kind is not None:
            kind = SegmentKind(kind)
            segs = [s for s in segs if s.kind is kind]
        return segs

    def visits(self) -> np.ndarray:
        return np.asarray(self._visits, dtype=np.int64)

    def total_visits(self) -> int:
        return sum(self._visits)

    def recount(self) -> Counter:
        """Visit counts recomputed from scratch over all stored paths."""
        counts: Counter = Counter()
        for seg in self.segments.values():
            counts.update(seg.path)
        return counts

    def check_consistency(self) -> None:
        """Raise ``AssertionError`` if the index disagrees with the paths."""
        counts = self.recount()
        for v in range(self.n):
            assert self._visits[v] == counts.get(v, 0), v
            assert sum(len(p) for p in self._index[v].values()) == self._visits[v], v
        for sid, seg in self.segments.items():
            for pos, node in enumerate(seg.path):
                assert pos in self._index[node][sid], (sid, pos)

    def dump(self, path) -> None:
        with Path(path).open("w") as fh:
            for line in dump_lines(self.segments.values()):
                fh.write(line + "\n")

    @classmethod
    def load(cls, path, graph=None, n: int = 0) -> "WalkStore":
        """Read a segment dump.

        The dump does not carry the reset/dangling distinction; when a
        ``graph`` is supplied a segment is marked dangling-ended if its
        last node lacks the step it would need next.
        """
        store = cls(max(n, graph.n if graph is not None else 0))
        with Path(path).open() as fh:
            for seg in parse_dump_lines(fh):
                if graph is not None:
                    seg.dangling_end = _needs_missing_step(graph, seg)
                store.put_segment(seg)
        return store


def _needs_missing_step(graph, seg: WalkSegment) -> bool:
    last = len(seg.path) - 1
    node = seg.path[last]
    if node >= graph.n:
        return True
    if seg.is_hub_position(last):
        return graph.out_degree(node) == 0
    return graph.in_degree(node) == 0


def dump_lines(segments: Iterable[WalkSegment]) -> Iterator[str]:
    for seg in segments:
        yield f"{seg.id}\t{seg.kind.value}\t{' '.join(map(str, seg.path))}"


def parse_dump_lines(lines: Iterable[str]) -> Iterator[WalkSegment]:
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        try:
            sid, kind, path = line.split("\t")
            nodes = [int(x) for x in path.split()]
            yield WalkSegment(int(sid), nodes[0], nodes, SegmentKind(kind))
        except (ValueError, IndexError):
            raise WalkStoreError(f"line {lineno}: malformed segment record {line!r}") from None
