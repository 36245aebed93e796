"""Monte Carlo PageRank and SALSA over streaming directed graphs."""

from .graph import (DanglingNodeError, DirectedEdge, DuplicateEdgeError, Graph,
                    MissingEdgeError, NodeRangeError, read_edge_file, read_graph)
from .walks import SegmentKind, WalkSegment, WalkStore
from .engine import (EngineConfig, MonteCarloEngine, UpdateCost, build_all, build_salsa,
                     estimate_pagerank, estimate_salsa, generate_segment, on_edge_arrival,
                     on_edge_arrival_salsa, on_edge_removal, on_edge_removal_salsa,
                     should_notify)
from .query import (FetchStats, Fetcher, QueryConfig, StitchedWalk, TopKResult,
                    corollary_fetch_bound, stitch_walk, theoretical_fetch_bound, top_k,
                    walk_length_for_top_k)
from . import oracle, synth

__version__ = "0.1.0"
