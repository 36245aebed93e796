"""Is this stream in random order?

Two diagnostics: the mX statistic (about 1 when arrivals are random)
and the gap between the arrival and existing degree CDFs.  An adversarial
ordering moves both, and its final edge forces a burst of rerouting.

Run: python demos/05_stream_diagnostics.py
"""
import numpy as np

from mcrank import EngineConfig, MonteCarloEngine
from mcrank.graph import Graph
from mcrank.synth import (ArrivalStream, degree_cdfs, example1_edges, example1_graph,
                          mx_statistic, powerlaw_edges, random_permutation_stream)

n = 1000
edges = powerlaw_edges(n, 0.76, np.random.default_rng(4))
stream = random_permutation_stream(edges, np.random.default_rng(5))
half = len(stream) // 2
base = ArrivalStream(stream.events[:half]).replay(Graph(n))
print(f"random order:   mX over late half = "
      f"{mx_statistic(ArrivalStream(stream.events[half:]), base=base):.3f}")
g = Graph.from_edges(edges, n=n)
print(f"random order:   CDF sup distance = "
      f"{degree_cdfs(g, stream.events[-len(stream) // 5:]).sup_distance():.3f}")

deg = np.bincount([u for u, _ in edges], minlength=n)
low_first = sorted(edges, key=lambda e: (deg[e[0]], e))
print(f"low-degree first: CDF sup distance = "
      f"{degree_cdfs(g, low_first[-len(edges) // 5:]).sup_distance():.3f}")

N = 100
g1, trigger = example1_graph(N)
adv = ArrivalStream.of_adds(example1_edges(N) + [trigger])
print(f"adversarial construction: mX = {mx_statistic(adv, n=g1.n):.3f}")
eng = MonteCarloEngine(g1, EngineConfig(walks_per_node=1), np.random.default_rng(6))
eng.build()
print(f"trigger edge rerouted {eng.add_edge(*trigger).segments_rerouted} of {len(eng.store)} segments")
