"""Keep walks fresh while edges arrive in random order.

Each arrival only touches the walks that pass through its source.  Early
on, many walks stop at nodes with no out-edges yet and every new edge
from such a node catches them; once the graph fills in, the reroutes per
arrival fall off roughly like 1/t.

Run: python demos/02_incremental_updates.py
"""
import math

import numpy as np

from mcrank import EngineConfig
from mcrank.experiments import cost_arrays, make_stream, replay_costs
from mcrank.oracle import power_iteration_pagerank

n, m, R, eps = 500, 5000, 5, 0.2
rng = np.random.default_rng(1)
stream, n = make_stream("permutation", n, m, rng)
eng, costs = replay_costs(stream, n, EngineConfig(epsilon=eps, walks_per_node=R), rng)
rerouted, steps = cost_arrays(costs)

print(f"{len(stream)} arrivals replayed")
for lo, hi in ((1, 10), (10, 100), (100, 1000), (1000, len(stream))):
    sel = slice(lo - 1, hi)
    print(f"arrivals {lo:5d}-{hi:5d}: mean rerouted {rerouted[sel].mean():7.3f}, "
          f"mean rewalk steps {steps[sel].mean():8.2f}")
print(f"total rewalk steps {steps.sum()} vs (nR/eps^2) ln m = {n * R / eps**2 * math.log(m):.0f}")

err = np.abs(eng.pagerank(normalize=True) - power_iteration_pagerank(eng.graph, eps)).max()
print(f"after the stream, max abs error against the exact vector: {err:.4f}")

# Deleting an edge only reroutes the walks that used it.
u, v = next(iter(eng.graph.edges()))
cost = eng.remove_edge(u, v)
print(f"removing ({u}, {v}) rerouted {cost.segments_rerouted} segments")
