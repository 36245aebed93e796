"""Hub and authority scores from alternating walks, kept up to date under arrivals.

Run: python demos/04_salsa.py
"""
import numpy as np
from scipy import stats

from mcrank import EngineConfig
from mcrank.experiments import make_stream, replay_costs
from mcrank.oracle import salsa_scores

rng = np.random.default_rng(3)
stream, n = make_stream("permutation", 300, 3000, rng)
eng, costs = replay_costs(stream, n, EngineConfig(walks_per_node=20, mode="salsa"), rng)
hub, auth = eng.hubs_authorities()
exact_hub, exact_auth = salsa_scores(eng.graph)

print(f"{len(costs)} arrivals, {sum(c.rewalk_steps for c in costs)} rewalk steps in total")
print(f"Spearman vs exact: hubs {stats.spearmanr(hub, exact_hub)[0]:.3f}, "
      f"authorities {stats.spearmanr(auth, exact_auth)[0]:.3f}")
print("top authorities:", np.argsort(-auth)[:5].tolist())
