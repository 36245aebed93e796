"""Hide some of each test user's follows and see which method finds them again.

Run: python demos/06_link_prediction.py
"""
import numpy as np

from mcrank.linkpred import evaluate, holdout_split, oracle_scorer
from mcrank.synth import community_powerlaw_graph

rng = np.random.default_rng(7)
g, _ = community_powerlaw_graph(2000, rng)
split = holdout_split(g, rng, n_seeds=20)
hidden = sum(len(v) for v in split.held_out.values())
print(f"{len(split.seeds)} test seeds, {hidden} hidden edges")

table = evaluate(split, ks=(100, 1000))
ceiling = evaluate(split, ("oracle",), ks=(100, 1000), scorer=oracle_scorer(split))
print(f"{'cutoff':>10} " + " ".join(f"{m:>9}" for m in table.per_seed) + "   ceiling")
for k in table.ks:
    print(f"{'top ' + str(k):>10} " + " ".join(f"{table.mean(m, k):9.2f}" for m in table.per_seed)
          + f" {ceiling.mean('oracle', k):9.2f}")
