# Run the tempered shotgun search on a wide problem and look inside.
#
# The search restarts from the empty model at each rung of a temperature
# ladder, screens each scanned neighborhood down to the competitive moves,
# and samples the next move with probability proportional to
# exp(score / T).  Along the way every scored model is offered to a
# registry that keeps the best ones for weighting and averaging.

import time

import numpy as np

from slabsearch import (
    Dataset,
    SearchConfig,
    default_hyperparams,
    run_search,
    temperature_schedule,
    time_to_map,
    top_k_weights,
    wam,
)

rng = np.random.default_rng(11)

n, p = 250, 5000
support = (4, 100, 2500, 4999)
z = rng.standard_normal((n, p))
y = z[:, support] @ np.array([2.0, -1.6, 1.8, 2.2]) + rng.standard_normal(n)

ds = Dataset.from_arrays(z, y)
hp = default_hyperparams(n, p)

# The ladder runs from T=1 (greedy-ish) up to log p + log log p.
cfg = SearchConfig(n_temps=5, steps_per_temp=80, seed=3)
print("temperatures:", np.round(temperature_schedule(p, cfg.n_temps), 3))

t0 = time.perf_counter()
res = run_search(ds, hp, cfg)
print(f"search took {time.perf_counter() - t0:.2f}s, "
      f"{len(res.trace)} committed steps")

print("MAP model   :", res.map_model, f"(log score {res.map_log_post:.3f})")
print("true support:", support)

# Posterior weights over the retained models, then the weighted-average
# vote: a column is selected when its averaged inclusion probability
# clears one half.
weighted = top_k_weights(res.top)
for model, wt in weighted[:5]:
    print(f"  weight {wt:6.4f}  {model}")
pi, voted = wam(weighted, p)
print("vote-selected:", voted)

# When did the run first reach the model it ended on?
print(f"first hit the MAP after {time_to_map(res) * 1e3:.0f} ms")
