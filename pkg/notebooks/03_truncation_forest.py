# %% [markdown]
# # The truncation learner keeps only edges it is sure about
#
# Truncation runs Chow-Liu and then deletes edges whose empirical
# correlation falls below tau + eps. The result is a forest that sits inside
# the true tree with high probability.

# %%
import numpy as np

from treeising import empirical_correlations, sample, truncation
from treeising.estimation import ThresholdSpec
from treeising.harness import weak_edge_chain
from treeising.sampling import SeedSpec

model = weak_edge_chain(8)
beta = max(abs(t) for t in model.theta)
n = 4000
th = ThresholdSpec.from_problem(n, model.p, 0.1, beta)
print(f"eps={th.epsilon:.4f}  tau={th.tau:.4f}  cutoff={th.cutoff:.4f}")

# %%
inside = 0
for trial in range(50):
    c = empirical_correlations(sample(model, n, SeedSpec(11, trial)))
    forest = truncation(c, th)
    inside += set(forest.edges) <= set(model.edges)
print(f"forest inside the true tree in {inside}/50 trials")
print("last forest:", forest.edges)
