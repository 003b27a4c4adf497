# %% [markdown]
# # A family of chains that are hard to tell apart
#
# The base model alternates weak (alpha) and strong (beta) couplings along a
# path. Each other member rewires one weak edge to skip a node. Their
# symmetrized KL divergence to the base is tiny, so at small n Chow-Liu often
# picks the wrong member. This is an illustration only; no learner-agnostic
# claim is being tested.

# %%
import math

from treeising import chow_liu, empirical_correlations, hard_family, sample, symmetrized_kl
from treeising.sampling import SeedSpec

alpha, beta = 0.2, 1.0
family = hard_family(7, alpha, beta)
print("J(base, member) =", round(symmetrized_kl(family[0], family[1]), 6),
      " closed form", round(2 * alpha * math.tanh(alpha) * (1 - math.tanh(beta)), 6))

# %%
for n in (100, 1000, 10000):
    wrong = 0
    for k in range(40):
        truth = family[k % len(family)]
        learned = chow_liu(empirical_correlations(sample(truth, n, SeedSpec(5, k))))
        wrong += learned.edges != truth.edges
    print(f"n={n:>6}: wrong structure in {wrong}/40 trials")
