# %% [markdown]
# # Why the truncated forest can lose to a wrong tree
#
# A three-node chain 0 - 1 - 2 with a weak edge (0,1) and a strong edge (1,2).
# We project its exact correlations onto three structures and compare the
# pairwise loss L2, the largest pairwise total variation gap.

# %%
import numpy as np

from treeising import chain_model, correlation_matrix, project, repro_chain, sstv2
from treeising.model import Forest

# %%
for eps in (0.3, 0.1, 0.01):
    r = repro_chain(eps)
    print(f"eps={eps:<5} T1={r.losses['T1']:.6f}  T2={r.losses['T2']:.6f}  T3={r.losses['T3']:.6f}")

# %% [markdown]
# T2 drops the weak edge and pays eps/2. T3 hooks node 0 onto node 2 instead
# and only pays eps^2 (2 - eps) / 2, because node 2 is almost a copy of node 1.
# Dropping a weak edge is the costlier mistake.

# %%
eps = 0.1
P = chain_model([np.arctanh(eps), np.arctanh(1 - eps)])
c = correlation_matrix(P)
T3 = Forest(3, ((0, 2), (1, 2)))
print(np.round(correlation_matrix(project(c, T3)) - c, 6))
print(sstv2(P, project(c, T3)))
