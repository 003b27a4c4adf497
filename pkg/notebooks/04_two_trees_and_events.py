# %% [markdown]
# # Crossing edges between two trees, and the good events
#
# For two spanning trees and two nodes whose connecting paths differ, there
# is always an edge f on the first path and g on the second that cross: each
# lies on the other tree's path between the endpoints of the other edge.
# The sweep checks that claim over every pair of labeled trees.

# %%
import time

from treeising import Tree, check_events, hoeffding_epsilon, random_tree_model, sample, two_trees_witness
from treeising.sampling import SeedSpec, make_rng
from treeising.verification import two_trees_sweep

t1 = Tree(3, ((0, 1), (1, 2)))
t2 = Tree(3, ((0, 2), (1, 2)))
print(two_trees_witness(t1, t2, 0, 1))

for p in (4, 5, 6):
    t0 = time.perf_counter()
    res = two_trees_sweep(p)
    print(f"p={p}: {res.instances} instances, {len(res.counterexamples)} counterexamples, "
          f"{time.perf_counter() - t0:.1f}s")

# %% [markdown]
# The events behind the learning guarantees, evaluated on samples.

# %%
m = random_tree_model(6, 0.3, 1.0, make_rng(SeedSpec(1, 0)))
n = 1000
eps = hoeffding_epsilon(n, m.p, 0.1)
hits = [check_events(m, sample(m, n, SeedSpec(1, k)), eps, eps) for k in range(100)]
print("E^corr   ", sum(e.e_corr for e in hits) / 100)
print("E^strong ", sum(e.e_strong for e in hits) / 100)
print("E^cascade", sum(e.e_cascade for e in hits) / 100)
