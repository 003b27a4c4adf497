"""Small-set total variation losses computed from exact tree marginals.

KL quantities between tree models live here too.

All small-set TV values use the standard total variation convention
``d_TV(P, Q) = (1/2) sum_x |P(x) - Q(x)|``; in particular

    L2(P, Q) = max_{u < v} |E_P[X_u X_v] - E_Q[X_u X_v]| / 2.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .brute import correlations_from_table, entropy, spin_configurations
from .model import Forest, TreeIsingModel, canonical_edge, correlation_matrix

__all__ = [
    "MAX_MARGINAL_SIZE",
    "MAX_LOSS_NODES",
    "MAX_LOSS_ORDER",
    "MarginalTable",
    "LossReport",
    "sstv2",
    "exact_marginal",
    "sstv_k",
    "tv_distance",
    "conditional_prediction_error",
    "binary_entropy",
    "tree_entropy",
    "kl_to_projection",
    "symmetrized_kl",
]

MAX_MARGINAL_SIZE = 20
MAX_LOSS_NODES = 16
MAX_LOSS_ORDER = 6


@dataclass(frozen=True, eq=False)
class MarginalTable:
    """Probabilities of the ``2**len(subset)`` configurations of ``subset``.

    Row order matches :func:`treeising.brute.spin_configurations`, with the
    spins listed in ``subset`` order.
    """

    subset: tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (2 ** len(self.subset),):
            raise ValueError("table size does not match subset")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("marginal table is not a probability vector")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class LossReport:
    k: int
    value: float
    argmax_subset: tuple[int, ...]
    loss: str = "sstv"


def _same_p(a: TreeIsingModel, b: TreeIsingModel):
    if a.p != b.p:
        raise ValueError(f"models have different node counts ({a.p} vs {b.p})")


def sstv2(a: TreeIsingModel, b: TreeIsingModel) -> LossReport:
    """Exact L2 loss from the two all-pairs correlation matrices.

    Ties are resolved towards the lexicographically smallest pair.
    """
    _same_p(a, b)
    if a.p < 2:
        raise ValueError("pairwise loss needs at least two nodes")
    diff = np.abs(correlation_matrix(a) - correlation_matrix(b)) / 2.0
    iu, ju = np.triu_indices(a.p, k=1)
    vals = diff[iu, ju]
    k = int(np.argmax(vals))
    return LossReport(2, float(vals[k]), (int(iu[k]), int(ju[k])), "sstv2")


def _steiner_prune(t: Forest, keep: set[int]) -> list[set[int]]:
    """Neighbour sets after repeatedly deleting leaves outside ``keep``.

    Summing a leaf out of a tree factor ``(1 + mu x_parent x_leaf) / 2``
    contributes exactly 1, so such leaves never affect a marginal.
    """
    nbrs = [set(a) for a in t.adjacency]
    alive = [True] * t.p
    stack = [v for v in range(t.p) if v not in keep and len(nbrs[v]) <= 1]
    while stack:
        v = stack.pop()
        if not alive[v]:
            continue
        alive[v] = False
        for u in nbrs[v]:
            nbrs[u].discard(v)
            if u not in keep and alive[u] and len(nbrs[u]) <= 1:
                stack.append(u)
        nbrs[v] = set()
    return [nbrs[v] if alive[v] else None for v in range(t.p)]


def exact_marginal(m: TreeIsingModel, S) -> MarginalTable:
    """Exact marginal of ``m`` on ``S`` by leaf elimination.

    Leaves outside ``S`` are pruned, then 2-entry messages are passed from
    the leaves of the remaining subtree to its root, with the nodes of ``S``
    clamped. All ``2**|S|`` clamped configurations are processed at once, so
    every message is an array of shape ``(2**|S|, 2)``.
    """
    S = tuple(int(v) for v in S)
    if not S:
        raise ValueError("subset must be non-empty")
    if len(S) > MAX_MARGINAL_SIZE:
        raise ValueError(f"subset of size {len(S)} exceeds the limit {MAX_MARGINAL_SIZE}")
    if len(set(S)) != len(S):
        raise ValueError("subset has repeated nodes")
    for v in S:
        m.structure._check_node(v)

    configs = spin_configurations(len(S))
    n_cfg = configs.shape[0]
    nbrs = _steiner_prune(m.structure, set(S))
    mu = m.mu
    idx = m.structure.edge_index
    pos = {v: k for k, v in enumerate(S)}
    # column 0 <-> spin -1, column 1 <-> spin +1
    spins = np.array([-1.0, 1.0])

    probs = np.ones(n_cfg)
    done = set()
    for root in S:
        if root in done:
            continue
        # BFS over the pruned component containing root
        order, parent = [root], {root: -1}
        for u in order:
            for v in sorted(nbrs[u]):
                if v not in parent:
                    parent[v] = u
                    order.append(v)
        done.update(v for v in order if v in pos)
        belief = {}
        for v in order:
            if v in pos:
                col = configs[:, pos[v]]
                belief[v] = np.stack([(col == -1), (col == 1)], axis=1).astype(float)
            else:
                belief[v] = np.ones((n_cfg, 2))
        for v in reversed(order[1:]):
            u = parent[v]
            mu_e = mu[idx[canonical_edge(u, v)]]
            # psi[x_u, x_v] = (1 + mu x_u x_v) / 2
            psi = (1.0 + mu_e * np.outer(spins, spins)) / 2.0
            belief[u] = belief[u] * (belief[v] @ psi.T)
        probs = probs * (belief[root] @ np.array([0.5, 0.5]))
    return MarginalTable(S, probs)


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def sstv_k(a: TreeIsingModel, b: TreeIsingModel, k: int) -> LossReport:
    """``L^(k)``: the largest TV distance over all ``k``-node marginals.

    Subsets are scanned in lexicographic order; the first maximiser wins.
    """
    _same_p(a, b)
    if not 1 <= k <= a.p:
        raise ValueError(f"order k={k} must lie in 1..{a.p}")
    if a.p > MAX_LOSS_NODES or k > MAX_LOSS_ORDER:
        raise ValueError(
            f"enumeration budget exceeded (p={a.p}, k={k}; limits p <= {MAX_LOSS_NODES}, k <= {MAX_LOSS_ORDER})"
        )
    best, arg = -1.0, None
    for S in itertools.combinations(range(a.p), k):
        d = tv_distance(exact_marginal(a, S).probs, exact_marginal(b, S).probs)
        if d > best:
            best, arg = d, S
    return LossReport(k, best, arg, f"sstv{k}")


def conditional_prediction_error(p_true: TreeIsingModel, q: TreeIsingModel, i: int, S) -> float:
    """``E_{X_S ~ P} |P(X_i = + | X_S) - Q(X_i = + | X_S)|``.

    Bounded by ``2 L^(|S|+1)(P, Q)``.
    """
    _same_p(p_true, q)
    S = tuple(int(v) for v in S)
    if i in S:
        raise ValueError(f"target node {i} must not be in the conditioning set")
    nodes = (i,) + S
    P = exact_marginal(p_true, nodes).probs.reshape(2, -1)
    Q = exact_marginal(q, nodes).probs.reshape(2, -1)
    p_s = P.sum(axis=0)
    q_s = Q.sum(axis=0)
    q_cond = np.divide(Q[1], q_s, out=np.full_like(q_s, 0.5), where=q_s > 0)
    return float(np.sum(np.abs(P[1] - q_cond * p_s)))


def binary_entropy(x) -> np.ndarray:
    """``H_B(x) = -x log x - (1-x) log(1-x)`` in nats, with ``0 log 0 = 0``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for part in (x, 1.0 - x):
        nz = part > 0
        out[nz] -= part[nz] * np.log(part[nz])
    return out


def tree_entropy(m: TreeIsingModel) -> float:
    """Entropy of a tree/forest model: ``c log 2 + sum_e H_B((1 + mu_e)/2)``
    for ``c`` components, since the edge spin products are independent."""
    c = len(m.structure.components())
    return c * math.log(2.0) + float(np.sum(binary_entropy((1.0 + m.mu) / 2.0)))


def kl_to_projection(p_true, t: Forest, p: int | None = None) -> float:
    """``D(P || Pi_T(P)) = H(Pi_T(P)) - H(P)``, where the projection onto a
    forest with ``c`` components has entropy
    ``c log 2 + sum_{e in T} H_B((1 + mu_e) / 2)``.

    ``p_true`` is a :class:`TreeIsingModel` or a full probability table
    over ``{-1,+1}^p`` in :func:`treeising.brute.spin_configurations` order.
    """
    if isinstance(p_true, TreeIsingModel):
        if p_true.p != t.p:
            raise ValueError("model and tree have different node counts")
        h = tree_entropy(p_true)
        corr = correlation_matrix(p_true)
    else:
        table = np.asarray(p_true, dtype=float)
        p = t.p if p is None else p
        if table.shape != (2**p,):
            raise ValueError(f"table must have 2^{p} entries")
        h = entropy(table)
        corr = correlations_from_table(table, p)
    mus = np.array([corr[i, j] for i, j in t.edges])
    h_proj = len(t.components()) * math.log(2.0) + float(np.sum(binary_entropy((1.0 + mus) / 2.0)))
    return h_proj - h


def symmetrized_kl(a: TreeIsingModel, b: TreeIsingModel) -> float:
    """``J(a || b) = D(a || b) + D(b || a) = sum_{i<j} (theta_ij - theta'_ij)(mu_ij - mu'_ij)``
    with ``theta_ij = 0`` off the edges and ``mu_ij`` the path correlations."""
    _same_p(a, b)
    dtheta = a.coupling_matrix() - b.coupling_matrix()
    dmu = correlation_matrix(a) - correlation_matrix(b)
    iu, ju = np.triu_indices(a.p, k=1)
    return float(np.sum(dtheta[iu, ju] * dmu[iu, ju]))
