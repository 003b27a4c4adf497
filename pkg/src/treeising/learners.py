"""Chow-Liu and truncation structure learners with moment-matching projection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimation import ThresholdSpec, check_correlation_matrix, empirical_correlations
from .model import Forest, Tree, TreeIsingModel
from .sampling import SampleMatrix

__all__ = [
    "ATANH_CLAMP",
    "UnionFind",
    "max_weight_spanning_forest",
    "chow_liu",
    "project",
    "truncation",
    "fit",
    "LearnedModel",
]

ATANH_CLAMP = 1e-9


class UnionFind:
    """Disjoint sets with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of ``a`` and ``b``; False if already merged."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def max_weight_spanning_forest(weights: np.ndarray, min_weight: float | None = None) -> list[tuple[int, int]]:
    """Kruskal on the complete graph with symmetric ``weights``.

    Pairs are scanned by decreasing weight; equal weights are broken in
    favour of the lexicographically smaller ``(i, j)``. With ``min_weight``
    set, only edges of weight ``>= min_weight`` are eligible.
    """
    w = np.asarray(weights, dtype=float)
    p = w.shape[0]
    iu, ju = np.triu_indices(p, k=1)
    vals = w[iu, ju]
    # lexsort: last key is primary
    order = np.lexsort((ju, iu, -vals))
    uf = UnionFind(p)
    edges = []
    for k in order:
        if min_weight is not None and vals[k] < min_weight:
            break
        i, j = int(iu[k]), int(ju[k])
        if uf.union(i, j):
            edges.append((i, j))
            if len(edges) == p - 1:
                break
    return edges


def chow_liu(c: np.ndarray) -> Tree:
    """Maximum-weight spanning tree under weights ``|mu_hat_ij|``.

    For zero-field tree Ising models this is the maximum-likelihood tree.
    """
    c = check_correlation_matrix(c)
    p = c.shape[0]
    if p < 2:
        raise ValueError("Chow-Liu needs at least two nodes")
    return Tree(p, tuple(max_weight_spanning_forest(np.abs(c))))


def project(c: np.ndarray, t: Forest) -> TreeIsingModel:
    """Moment-matching projection onto ``t``: ``theta_e = atanh(mu_e)``.

    Correlations with ``|mu| > 1 - 1e-9`` are clamped to ``+/-(1 - 1e-9)``
    so the couplings stay finite.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (t.p, t.p):
        raise ValueError(f"correlation matrix shape {c.shape} does not match p={t.p}")
    lim = 1.0 - ATANH_CLAMP
    theta = tuple(math.atanh(min(max(c[i, j], -lim), lim)) for i, j in t.edges)
    return TreeIsingModel(t, theta)


def truncation(c: np.ndarray, th: ThresholdSpec | float) -> Forest:
    """Chow-Liu tree with every edge of ``|mu_hat| < tau + epsilon`` removed.

    This equals the maximum-weight spanning forest under weights
    ``|mu_hat| - tau - epsilon`` restricted to non-negative weights.
    """
    cutoff = th.cutoff if isinstance(th, ThresholdSpec) else float(th)
    c = check_correlation_matrix(c)
    p = c.shape[0]
    if p < 2:
        return Forest(p, ())
    tree = chow_liu(c)
    kept = tuple((i, j) for i, j in tree.edges if abs(c[i, j]) >= cutoff)
    return Forest(p, kept)


@dataclass(frozen=True)
class LearnedModel:
    model: TreeIsingModel
    method: str
    thresholds: ThresholdSpec | None = None
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.method not in ("chow_liu", "truncation"):
            raise ValueError(f"unknown method {self.method!r}")


_METHOD_ALIASES = {"chow-liu": "chow_liu", "truncate": "truncation"}


def fit(s: SampleMatrix, method: str = "chow_liu", th: ThresholdSpec | None = None,
        *, delta: float = 0.1, beta: float | None = None) -> LearnedModel:
    """Learn a structure from empirical correlations and project onto it.

    For ``method="truncation"`` without explicit thresholds, ``epsilon`` and
    ``tau`` are derived from ``(n, p, delta, beta)``; ``beta`` then must be
    given.
    """
    method = _METHOD_ALIASES.get(method, method)
    c = empirical_correlations(s)
    p = c.shape[0]
    if method == "chow_liu":
        structure = chow_liu(c) if p >= 2 else Tree(p, ())
    elif method == "truncation":
        if th is None:
            if beta is None:
                raise ValueError("truncation needs thresholds or beta")
            th = ThresholdSpec.from_problem(s.n, max(p, 2), delta, beta)
        structure = truncation(c, th)
    else:
        raise ValueError(f"unknown method {method!r}")
    provenance = {"n": s.n, "seed": str(s.seed) if s.seed is not None else None}
    return LearnedModel(project(c, structure), method, th, provenance)
