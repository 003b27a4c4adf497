"""Tree and forest structures plus the zero-field tree Ising models on them.

The module also holds the parameter families used to probe how many
samples learning needs.

A zero-field Ising model on a tree ``T = (V, E)`` is

    P(x) = exp(sum_{(i,j) in E} theta_ij x_i x_j - Phi(theta)),   x in {-1,+1}^p

Every node has a uniform marginal and the correlation of any two nodes is
the product of ``mu_e = tanh(theta_e)`` over the edges of the path joining
them (zero when the nodes lie in different components of a forest).
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MAX_NODES",
    "MAX_BRUTE_FORCE_NODES",
    "Forest",
    "Tree",
    "TreeIsingModel",
    "canonical_edge",
    "path_between",
    "pairwise_correlation",
    "correlation_matrix",
    "pair_marginal",
    "log_partition",
    "hard_family",
    "chain_family",
    "chain_model",
    "star_model",
    "random_tree_model",
    "prufer_decode",
    "read_model",
    "write_model",
    "format_model",
    "parse_model",
]

MAX_NODES = 2**20
MAX_BRUTE_FORCE_NODES = 24

Edge = tuple[int, int]


def canonical_edge(i: int, j: int) -> Edge:
    """Return the edge ``{i, j}`` as ``(min, max)``; self-loops are rejected."""
    i, j = int(i), int(j)
    if i == j:
        raise ValueError(f"self-loop ({i}, {j}) is not an edge")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Forest:
    """Undirected acyclic graph on nodes ``0..p-1``.

    Edges are stored canonically and sorted, so two forests with the same
    edge set compare (and hash) equal.
    """

    p: int
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or self.p < 1:
            raise ValueError(f"node count must be a positive integer, got {self.p!r}")
        if self.p > MAX_NODES:
            raise ValueError(f"node count {self.p} exceeds the structural limit {MAX_NODES}")
        object.__setattr__(self, "p", int(self.p))
        edges = sorted(canonical_edge(i, j) for i, j in self.edges)
        for i, j in edges:
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ValueError(f"edge ({i}, {j}) has a node outside 0..{self.p - 1}")
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edges")
        if len(edges) > self.p - 1:
            raise ValueError(f"{len(edges)} edges on {self.p} nodes cannot be acyclic")
        parent = list(range(self.p))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, j in edges:
            ri, rj = find(i), find(j)
            if ri == rj:
                raise ValueError(f"edge ({i}, {j}) closes a cycle")
            parent[ri] = rj
        object.__setattr__(self, "edges", tuple(edges))

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.p)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(sorted(n)) for n in nbrs)

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {e: k for k, e in enumerate(self.edges)}

    @property
    def is_spanning_tree(self) -> bool:
        return len(self.edges) == self.p - 1

    def __contains__(self, edge) -> bool:
        return canonical_edge(*edge) in self.edge_index

    def components(self) -> list[list[int]]:
        """Connected components, each listed in BFS order from its lowest node."""
        seen = [False] * self.p
        comps = []
        for root in range(self.p):
            if seen[root]:
                continue
            order, _ = self.bfs(root)
            for v in order:
                seen[v] = True
            comps.append(order)
        return comps

    def bfs(self, root: int) -> tuple[list[int], list[int]]:
        """Breadth-first order and parent array (``-1`` for the root and for
        unreached nodes); neighbours are visited in ascending id order."""
        self._check_node(root)
        parent = [-1] * self.p
        seen = [False] * self.p
        seen[root] = True
        order = [root]
        queue = deque([root])
        adj = self.adjacency
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    parent[v] = u
                    order.append(v)
                    queue.append(v)
        return order, parent

    def _check_node(self, u):
        if not isinstance(u, (int, np.integer)) or not 0 <= u < self.p:
            raise ValueError(f"invalid node id {u!r} for p={self.p}")


class Tree(Forest):
    """Spanning tree: a forest with exactly ``p - 1`` edges."""

    def __post_init__(self):
        super().__post_init__()
        if len(self.edges) != self.p - 1:
            raise ValueError(
                f"a spanning tree on {self.p} nodes needs {self.p - 1} edges, got {len(self.edges)}"
            )


def as_structure(p: int, edges: Iterable[Sequence[int]]) -> Forest:
    """Build a :class:`Tree` when the edges span, otherwise a :class:`Forest`."""
    edges = [tuple(e) for e in edges]
    if len(edges) == p - 1:
        return Tree(p, tuple(edges))
    return Forest(p, tuple(edges))


def path_between(t: Forest, u: int, v: int) -> list[Edge] | None:
    """Edges of the unique ``u``-``v`` path, ordered from ``u`` to ``v``.

    Each edge is reported in canonical ``(min, max)`` form. Returns ``None``
    when ``u`` and ``v`` lie in different components of a forest.
    """
    t._check_node(u)
    t._check_node(v)
    if u == v:
        return []
    _, parent = t.bfs(v)
    if parent[u] == -1:
        return None
    path = []
    node = u
    while node != v:
        nxt = parent[node]
        path.append(canonical_edge(node, nxt))
        node = nxt
    return path


@dataclass(frozen=True)
class TreeIsingModel:
    """Zero-field Ising model on a tree or forest.

    Parameters
    ----------
    structure : Forest
        Underlying graph (a :class:`Tree` for spanning structures).
    theta : tuple of float
        Couplings aligned with ``structure.edges``. Correlations are always
        derived as ``tanh(theta)`` and never stored separately.
    bounds : (alpha, beta), optional
        When given, every edge must satisfy ``alpha <= |theta_e| <= beta``.
    """

    structure: Forest
    theta: tuple[float, ...] = ()
    bounds: tuple[float, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        if len(theta) != len(self.structure.edges):
            raise ValueError(
                f"{len(theta)} couplings for {len(self.structure.edges)} edges"
            )
        for e, t in zip(self.structure.edges, theta):
            if not math.isfinite(t):
                raise ValueError(f"coupling on edge {e} is not finite")
        if self.bounds is not None:
            a, b = self.bounds
            for e, t in zip(self.structure.edges, theta):
                if not a <= abs(t) <= b:
                    raise ValueError(f"|theta| on edge {e} = {abs(t)} outside [{a}, {b}]")
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_edges(cls, p: int, couplings: Mapping[Edge, float] | Iterable, bounds=None):
        """Build from ``{(i, j): theta}`` or an iterable of ``(i, j, theta)``."""
        items = couplings.items() if isinstance(couplings, Mapping) else (
            ((i, j), t) for i, j, t in couplings
        )
        by_edge = {}
        for (i, j), t in items:
            e = canonical_edge(i, j)
            if e in by_edge:
                raise ValueError(f"duplicate edge {e}")
            by_edge[e] = float(t)
        structure = as_structure(p, by_edge)
        return cls(structure, tuple(by_edge[e] for e in structure.edges), bounds)

    @classmethod
    def from_correlations(cls, p: int, correlations: Mapping[Edge, float]):
        return cls.from_edges(p, {e: math.atanh(m) for e, m in correlations.items()})

    @property
    def p(self) -> int:
        return self.structure.p

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self.structure.edges

    @property
    def mu(self) -> np.ndarray:
        """Edge correlations ``tanh(theta_e)``, aligned with :attr:`edges`."""
        return np.tanh(np.asarray(self.theta, dtype=float))

    def coupling(self, i: int, j: int) -> float:
        """``theta_ij``, zero for non-edges."""
        k = self.structure.edge_index.get(canonical_edge(i, j))
        return 0.0 if k is None else self.theta[k]

    def coupling_matrix(self) -> np.ndarray:
        J = np.zeros((self.p, self.p))
        for (i, j), t in zip(self.edges, self.theta):
            J[i, j] = J[j, i] = t
        return J


def pairwise_correlation(m: TreeIsingModel, u: int, v: int) -> float:
    """``E[X_u X_v]``: product of edge correlations along the path, 1 when
    ``u == v`` and 0 across components of a forest."""
    path = path_between(m.structure, u, v)
    if path is None:
        return 0.0
    idx = m.structure.edge_index
    out = 1.0
    for e in path:
        out *= math.tanh(m.theta[idx[e]])
    return out


def correlation_matrix(m: TreeIsingModel) -> np.ndarray:
    """All pairwise correlations in O(p^2) via one BFS per node.

    Row ``r`` multiplies the path from ``r`` outwards; the lower triangle is
    then mirrored so the result is exactly symmetric.
    """
    p = m.p
    mu = m.mu
    idx = m.structure.edge_index
    C = np.zeros((p, p))
    for r in range(p):
        order, parent = m.structure.bfs(r)
        C[r, r] = 1.0
        for v in order[1:]:
            u = parent[v]
            C[r, v] = C[r, u] * mu[idx[canonical_edge(u, v)]]
    iu = np.triu_indices(p, k=1)
    C.T[iu] = C[iu]
    return C


def pair_marginal(m: TreeIsingModel, u: int, v: int, x_u: int, x_v: int) -> float:
    """``P(X_u = x_u, X_v = x_v) = (1 + x_u x_v E[X_u X_v]) / 4``.

    The formula relies on uniform single-node marginals, which holds only
    because the model has no external field.
    """
    if x_u not in (-1, 1) or x_v not in (-1, 1):
        raise ValueError(f"spins must be -1 or +1, got ({x_u}, {x_v})")
    if u == v:
        return 0.5 if x_u == x_v else 0.0
    return (1.0 + x_u * x_v * pairwise_correlation(m, u, v)) / 4.0


def _log_cosh(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def log_partition(m: TreeIsingModel) -> float:
    """``Phi(theta) = p log 2 + sum_e log cosh(theta_e)`` (valid for forests)."""
    theta = np.asarray(m.theta, dtype=float)
    return m.p * math.log(2.0) + float(np.sum(_log_cosh(theta)))


# ---------------------------------------------------------------------------
# model families
# ---------------------------------------------------------------------------


def chain_model(thetas: Sequence[float]) -> TreeIsingModel:
    """Path ``0 - 1 - ... - p-1`` with the given couplings."""
    p = len(thetas) + 1
    return TreeIsingModel.from_edges(p, [(i, i + 1, t) for i, t in enumerate(thetas)])


def star_model(thetas: Sequence[float], center: int = 0) -> TreeIsingModel:
    p = len(thetas) + 1
    leaves = [v for v in range(p) if v != center]
    return TreeIsingModel.from_edges(p, [(center, v, t) for v, t in zip(leaves, thetas)])


def hard_family(p: int, a: float, b: float) -> list[TreeIsingModel]:
    """Path models with alternating weak/strong couplings and their one-edge
    rewirings.

    The base model is the path on ``0..p-1`` whose edge ``(k, k+1)`` carries
    ``a`` for even ``k`` and ``b`` for odd ``k``. For every even ``k <= p-3``
    one further model drops the weak edge ``(k, k+1)`` and attaches ``k`` to
    ``k+2`` with coupling ``a`` instead. Returns ``(p + 1) / 2`` models, the
    base model first.
    """
    if p < 3 or p % 2 == 0:
        raise ValueError(f"p must be odd and at least 3, got {p}")
    if not 0 < a <= b:
        raise ValueError(f"need 0 < a <= b, got a={a}, b={b}")
    base = {(k, k + 1): (a if k % 2 == 0 else b) for k in range(p - 1)}
    models = [TreeIsingModel.from_edges(p, base, bounds=(a, b))]
    for k in range(0, p - 2, 2):
        theta = dict(base)
        del theta[(k, k + 1)]
        theta[(k, k + 2)] = a
        models.append(TreeIsingModel.from_edges(p, theta, bounds=(a, b)))
    return models


def chain_family(p: int, eta: float) -> list[TreeIsingModel]:
    """``p`` chain models with couplings ``atanh(eta)``; model 0 keeps every
    edge, model ``m >= 1`` has coupling 0 on edge ``(m-1, m)``."""
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if p < 2:
        raise ValueError("need at least two nodes")
    t = math.atanh(eta)
    models = [chain_model([t] * (p - 1))]
    for m in range(1, p):
        thetas = [t] * (p - 1)
        thetas[m - 1] = 0.0
        models.append(chain_model(thetas))
    return models


def prufer_decode(seq: Sequence[int], p: int) -> list[Edge]:
    """Edges of the labeled tree on ``p`` nodes encoded by a Prüfer sequence."""
    if p < 2:
        return []
    if len(seq) != p - 2:
        raise ValueError(f"Prüfer sequence for p={p} must have length {p - 2}")
    degree = [1] * p
    for s in seq:
        degree[s] += 1
    edges = []
    leaves = [v for v in range(p) if degree[v] == 1]
    heapq.heapify(leaves)
    for s in seq:
        leaf = heapq.heappop(leaves)
        edges.append(canonical_edge(leaf, s))
        degree[s] -= 1
        if degree[s] == 1:
            heapq.heappush(leaves, s)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append(canonical_edge(u, v))
    return edges


def random_tree_model(p: int, alpha: float, beta: float, rng: np.random.Generator) -> TreeIsingModel:
    """Uniform labeled spanning tree (random Prüfer code) with couplings
    ``|theta| ~ U[alpha, beta]`` and independent random signs."""
    if not 0 <= alpha <= beta:
        raise ValueError(f"need 0 <= alpha <= beta, got {alpha}, {beta}")
    seq = rng.integers(0, p, size=max(p - 2, 0)).tolist() if p > 2 else []
    edges = prufer_decode(seq, p)
    mags = rng.uniform(alpha, beta, size=len(edges))
    signs = rng.choice([-1.0, 1.0], size=len(edges))
    return TreeIsingModel.from_edges(
        p, {e: float(s * m) for e, s, m in zip(edges, signs, mags)}, bounds=(alpha, beta)
    )


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------


def format_model(m: TreeIsingModel, comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(f"p {m.p}")
    for (i, j), t in zip(m.edges, m.theta):
        lines.append(f"edge {i} {j} {t!r}")
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> TreeIsingModel:
    p = None
    couplings = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "p" and len(parts) == 2 and p is None:
            p = int(parts[1])
        elif parts[0] == "edge" and len(parts) == 4 and p is not None:
            couplings.append((int(parts[1]), int(parts[2]), float(parts[3])))
        else:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}")
    if p is None:
        raise ValueError("model file has no 'p <int>' line")
    return TreeIsingModel.from_edges(p, couplings)


def write_model(m: TreeIsingModel, path, comments: Sequence[str] = ()) -> None:
    with open(path, "w") as fh:
        fh.write(format_model(m, comments))


def read_model(path) -> TreeIsingModel:
    with open(path) as fh:
        return parse_model(fh.read())
