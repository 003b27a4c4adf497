"""Checkers for the combinatorial and probabilistic facts behind the learners.

* the two-trees witness: for spanning trees ``T``, ``T'`` and nodes whose
  paths differ, an edge ``f`` of the ``T``-path and ``g`` of the ``T'``-path
  that "cross" each other (exhaustive search, with a vectorised sweep over
  every pair of labeled trees on ``p <= 7`` nodes);
* the events E^corr, E^strong, E^cascade evaluated on a sample;
* the edge-swap statistics ``Z = X_w X_w~ - X_u X_u~`` and
  ``Y = X_w X_w~ + X_u X_u~`` with their deviation bounds;
* concentration of products of independent empirical means.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimation import empirical_correlations, strong_edge_threshold
from .evaluation import sstv2
from .learners import chow_liu, project
from .model import Forest, Tree, TreeIsingModel, canonical_edge, correlation_matrix, path_between, prufer_decode
from .sampling import SampleMatrix, SeedSpec, make_rng

__all__ = [
    "LemmaCounterexample",
    "TwoTreesWitness",
    "two_trees_witness",
    "witness_violations",
    "enumerate_spanning_trees",
    "TwoTreesSweep",
    "two_trees_sweep",
    "greedy_exchange_violations",
    "swap_pairs",
    "EventReport",
    "check_events",
    "PathStatistics",
    "zy_samples",
    "zy_statistics",
    "ProductCheck",
    "product_concentration_check",
    "corr_event_bound",
    "cascade_event_bound",
]


class LemmaCounterexample(AssertionError):
    """Raised when no crossing edge pair exists; the two-trees crossing property would then be false."""


# ---------------------------------------------------------------------------
# two-trees witness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoTreesWitness:
    """``f = (u, u~)`` on the first tree's path, ``g = (v, v~)`` on the
    second's, oriented so that ``u, v`` lie on ``w``'s side of ``f`` in the
    first tree and ``u~, v~`` on ``w~``'s side."""

    f: tuple[int, int]
    g: tuple[int, int]


def _side_of(t: Forest, root: int, cut: tuple[int, int]) -> set[int]:
    """Nodes reachable from ``root`` in ``t`` without crossing edge ``cut``."""
    cut = canonical_edge(*cut)
    seen = {root}
    stack = [root]
    while stack:
        a = stack.pop()
        for b in t.adjacency[a]:
            if b not in seen and canonical_edge(a, b) != cut:
                seen.add(b)
                stack.append(b)
    return seen


def _check_pair(t1, t2, w, wt):
    if t1.p != t2.p:
        raise ValueError("trees must share the node set")
    if not (t1.is_spanning_tree and t2.is_spanning_tree):
        raise ValueError("both structures must be spanning trees")
    if w == wt:
        raise ValueError("w and w~ must differ")


def two_trees_witness(t1: Tree, t2: Tree, w: int, wt: int) -> TwoTreesWitness | None:
    """First crossing pair ``(f, g)`` in path order, or ``None`` when
    ``path_t1(w, wt) == path_t2(w, wt)``.

    Candidates are scanned with ``f`` running along the ``t1`` path from
    ``w`` and, for each ``f``, ``g`` running along the ``t2`` path from
    ``w``. Raises :class:`LemmaCounterexample` if no pair qualifies.
    """
    _check_pair(t1, t2, w, wt)
    path1 = path_between(t1, w, wt)
    path2 = path_between(t2, w, wt)
    set1, set2 = set(path1), set(path2)
    if set1 == set2:
        return None
    for f in path1:
        if f in set2:
            continue
        reach2 = set(path_between(t2, *f))
        for g in path2:
            if g in set1 or g not in reach2:
                continue
            if f in path_between(t1, *g):
                return _orient(t1, path1, w, f, g)
    raise LemmaCounterexample(
        f"no crossing pair for t1={t1.edges}, t2={t2.edges}, w={w}, w~={wt}"
    )


def _orient(t1, path1, w, f, g) -> TwoTreesWitness:
    near = _side_of(t1, w, f)
    u, ut = (f[0], f[1]) if f[0] in near else (f[1], f[0])
    v, vt = (g[0], g[1]) if g[0] in near else (g[1], g[0])
    return TwoTreesWitness((u, ut), (v, vt))


def witness_violations(t1: Tree, t2: Tree, w: int, wt: int, wit: TwoTreesWitness) -> list[str]:
    """Names of the witness properties that ``wit`` fails (empty if valid)."""
    path1 = set(path_between(t1, w, wt))
    path2 = set(path_between(t2, w, wt))
    (u, ut), (v, vt) = wit.f, wit.g
    f, g = canonical_edge(u, ut), canonical_edge(v, vt)
    checks = {
        "f in path_t1(w, w~)": f in path1,
        "g in path_t2(w, w~)": g in path2,
        "f not in path_t2(w, w~)": f not in path2,
        "g not in path_t1(w, w~)": g not in path1,
        "f in path_t1(v, v~)": f in path_between(t1, v, vt),
        "g in path_t2(u, u~)": g in path_between(t2, u, ut),
    }
    if f in t1:
        near = _side_of(t1, w, f)
        far = _side_of(t1, wt, f)
        checks["u, v on w's side of f"] = u in near and v in near
        checks["u~, v~ on w~'s side of f"] = ut in far and vt in far
    return [name for name, ok in checks.items() if not ok]


def enumerate_spanning_trees(p: int):
    """Yield all ``p**(p-2)`` labeled spanning trees on ``p`` nodes via the
    Prüfer bijection, in lexicographic order of their codes."""
    if not 2 <= p <= 7:
        raise ValueError(f"enumeration supports 2 <= p <= 7, got {p}")
    for seq in itertools.product(range(p), repeat=p - 2):
        yield Tree(p, tuple(prufer_decode(seq, p)))


def _path_masks(trees: list[Tree]) -> np.ndarray:
    """``M[t, a]``: bitmask over complete-graph edges of the ``t``-path
    joining the endpoints of pair ``a`` (pairs and edges share indexing)."""
    p = trees[0].p
    pairs = list(itertools.combinations(range(p), 2))
    index = {e: k for k, e in enumerate(pairs)}
    M = np.zeros((len(trees), len(pairs)), dtype=np.uint32)
    for ti, t in enumerate(trees):
        for r in range(p):
            order, parent = t.bfs(r)
            # mask of path r -> v, built outward from r
            mask = {r: 0}
            for v in order[1:]:
                mask[v] = mask[parent[v]] | (1 << index[canonical_edge(parent[v], v)])
                if r < v:
                    M[ti, index[(r, v)]] = mask[v]
    return M


def _sweep_block(args):
    M, lo, hi = args
    T, A = M.shape
    bits = np.uint32(1) << np.arange(A, dtype=np.uint32)
    fails = []
    checked = 0
    for t1 in range(lo, hi):
        m1 = M[t1]
        differ = M != m1[None, :]
        # reach1[f]: mask of pairs g whose t1-path contains edge f
        reach1 = np.array([bits[(m1 & bits[f]) != 0].sum() for f in range(A)], dtype=np.uint32)
        found = np.zeros((T, A), dtype=bool)
        base = M & ~m1[None, :]  # g on t2-path, off t1-path
        for f in range(A):
            f_on_1 = (m1 & bits[f]) != 0  # (A,)
            if not f_on_1.any():
                continue
            f_off_2 = (M & bits[f]) == 0  # (T, A)
            g_mask = base & reach1[f] & M[:, f][:, None]
            found |= f_on_1[None, :] & f_off_2 & (g_mask != 0)
        bad = differ & ~found
        checked += int(differ.sum())
        if bad.any():
            for t2, a in zip(*np.nonzero(bad)):
                fails.append((t1, int(t2), int(a)))
    return checked, fails


@dataclass
class TwoTreesSweep:
    p: int
    n_trees: int
    instances: int
    counterexamples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.counterexamples


def two_trees_sweep(p: int, workers: int = 1, allow_p7: bool = False) -> TwoTreesSweep:
    """Check the witness property for every ordered pair of labeled spanning
    trees on ``p`` nodes and every node pair whose two paths differ.

    ``instances`` counts the ``(t1, t2, pair)`` triples with differing paths;
    ``counterexamples`` lists any triple without a crossing pair.
    """
    if p == 7 and not allow_p7:
        raise ValueError("p=7 sweeps take hours; pass allow_p7=True")
    if not 2 <= p <= 7:
        raise ValueError(f"sweep supports 2 <= p <= 7, got {p}")
    trees = list(enumerate_spanning_trees(p))
    M = _path_masks(trees)
    T = len(trees)
    n_blocks = max(1, min(T, 4 * workers))
    edges = np.linspace(0, T, n_blocks + 1).astype(int)
    blocks = [(M, int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_block, blocks))
    else:
        results = [_sweep_block(b) for b in blocks]
    pairs = list(itertools.combinations(range(p), 2))
    out = TwoTreesSweep(p, T, 0)
    for checked, fails in results:
        out.instances += checked
        out.counterexamples.extend((trees[a].edges, trees[b].edges, pairs[k]) for a, b, k in fails)
    return out


# ---------------------------------------------------------------------------
# learned-tree structure checks
# ---------------------------------------------------------------------------


def greedy_exchange_violations(c: np.ndarray, t: Tree, tol: float = 0.0) -> list:
    """Non-tree pairs ``(w, w~)`` with ``|c[w, w~]| > |c[e]| + tol`` for
    some edge ``e`` on the tree path; empty for a maximum-weight tree."""
    a = np.abs(np.asarray(c, dtype=float))
    bad = []
    for w, wt in itertools.combinations(range(t.p), 2):
        if (w, wt) in t:
            continue
        for i, j in path_between(t, w, wt):
            if a[w, wt] > a[i, j] + tol:
                bad.append(((w, wt), (i, j)))
    return bad


def swap_pairs(t_true: Tree, t_learned: Tree) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Pairs ``(f, g)`` with ``f`` only in ``t_true``, ``g`` only in
    ``t_learned``, ``f`` on the ``t_true``-path of ``g`` and ``g`` on the
    ``t_learned``-path of ``f``."""
    out = []
    only_true = [e for e in t_true.edges if e not in t_learned]
    only_learned = [e for e in t_learned.edges if e not in t_true]
    for f in only_true:
        path_l = set(path_between(t_learned, *f))
        for g in only_learned:
            if g in path_l and f in path_between(t_true, *g):
                out.append((f, g))
    return out


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------


def corr_event_bound(p: int, n: int, eps: float) -> float:
    """Lower bound ``1 - 2 p^2 exp(-n eps^2 / 2)`` on Pr[E^corr(eps)]."""
    return 1.0 - 2.0 * p * p * math.exp(-n * eps * eps / 2.0)


def cascade_event_bound(p: int, n: int, gamma: float) -> float:
    """Lower bound ``1 - (4 p^2 / gamma) exp(-gamma^2 n / 32)`` on Pr[E^cascade(gamma)]."""
    return 1.0 - 4.0 * p * p / gamma * math.exp(-gamma * gamma * n / 32.0)


@dataclass(frozen=True)
class EventReport:
    trial: int
    e_corr: bool
    e_strong: bool
    e_cascade: bool
    max_corr_dev: float
    cascade_dev: float
    missed_strong: tuple
    epsilon: float
    gamma: float
    tau: float
    zy_event: bool
    zy_worst_ratio: float
    missed_edges: tuple
    missing_weak_ok: bool
    corr_close_ok: bool | None

    def __post_init__(self):
        assert self.e_corr == (self.max_corr_dev <= self.epsilon)
        assert self.e_cascade == (self.cascade_dev <= self.gamma)
        assert self.e_strong == (len(self.missed_strong) == 0)


def _zy_event(c_hat, c_true, t: Forest, eps: float) -> float:
    """Largest ratio of Z/Y deviation to its allowed bound over all pairs
    ``(u, u~)`` and edges ``e`` on their path; the event holds iff <= 1.

    ``sum Z = n (mu_hat_e - mu_hat_uu~)`` and ``sum Y = n (mu_hat_e + mu_hat_uu~)``,
    so the check needs only the empirical correlations.
    """
    worst = 0.0
    floor = 16.0 * eps * eps
    for u, ut in itertools.combinations(range(t.p), 2):
        path = path_between(t, u, ut)
        if path is None:
            continue
        mus = [c_true[e] for e in path]
        for k, e in enumerate(path):
            mu_e = mus[k]
            mu_A = math.prod(mus[:k] + mus[k + 1:])
            z_dev = abs((c_hat[e] - c_hat[u, ut]) - mu_e * (1.0 - mu_A))
            y_dev = abs((c_hat[e] + c_hat[u, ut]) - mu_e * (1.0 + mu_A))
            z_bound = max(floor, 4.0 * eps * math.sqrt(max(1.0 - mu_A, 0.0)))
            y_bound = max(floor, 4.0 * eps * math.sqrt(max(1.0 + mu_A, 0.0)))
            worst = max(worst, z_dev / z_bound, y_dev / y_bound)
    return worst


def check_events(m_true: TreeIsingModel, s: SampleMatrix, eps: float, gamma: float,
                 beta: float | None = None, trial: int = 0) -> EventReport:
    """Evaluate E^corr(eps), E^strong(eps) and E^cascade(gamma) on ``s``.

    ``beta`` (the coupling bound behind the strong-edge threshold) defaults
    to the largest ``|theta_e|`` of ``m_true``.

    The report also lists the true edges Chow-Liu missed and whether the
    Z/Y deviation bounds held. ``missing_weak_ok`` says every missed edge has
    ``|mu_f| <= tau``. Under E^corr, ``corr_close_ok`` says every crossing
    swap ``(f, g)`` satisfies ``|mu_f| - 4 eps <= |mu_g| <= |mu_f|``.
    """
    if s.p != m_true.p:
        raise ValueError(f"samples have p={s.p}, model has p={m_true.p}")
    if beta is None:
        beta = max((abs(t) for t in m_true.theta), default=0.0)
    c_hat = empirical_correlations(s)
    c_true = correlation_matrix(m_true)
    p = m_true.p
    iu, ju = np.triu_indices(p, k=1)
    max_dev = float(np.max(np.abs(c_hat - c_true)[iu, ju])) if p > 1 else 0.0
    tau = strong_edge_threshold(eps, beta)

    learned = chow_liu(c_hat) if p > 1 else Tree(p, ())
    true_edges = m_true.edges
    mu = m_true.mu
    strong = [e for e, m in zip(true_edges, mu) if abs(m) >= tau]
    missed_strong = tuple(e for e in strong if e not in learned)
    missed = tuple(e for e in true_edges if e not in learned)
    missing_weak_ok = all(abs(c_true[e]) <= tau for e in missed)

    cascade = sstv2(m_true, project(c_hat, m_true.structure)).value if p > 1 else 0.0
    zy_ratio = _zy_event(c_hat, c_true, m_true.structure, eps) if p > 1 else 0.0

    corr_close = None
    if max_dev <= eps and m_true.structure.is_spanning_tree:
        corr_close = True
        for f, g in swap_pairs(m_true.structure, learned):
            af, ag = abs(c_true[f]), abs(c_true[g])
            if not (af - 4 * eps <= ag <= af + 1e-15):
                corr_close = False
    return EventReport(
        trial=trial,
        e_corr=max_dev <= eps,
        e_strong=not missed_strong,
        e_cascade=cascade <= gamma,
        max_corr_dev=max_dev,
        cascade_dev=cascade,
        missed_strong=missed_strong,
        epsilon=eps,
        gamma=gamma,
        tau=tau,
        zy_event=zy_ratio <= 1.0,
        zy_worst_ratio=zy_ratio,
        missed_edges=missed,
        missing_weak_ok=missing_weak_ok,
        corr_close_ok=corr_close,
    )


# ---------------------------------------------------------------------------
# Z / Y statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathStatistics:
    """Sums of ``Z = X_w X_w~ - X_u X_u~`` and ``Y = X_w X_w~ + X_u X_u~``
    for an edge ``e = (w, w~)`` on the path from ``u`` to ``u~``, with
    population means ``mu_e (1 -/+ mu_A)`` where ``A`` is the rest of the path."""

    edge: tuple[int, int]
    pair: tuple[int, int]
    n: int
    z_sum: int
    y_sum: int
    mu_e: float
    mu_A: float

    @property
    def z_mean(self) -> float:
        return self.mu_e * (1.0 - self.mu_A)

    @property
    def y_mean(self) -> float:
        return self.mu_e * (1.0 + self.mu_A)

    @property
    def z_deviation(self) -> float:
        return abs(self.z_sum - self.n * self.z_mean)

    @property
    def y_deviation(self) -> float:
        return abs(self.y_sum - self.n * self.y_mean)

    def z_bound(self, eps: float, floor: float = 16.0) -> float:
        """``max{floor n eps^2, 4 n eps sqrt(1 - mu_A)}``.

        The default ``floor = 16`` is the weaker of the two constants in use;
        pass ``floor=4`` for the tighter variant.
        """
        return max(floor * self.n * eps**2, 4.0 * self.n * eps * math.sqrt(max(1.0 - self.mu_A, 0.0)))

    def y_bound(self, eps: float, floor: float = 16.0) -> float:
        return max(floor * self.n * eps**2, 4.0 * self.n * eps * math.sqrt(max(1.0 + self.mu_A, 0.0)))

    def within_bounds(self, eps: float, floor: float = 16.0) -> bool:
        return self.z_deviation <= self.z_bound(eps, floor) and self.y_deviation <= self.y_bound(eps, floor)


def zy_samples(s: SampleMatrix, e, u: int, ut: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample ``Z`` and ``Y`` values (each in ``{-2, 0, 2}``)."""
    w, wt = e
    x = s.spins.astype(np.int64)
    a = x[:, w] * x[:, wt]
    b = x[:, u] * x[:, ut]
    return a - b, a + b


def zy_statistics(s: SampleMatrix, m_true: TreeIsingModel, e, u: int, ut: int) -> PathStatistics:
    e = canonical_edge(*e)
    path = path_between(m_true.structure, u, ut)
    if path is None or e not in path:
        raise ValueError(f"edge {e} is not on the path between {u} and {ut}")
    idx = m_true.structure.edge_index
    mu = m_true.mu
    mu_A = 1.0
    for g in path:
        if g != e:
            mu_A *= mu[idx[g]]
    z, y = zy_samples(s, e, u, ut)
    return PathStatistics(e, (u, ut), s.n, int(z.sum()), int(y.sum()), float(mu[idx[e]]), float(mu_A))


# ---------------------------------------------------------------------------
# product of empirical means
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProductCheck:
    d: int
    n: int
    gamma: float
    trials: int
    exceedances: int
    bound: float

    @property
    def rate(self) -> float:
        return self.exceedances / self.trials

    @property
    def passed(self) -> bool:
        return self.rate <= self.bound


def product_concentration_check(d: int, mus, n: int, gamma: float, trials: int,
                                seed: SeedSpec | int = 0) -> ProductCheck:
    """Frequency of ``|prod mu_hat_j - prod mu_j| >= gamma`` for ``d``
    independent ``+/-1`` factors with means ``mus``, each estimated from
    ``n`` draws, against the bound ``(8 / gamma) exp(-gamma^2 n / 32)``.
    """
    mus = np.asarray(mus, dtype=float).reshape(-1)
    if mus.size != d:
        raise ValueError(f"expected {d} means, got {mus.size}")
    if np.any(np.abs(mus) > 1):
        raise ValueError("means of +/-1 variables must lie in [-1, 1]")
    if n < 1 or trials < 1 or gamma <= 0:
        raise ValueError("need n >= 1, trials >= 1, gamma > 0")
    rng = make_rng(seed)
    plus = rng.binomial(n, (1.0 + mus) / 2.0, size=(trials, d))
    mu_hat = (2 * plus - n) / n
    err = np.abs(np.prod(mu_hat, axis=1) - np.prod(mus))
    bound = 8.0 / gamma * math.exp(-gamma * gamma * n / 32.0)
    return ProductCheck(d, n, gamma, trials, int(np.sum(err >= gamma)), bound)
