"""Exhaustive enumeration over all 2^p spin configurations.

These routines are deliberately naive: they evaluate the unnormalised
Ising weight of every configuration and never use the tree structure, so
they serve as independent oracles for the tree-specific closed forms.
"""
from __future__ import annotations

import itertools

import numpy as np

from .model import MAX_BRUTE_FORCE_NODES, TreeIsingModel

__all__ = [
    "spin_configurations",
    "joint_table",
    "brute_log_partition",
    "marginal_from_table",
    "correlations_from_table",
    "entropy",
    "kl_divergence",
]


def spin_configurations(k: int) -> np.ndarray:
    """All ``2**k`` configurations of ``k`` spins, shape ``(2**k, k)``.

    Rows follow ``itertools.product((-1, 1), repeat=k)`` order: the last
    spin varies fastest and ``-1`` precedes ``+1``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > MAX_BRUTE_FORCE_NODES:
        raise ValueError(f"refusing to enumerate 2^{k} configurations (limit p <= {MAX_BRUTE_FORCE_NODES})")
    idx = np.arange(2**k, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def _energies(m: TreeIsingModel, states: np.ndarray) -> np.ndarray:
    e = np.zeros(states.shape[0])
    for (i, j), t in zip(m.edges, m.theta):
        e += t * states[:, i].astype(float) * states[:, j]
    return e


def brute_log_partition(m: TreeIsingModel) -> float:
    states = spin_configurations(m.p)
    e = _energies(m, states)
    top = e.max()
    return float(top + np.log(np.sum(np.exp(e - top))))


def joint_table(m: TreeIsingModel) -> np.ndarray:
    """Probabilities of all configurations, in :func:`spin_configurations` order."""
    states = spin_configurations(m.p)
    e = _energies(m, states)
    w = np.exp(e - e.max())
    return w / w.sum()


def marginal_from_table(table: np.ndarray, p: int, subset) -> np.ndarray:
    """Marginal of a full table on ``subset`` (in the given node order)."""
    subset = list(subset)
    t = np.asarray(table).reshape((2,) * p)
    rest = tuple(a for a in range(p) if a not in subset)
    marg = t.sum(axis=rest) if rest else t
    kept = [a for a in range(p) if a in subset]
    perm = [kept.index(a) for a in subset]
    return np.transpose(marg, perm).reshape(-1)


def correlations_from_table(table: np.ndarray, p: int) -> np.ndarray:
    states = spin_configurations(p).astype(float)
    weighted = states * np.asarray(table)[:, None]
    return weighted.T @ states


def entropy(table: np.ndarray) -> float:
    t = np.asarray(table, dtype=float)
    nz = t[t > 0]
    return float(-np.sum(nz * np.log(nz)))


def kl_divergence(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    nz = a > 0
    return float(np.sum(a[nz] * (np.log(a[nz]) - np.log(b[nz]))))


def iter_configurations(k: int):
    return itertools.product((-1, 1), repeat=k)
