"""Empirical correlations and the Hoeffding radius / strong-edge threshold."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampling import SampleMatrix

__all__ = [
    "ThresholdSpec",
    "empirical_correlations",
    "hoeffding_epsilon",
    "strong_edge_threshold",
    "check_correlation_matrix",
    "write_correlations_csv",
    "read_correlations_csv",
]


def empirical_correlations(s: SampleMatrix | np.ndarray) -> np.ndarray:
    """``mu_hat[i, j] = (1/n) sum_l X_i^(l) X_j^(l)``.

    Spin products are accumulated as exact int64 sums before the single
    division by ``n``.
    """
    x = s.spins if isinstance(s, SampleMatrix) else np.asarray(s)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("empty sample matrix")
    xi = x.astype(np.int64)
    counts = xi.T @ xi
    c = counts / x.shape[0]
    np.fill_diagonal(c, 1.0)
    return c


def check_correlation_matrix(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("correlation matrix must be square")
    if not np.allclose(c, c.T, atol=0, rtol=0):
        raise ValueError("correlation matrix must be symmetric")
    if not np.all(np.diag(c) == 1.0):
        raise ValueError("correlation matrix must have unit diagonal")
    if np.any(np.abs(c) > 1.0):
        raise ValueError("correlations must lie in [-1, 1]")
    return c


def hoeffding_epsilon(n: int, p: int, delta: float) -> float:
    """``sqrt((2/n) log(2 p^2 / delta))``: with probability at least
    ``1 - delta`` every empirical correlation is within this radius."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if p < 2:
        raise ValueError("p must be at least 2")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return math.sqrt(2.0 / n * math.log(2.0 * p * p / delta))


def strong_edge_threshold(epsilon: float, beta: float) -> float:
    """``tau = 4 epsilon / sqrt(1 - tanh beta)``, never more than ``4 epsilon e^beta``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    # 1 - tanh(b) = 2 / (1 + e^{2b}) avoids cancellation for large beta
    return 4.0 * epsilon / math.sqrt(2.0 / (1.0 + math.exp(2.0 * beta)))


@dataclass(frozen=True)
class ThresholdSpec:
    """Correlation radius ``epsilon`` and strong-edge threshold ``tau``."""

    epsilon: float
    tau: float
    n: int | None = None
    p: int | None = None
    delta: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")

    @classmethod
    def from_problem(cls, n: int, p: int, delta: float, beta: float,
                     epsilon: float | None = None, tau: float | None = None) -> "ThresholdSpec":
        """Derive both thresholds from ``(n, p, delta, beta)``; explicit
        ``epsilon`` or ``tau`` override the formulas."""
        eps = hoeffding_epsilon(n, p, delta) if epsilon is None else float(epsilon)
        t = strong_edge_threshold(eps, beta) if tau is None else float(tau)
        return cls(eps, t, n, p, delta, beta)

    @property
    def cutoff(self) -> float:
        """Truncation keeps edges with ``|mu_hat| >= tau + epsilon``."""
        return self.tau + self.epsilon


def write_correlations_csv(c: np.ndarray, path) -> None:
    c = np.asarray(c, dtype=float)
    with open(path, "w") as fh:
        for row in c:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_correlations_csv(path) -> np.ndarray:
    return check_correlation_matrix(np.loadtxt(path, delimiter=",", ndmin=2))
