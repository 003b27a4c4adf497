"""Monte-Carlo learning sweeps and the three-node chain comparison.

Model generation for the command line lives here as well.

Every random draw in a sweep is derived from one master seed: the task at
position ``k`` of the ``(n, trial)`` grid (n-major) samples with
``SeedSpec(master_seed, k)``. Output rows are written in grid order, so the
CSV is identical for any worker count.
"""
from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimation import ThresholdSpec, empirical_correlations, hoeffding_epsilon
from .evaluation import sstv2
from .learners import chow_liu, project, truncation
from .model import (
    Forest,
    TreeIsingModel,
    chain_family,
    chain_model,
    correlation_matrix,
    hard_family,
    random_tree_model,
    read_model,
    star_model,
    write_model,
)
from .sampling import RNG_NAME, SeedSpec, make_rng, sample
from .verification import check_events

__all__ = [
    "CSV_HEADER",
    "DEFAULT_C",
    "SweepConfig",
    "SweepRow",
    "sweep",
    "write_sweep_csv",
    "sufficient_samples",
    "repro_chain",
    "ChainReport",
    "gen_model",
    "weak_edge_chain",
]

CSV_HEADER = "# tree-ising-lab v1"
DEFAULT_C = 8.0


def sufficient_samples(p: int, alpha: float, beta: float, delta: float, C: float = DEFAULT_C) -> int:
    """``ceil(C e^{2 beta} max(alpha^-2, 1) log(p / delta))`` samples for
    exact recovery; ``C`` is an empirical constant."""
    return math.ceil(C * math.exp(2 * beta) * max(alpha**-2, 1.0) * math.log(p / delta))


def weak_edge_chain(p: int = 8, weak: float = 0.01, strong: float = 0.9, position: int | None = None) -> TreeIsingModel:
    """Chain with correlation ``strong`` on every edge except one ``weak``
    edge, by default the middle one."""
    k = (p - 1) // 2 if position is None else position
    mus = [strong] * (p - 1)
    mus[k] = weak
    return chain_model([math.atanh(m) for m in mus])


@dataclass(frozen=True)
class SweepConfig:
    model: TreeIsingModel
    n_grid: tuple[int, ...]
    trials: int = 100
    delta: float = 0.1
    beta: float | None = None
    gamma: float | None = None
    methods: tuple[str, ...] = ("chow_liu",)
    master_seed: int = 0
    workers: int = 1
    record_timing: bool = False
    model_name: str = "model"

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n grid must be non-empty and strictly increasing")
        if grid[0] < 1:
            raise ValueError("sample sizes must be positive")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for m in self.methods:
            if m not in ("chow_liu", "truncation"):
                raise ValueError(f"unknown method {m!r}")
        object.__setattr__(self, "n_grid", grid)

    @property
    def coupling_bound(self) -> float:
        if self.beta is not None:
            return self.beta
        return max((abs(t) for t in self.model.theta), default=0.0)


@dataclass(frozen=True)
class SweepRow:
    n: int
    trial: int
    method: str
    structure_recovered: int
    sstv2: float
    n_edges: int
    subset_of_truth: int
    e_corr: int
    e_strong: int
    e_cascade: int
    runtime_ms: float | None = field(default=None, compare=False)


def _run_task(args) -> list[SweepRow]:
    cfg, n, trial, index = args
    t0 = time.perf_counter()
    m = cfg.model
    s = sample(m, n, SeedSpec(cfg.master_seed, index))
    c = empirical_correlations(s)
    p = m.p
    eps = hoeffding_epsilon(n, max(p, 2), cfg.delta)
    gamma = eps if cfg.gamma is None else cfg.gamma
    beta = cfg.coupling_bound
    ev = check_events(m, s, eps, gamma, beta=beta, trial=trial)
    truth = set(m.edges)
    rows = []
    for method in cfg.methods:
        if method == "chow_liu":
            structure = chow_liu(c)
        else:
            structure = truncation(c, ThresholdSpec.from_problem(n, p, cfg.delta, beta))
        learned = project(c, structure)
        loss = sstv2(m, learned).value
        edges = set(structure.edges)
        rows.append(SweepRow(
            n=n, trial=trial, method=method,
            structure_recovered=int(edges == truth),
            sstv2=loss,
            n_edges=len(edges),
            subset_of_truth=int(edges <= truth),
            e_corr=int(ev.e_corr), e_strong=int(ev.e_strong), e_cascade=int(ev.e_cascade),
        ))
    if cfg.record_timing:
        ms = (time.perf_counter() - t0) * 1000.0
        rows = [SweepRow(**{**asdict(r), "runtime_ms": ms}) for r in rows]
    return rows


def sweep(cfg: SweepConfig) -> list[SweepRow]:
    """Sample, learn and score every ``(n, trial)`` cell of the grid."""
    tasks = []
    for ni, n in enumerate(cfg.n_grid):
        for trial in range(cfg.trials):
            tasks.append((cfg, n, trial, ni * cfg.trials + trial))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            chunks = list(ex.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * cfg.workers))))
    else:
        chunks = [_run_task(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


_COLUMNS = ["n", "trial", "method", "structure_recovered", "sstv2", "n_edges",
            "subset_of_truth", "e_corr", "e_strong", "e_cascade"]


def format_sweep_csv(cfg: SweepConfig, rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    buf.write(f"# model={cfg.model_name} p={cfg.model.p} master_seed={cfg.master_seed} "
              f"rng={RNG_NAME} delta={cfg.delta!r} trials={cfg.trials}\n")
    cols = _COLUMNS + (["runtime_ms"] if cfg.record_timing else [])
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        d = asdict(r)
        d["sstv2"] = repr(r.sstv2)
        w.writerow([d[c] for c in cols])
    return buf.getvalue()


def write_sweep_csv(cfg: SweepConfig, rows: list[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_sweep_csv(cfg, rows))


def summarize(rows: list[SweepRow]) -> dict:
    """Per ``(method, n)`` recovery rate and mean L2 loss.

    Each entry also carries the fraction of trials with ``sstv2 <= 0.1`` and
    the fraction whose learned edges all belong to the true tree.
    """
    out = {}
    for r in rows:
        out.setdefault((r.method, r.n), []).append(r)
    return {
        key: {
            "recovery_rate": float(np.mean([r.structure_recovered for r in rs])),
            "mean_sstv2": float(np.mean([r.sstv2 for r in rs])),
            "sstv2_le_0.1": float(np.mean([r.sstv2 <= 0.1 for r in rs])),
            "subset_rate": float(np.mean([r.subset_of_truth for r in rs])),
            "trials": len(rs),
        }
        for key, rs in out.items()
    }


# ---------------------------------------------------------------------------
# three-node chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainReport:
    """Graph-estimation losses ``L2(P, Pi_T(P))`` for the true chain
    ``T1 = 0-1-2``, the forest ``T2 = {(1,2)}`` and the tree
    ``T3 = {(0,2),(1,2)}``; ``printed`` holds the same quantities without
    the 1/2 of the TV distance."""

    epsilon: float
    losses: dict
    closed_form: dict
    printed: dict


def repro_chain(epsilon: float) -> ChainReport:
    """Chain with ``mu_01 = eps`` and ``mu_12 = 1 - eps`` projected onto the
    three candidate structures with its own population correlations."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    P = chain_model([math.atanh(epsilon), math.atanh(1.0 - epsilon)])
    corr = correlation_matrix(P)
    structures = {
        "T1": Forest(3, ((0, 1), (1, 2))),
        "T2": Forest(3, ((1, 2),)),
        "T3": Forest(3, ((0, 2), (1, 2))),
    }
    losses = {name: sstv2(P, project(corr, t)).value for name, t in structures.items()}
    e = epsilon
    closed = {"T1": 0.0, "T2": e / 2, "T3": e * e * (2 - e) / 2}
    printed = {"T1": 0.0, "T2": e, "T3": e * e * (2 - e)}
    return ChainReport(epsilon, losses, closed, printed)


# ---------------------------------------------------------------------------
# model generation
# ---------------------------------------------------------------------------


def gen_model(kind: str, **params) -> list[TreeIsingModel]:
    """Generate one or more models.

    kind : {"random-tree", "chain", "star", "hard-family", "chain-family", "weak-chain"}
        ``random-tree`` takes ``p, alpha, beta, seed``; ``chain`` and
        ``star`` take ``thetas``; ``hard-family`` takes ``p, alpha, beta``;
        ``chain-family`` takes ``p, eta``; ``weak-chain`` takes ``p, weak, strong``.
    """
    kind = kind.replace("_", "-")
    if kind == "random-tree":
        rng = make_rng(SeedSpec(int(params.get("seed", 0)), 0))
        return [random_tree_model(int(params["p"]), float(params["alpha"]), float(params["beta"]), rng)]
    if kind == "chain":
        return [chain_model([float(t) for t in params["thetas"]])]
    if kind == "star":
        return [star_model([float(t) for t in params["thetas"]])]
    if kind == "hard-family":
        return hard_family(int(params["p"]), float(params["alpha"]), float(params["beta"]))
    if kind == "chain-family":
        return chain_family(int(params["p"]), float(params["eta"]))
    if kind == "weak-chain":
        return [weak_edge_chain(int(params.get("p", 8)), float(params.get("weak", 0.01)),
                                float(params.get("strong", 0.9)))]
    raise ValueError(f"unknown model kind {kind!r}")


def write_models(models: list[TreeIsingModel], out: str, comment: str = "") -> list[str]:
    """Write one file per model; several models get ``_<k>`` suffixes."""
    if len(models) == 1:
        paths = [out]
    else:
        root, ext = os.path.splitext(out)
        paths = [f"{root}_{k}{ext or '.txt'}" for k in range(len(models))]
    for m, path in zip(models, paths):
        write_model(m, path, [comment] if comment else [])
    return paths


def load_model(path) -> TreeIsingModel:
    return read_model(path)
