"""Exact ancestral sampling from tree/forest Ising models.

Reproducibility contract: every sample matrix is drawn from a
``numpy.random.Generator(PCG64(s))`` where ``s`` is the splitmix64 hash of
``(master_seed, trial_index)`` computed by :func:`trial_seed`. The draw
order is fixed: one uniform vector for the root spins of every component
(roots taken in ascending node order), then one uniform vector per edge in
breadth-first order from each root.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .model import TreeIsingModel, canonical_edge

__all__ = [
    "RNG_NAME",
    "SeedSpec",
    "SampleMatrix",
    "splitmix64",
    "trial_seed",
    "make_rng",
    "sample",
    "write_samples",
    "read_samples",
]

RNG_NAME = "numpy-pcg64/splitmix64"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 output step (Steele, Lea & Flood) on a 64-bit state."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Per-trial stream seed: ``splitmix64(splitmix64(master) + trial)``."""
    if trial_index < 0:
        raise ValueError("trial index must be non-negative")
    return splitmix64((splitmix64(master_seed & _MASK64) + trial_index) & _MASK64)


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    trial_index: int = 0

    def __post_init__(self):
        if self.trial_index < 0:
            raise ValueError("trial index must be non-negative")

    @property
    def stream_seed(self) -> int:
        return trial_seed(self.master_seed, self.trial_index)

    def __str__(self):
        return f"{self.master_seed}/{self.trial_index}"


def make_rng(seed: SeedSpec | int) -> np.random.Generator:
    if not isinstance(seed, SeedSpec):
        seed = SeedSpec(int(seed), 0)
    return np.random.Generator(np.random.PCG64(seed.stream_seed))


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """``n x p`` matrix of spins in ``{-1, +1}`` (stored as int8)."""

    spins: np.ndarray
    seed: SeedSpec | None = None

    def __post_init__(self):
        x = np.asarray(self.spins)
        if x.ndim != 2:
            raise ValueError("spins must be a 2-d array")
        if x.shape[0] == 0:
            raise ValueError("sample matrix is empty")
        if not np.all((x == 1) | (x == -1)):
            raise ValueError("spins must be -1 or +1")
        x = x.astype(np.int8, copy=True)
        x.setflags(write=False)
        object.__setattr__(self, "spins", x)

    @property
    def n(self) -> int:
        return self.spins.shape[0]

    @property
    def p(self) -> int:
        return self.spins.shape[1]


def sample(m: TreeIsingModel, n: int, seed: SeedSpec | int) -> SampleMatrix:
    """Draw ``n`` i.i.d. configurations from ``m``.

    Each component is rooted at its lowest node with a uniform spin; every
    child copies its parent's spin with probability ``(1 + mu_e) / 2`` and
    flips it otherwise.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not isinstance(seed, SeedSpec):
        seed = SeedSpec(int(seed), 0)
    rng = make_rng(seed)
    comps = m.structure.components()
    x = np.empty((n, m.p), dtype=np.int8)
    roots = [c[0] for c in comps]
    root_u = rng.random((n, len(roots)))
    x[:, roots] = np.where(root_u < 0.5, 1, -1)
    idx = m.structure.edge_index
    mu = m.mu
    for comp in comps:
        _, parent = m.structure.bfs(comp[0])
        for v in comp[1:]:
            u = parent[v]
            keep = (1.0 + mu[idx[canonical_edge(u, v)]]) / 2.0
            agree = rng.random(n) < keep
            x[:, v] = np.where(agree, x[:, u], -x[:, u])
    return SampleMatrix(x, seed)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

_BINARY_MAGIC = b"TISB1\n"


def _header(s: SampleMatrix) -> str:
    seed = str(s.seed) if s.seed is not None else "none"
    return f"samples n={s.n} p={s.p} seed={seed} rng={RNG_NAME}"


def _parse_header(line: str):
    parts = line.split()
    if not parts or parts[0] != "samples":
        raise ValueError(f"not a sample file header: {line!r}")
    fields = dict(p.split("=", 1) for p in parts[1:])
    seed = None
    if fields.get("seed", "none") != "none":
        master, trial = fields["seed"].split("/")
        seed = SeedSpec(int(master), int(trial))
    return int(fields["n"]), int(fields["p"]), seed


def write_samples(s: SampleMatrix, path, binary: bool = False) -> None:
    """Text: header line then ``n`` rows of ``+1``/``-1``.

    Binary: the magic ``TISB1``, the same header line, then the spins
    packed one bit per spin (``+1`` -> 1) row-major with each row padded to
    a whole byte (``numpy.packbits`` big-endian bit order).
    """
    if binary:
        with open(path, "wb") as fh:
            fh.write(_BINARY_MAGIC)
            fh.write((_header(s) + "\n").encode())
            fh.write(np.packbits(s.spins > 0, axis=1).tobytes())
        return
    with open(path, "w") as fh:
        fh.write(_header(s) + "\n")
        rows = np.where(s.spins > 0, "+1", "-1")
        buf = io.StringIO()
        for row in rows:
            buf.write(" ".join(row))
            buf.write("\n")
        fh.write(buf.getvalue())


def read_samples(path) -> SampleMatrix:
    with open(path, "rb") as fh:
        head = fh.read(len(_BINARY_MAGIC))
        if head == _BINARY_MAGIC:
            n, p, seed = _parse_header(fh.readline().decode())
            packed = np.frombuffer(fh.read(), dtype=np.uint8)
            row_bytes = (p + 7) // 8
            if packed.size != n * row_bytes:
                raise ValueError("binary sample file is truncated")
            bits = np.unpackbits(packed.reshape(n, row_bytes), axis=1)[:, :p]
            return SampleMatrix(np.where(bits == 1, 1, -1).astype(np.int8), seed)
    with open(path) as fh:
        n, p, seed = _parse_header(fh.readline())
        data = np.loadtxt(fh, dtype=np.int8, ndmin=2)
    if data.shape != (n, p):
        raise ValueError(f"expected {n}x{p} spins, found {data.shape[0]}x{data.shape[1]}")
    return SampleMatrix(data, seed)
