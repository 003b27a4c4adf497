import numpy as np
import pytest
from hypothesis import strategies as st

from treeising.model import Forest, TreeIsingModel, prufer_decode


@st.composite
def tree_models(draw, min_p=2, max_p=7, max_theta=2.0, forest=False):
    """Random tree (or forest) Ising models with couplings in [-max_theta, max_theta]."""
    p = draw(st.integers(min_p, max_p))
    seq = draw(st.lists(st.integers(0, p - 1), min_size=max(p - 2, 0), max_size=max(p - 2, 0)))
    edges = prufer_decode(seq, p)
    if forest:
        keep = draw(st.lists(st.booleans(), min_size=len(edges), max_size=len(edges)))
        edges = [e for e, k in zip(edges, keep) if k]
    thetas = draw(st.lists(st.floats(-max_theta, max_theta, allow_nan=False),
                           min_size=len(edges), max_size=len(edges)))
    structure = Forest(p, tuple(edges))
    # keep thetas aligned with the sorted edge order
    by_edge = dict(zip(edges, thetas))
    return TreeIsingModel.from_edges(p, by_edge) if len(edges) else TreeIsingModel(structure, ())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
