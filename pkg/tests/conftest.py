"""Shared test helpers: small random graph models and independent
energy oracles used to cross-check library code."""

import itertools

import numpy as np
import pytest

from latticelnls.ising import IsingModel
from latticelnls.lattice import _finish


def random_graph_model(n: int, rng: np.random.Generator,
                       p: float = 0.4, fields: bool = True) -> IsingModel:
    """Connected-ish random graph model on n vertices with couplers and
    fields uniform on [-1, 1]."""
    edges = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.add((j, i))
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p:
                edges.add((a, b))
    coords = [(i,) for i in range(n)]
    top = _finish("cubic", n, coords, edges, 0)
    h = rng.uniform(-1, 1, n) if fields else np.zeros(n)
    return IsingModel(top, h, rng.uniform(-1, 1, top.n_edges))


def batch_energies(model: IsingModel, states: np.ndarray) -> np.ndarray:
    """Vectorized full-model energies for a (k, N) state batch;
    independent of the library's energy routines."""
    x = np.atleast_2d(states).astype(np.float64)
    e = model.topology.edges
    return (x[:, e[:, 0]] * x[:, e[:, 1]]) @ model.j + x @ model.h


def all_states(n: int) -> np.ndarray:
    """All 2^n states in lexicographic order with -1 < +1."""
    return np.array(list(itertools.product((-1, 1), repeat=n)),
                    dtype=np.int8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
