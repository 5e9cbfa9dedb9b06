"""Shared builders for the test suite.

Random instances are always drawn from seeded generators so every test
is reproducible; expected values come from independent oracles (dense
solves, finite differences, closed forms) rather than from the code
under test.
"""

import numpy as np
import pytest

from walkrank.graphs import JudgmentPair, QueryGraph
from walkrank.dataset import Dataset


def swap_graph(margin=0.05, seed_features=((1.0,), (0.0,))):
    """Two nodes exchanging all mass: 0 -> 1 -> 0, restart mass on node 0.

    With alpha = 0.15 the exact stationary distribution is
    [20/37, 17/37]; hand-checkable through the 2x2 solve.
    """
    judgments = [JudgmentPair(more_relevant=1, less_relevant=0, margin=margin)]
    return QueryGraph(
        "swap",
        node_features=np.array(seed_features),
        seed=[0, 1],
        edge_src=[0, 1],
        edge_dst=[1, 0],
        edge_features=np.ones((2, 1)),
        judgments=judgments,
    )


def random_graph(rng, p=10, s=3, m1=2, m2=3, n_judgments=4, query_id="g", dangling_ok=True):
    """Random feasible graph with strictly positive features."""
    node_features = 1.0 - rng.random((p, m1))
    n_seed = int(rng.integers(1, max(2, p // 2)))
    seed = np.sort(rng.choice(p, size=n_seed, replace=False))
    src, dst = [], []
    if p > 1:
        for i in range(p):
            lo = 0 if dangling_ok else 1
            degree = int(rng.integers(lo, s + 1))
            if degree == 0:
                continue
            pool = np.delete(np.arange(p), i)
            for t in rng.choice(pool, size=min(degree, p - 1), replace=False):
                src.append(i)
                dst.append(int(t))
    edge_features = 1.0 - rng.random((len(src), m2))
    judgments = []
    if n_judgments and p > 1:
        for _ in range(n_judgments):
            a, b = rng.choice(p, size=2, replace=False)
            judgments.append(
                JudgmentPair(int(a), int(b), float((0.05 + 0.4 * rng.random()) / p))
            )
    return QueryGraph(query_id, node_features, seed, src, dst, edge_features, judgments)


def random_dataset(rng, n_queries=4, p=10, s=3, m1=2, m2=3, n_judgments=4, alpha=0.15):
    queries = [
        random_graph(rng, p=p, s=s, m1=m1, m2=m2, n_judgments=n_judgments, query_id=f"q{i}")
        for i in range(n_queries)
    ]
    return Dataset(m1=m1, m2=m2, alpha=alpha, queries=queries)


def central_difference(fn, x, step=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        out[j] = (fn(x + e) - fn(x - e)) / (2.0 * step)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
