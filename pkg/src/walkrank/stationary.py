"""Stationary distributions of the parameterized walk.

Three routes: a truncated, renormalized geometric-series approximation
(linear convergence in 1-norm, error <= 2 (1-alpha)^(N+1)), the classic
power method (fixed-point iteration, error <= 2 (1-alpha)^N), and a
dense direct solve reserved for small graphs as a test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from walkrank import _kernels
from walkrank.graphs import TransitionModel

DENSE_CAP = 500


@dataclass
class MatvecCounter:
    """Counts sparse transposed-transition applications.

    A vector application counts 1; applying to a dense (p, m) matrix
    counts m. Monotone non-decreasing.
    """

    count: int = 0

    def add(self, n: int):
        if n < 0:
            raise ValueError("counter can only increase")
        self.count += n


def series_stationary(tm: TransitionModel, N: int, counter: MatvecCounter | None = None) -> np.ndarray:
    """Truncated geometric-series approximation of the stationary vector.

    Runs pi_{k+1} = P^T pi_k from the restart vector and returns
    alpha / (1 - (1-alpha)^(N+1)) * sum_{k=0..N} (1-alpha)^k pi_k,
    accumulated incrementally with a running scalar weight. The output
    is a convex combination of stochastic vectors, hence in the simplex,
    and satisfies ||out - pi_exact||_1 <= 2 (1-alpha)^(N+1).
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    acc = _kernels.series_sum(
        tm.t_indptr, tm.t_src, tm.t_data, tm.dangling, tm.pi0, tm.alpha, N
    )
    if counter is not None:
        counter.add(N)
    scale = tm.alpha / (1.0 - (1.0 - tm.alpha) ** (N + 1))
    return scale * acc


def power_stationary(tm: TransitionModel, N: int, counter: MatvecCounter | None = None) -> np.ndarray:
    """N-th iterate of pi <- alpha pi0 + (1-alpha) P^T pi, from pi0.

    Satisfies ||out - pi_exact||_1 <= 2 (1-alpha)^N.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    out = _kernels.power_iterate(
        tm.t_indptr, tm.t_src, tm.t_data, tm.dangling, tm.pi0, tm.alpha, N
    )
    if counter is not None:
        counter.add(N)
    return out


def exact_stationary(tm: TransitionModel, dense_cap: int = DENSE_CAP) -> np.ndarray:
    """Dense direct solve of pi = alpha pi0 + (1-alpha) P^T pi.

    O(p^3); intended as an oracle for small graphs, so the node count is
    capped.
    """
    p = tm.p
    if p > dense_cap:
        raise ValueError(f"graph with {p} nodes exceeds dense cap {dense_cap}")
    PT = tm.dense_transition().T
    A = np.eye(p) - (1.0 - tm.alpha) * PT
    return np.linalg.solve(A, tm.alpha * tm.pi0)


def steps_for_accuracy(alpha: float, delta1: float) -> int:
    """Series length guaranteeing 1-norm error at most delta1.

    N = ceil(ln(2/delta1) / alpha) - 1, clamped at 0 (the bound's
    derivation assumes delta1 < 2; for larger tolerances N = 0 already
    satisfies it).
    """
    if delta1 <= 0:
        raise ValueError("delta1 must be positive")
    return max(0, math.ceil(math.log(2.0 / delta1) / alpha) - 1)
