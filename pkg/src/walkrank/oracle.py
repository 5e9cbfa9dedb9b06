"""Pairwise squared-hinge loss and its accuracy-controlled oracles.

Each judgment (more, less, margin) contributes
((pi[less] - pi[more] - margin)_+)^2; the dataset loss is the mean of
the per-query sums. Inexact variants run the truncated-series
approximations just deep enough that the returned value is within
delta1 of the true loss (resp. the returned gradient within delta2 of
the true gradient in max-norm); exact variants use the dense solves and
serve as oracles for small graphs.

Per-query terms are reduced in the dataset's query order, so results
are bit-reproducible run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from walkrank.dataset import Dataset
from walkrank.derivatives import exact_derivative, series_derivative
from walkrank.graphs import QueryGraph, transition_model
from walkrank.stationary import DENSE_CAP, MatvecCounter, exact_stationary, series_stationary


@dataclass(frozen=True)
class JudgmentMatrix:
    """Judgments of one query in signed-difference form.

    Row k of the implied matrix has +1 at ``less_idx[k]``, -1 at
    ``more_idx[k]``, and offset ``offsets[k]`` = -margin, so the hinged
    residual (pi[less] - pi[more] - margin)_+ is exactly the row of
    (A pi + b)_+. Offsets therefore lie in (-1, 0).
    """

    less_idx: np.ndarray
    more_idx: np.ndarray
    offsets: np.ndarray
    p: int

    @property
    def r(self) -> int:
        return len(self.offsets)

    def residuals(self, pi: np.ndarray) -> np.ndarray:
        """(A pi + b)_+ for a score vector pi."""
        if self.r == 0:
            return np.zeros(0)
        return np.maximum(pi[self.less_idx] - pi[self.more_idx] + self.offsets, 0.0)

    def transpose_apply(self, u: np.ndarray) -> np.ndarray:
        """A^T u: +u at the less-relevant node, -u at the more-relevant one."""
        out = np.zeros(self.p)
        if self.r:
            np.add.at(out, self.less_idx, u)
            np.subtract.at(out, self.more_idx, u)
        return out


def build_judgment_matrix(g: QueryGraph) -> JudgmentMatrix:
    """Convert a query's judgments to signed-difference rows."""
    less = np.array([j.less_relevant for j in g.judgments], dtype=np.int64)
    more = np.array([j.more_relevant for j in g.judgments], dtype=np.int64)
    offs = np.array([-j.margin for j in g.judgments], dtype=float)
    for a in (less, more, offs):
        a.flags.writeable = False
    return JudgmentMatrix(less_idx=less, more_idx=more, offsets=offs, p=g.p)


# Graphs are immutable, so the per-graph judgment matrix is cached (keyed
# by object identity; graphs do not define __eq__/__hash__).
_judgment_matrix = lru_cache(maxsize=512)(build_judgment_matrix)


@dataclass(frozen=True)
class LossValue:
    """A loss value with its guaranteed accuracy (0 for exact)."""

    value: float
    accuracy: float


@dataclass(frozen=True)
class GradEstimate:
    """A gradient estimate with its guaranteed max-norm accuracy (0 for exact)."""

    vector: np.ndarray
    accuracy: float


def value_steps(alpha: float, r: int, delta1: float) -> int:
    """Series depth guaranteeing loss accuracy delta1 for <= r judgment rows.

    N = ceil(ln(8 r / delta1) / alpha) - 1, clamped at 0.
    """
    if delta1 <= 0:
        raise ValueError("delta1 must be positive")
    if r < 1:
        raise ValueError("r must be at least 1")
    return max(0, math.ceil(math.log(8.0 * r / delta1) / alpha) - 1)


def gradient_steps(alpha: float, r: int, delta2: float, deriv_bound: float) -> tuple[int, int]:
    """Series depths (N1, N2) guaranteeing gradient accuracy delta2.

    N1 = ceil(ln(24 B r / (alpha delta2)) / alpha) - 1 for the
    stationary pass, N2 = ceil(ln(8 B r / (alpha delta2)) / alpha) - 1
    for the Jacobian pass, where B is the seed-derivative bound. Both
    clamped at 0; N1 >= N2 always.
    """
    if delta2 <= 0:
        raise ValueError("delta2 must be positive")
    if r < 1:
        raise ValueError("r must be at least 1")
    if deriv_bound <= 0:
        raise ValueError("deriv_bound must be positive")
    n1 = max(0, math.ceil(math.log(24.0 * deriv_bound * r / (alpha * delta2)) / alpha) - 1)
    n2 = max(0, math.ceil(math.log(8.0 * deriv_bound * r / (alpha * delta2)) / alpha) - 1)
    return n1, n2


def _query_loss(g: QueryGraph, pi: np.ndarray) -> float:
    return float(np.sum(_judgment_matrix(g).residuals(pi) ** 2))


def loss_exact(dataset: Dataset, phi: np.ndarray, dense_cap: int = DENSE_CAP) -> LossValue:
    """Dataset loss from dense stationary solves (small-graph oracle)."""
    total = 0.0
    for g in dataset.queries:
        tm = transition_model(g, phi, dataset.alpha)
        total += _query_loss(g, exact_stationary(tm, dense_cap))
    return LossValue(value=total / len(dataset.queries), accuracy=0.0)


def loss_at_depth(
    dataset: Dataset, phi: np.ndarray, N: int, counter: MatvecCounter | None = None
) -> float:
    """Dataset loss with every query's stationary vector at series depth N."""
    total = 0.0
    for g in dataset.queries:
        tm = transition_model(g, phi, dataset.alpha)
        total += _query_loss(g, series_stationary(tm, N, counter))
    return total / len(dataset.queries)


def loss_inexact(
    dataset: Dataset, phi: np.ndarray, delta1: float, counter: MatvecCounter | None = None
) -> LossValue:
    """Dataset loss guaranteed within delta1 of the exact value."""
    if delta1 <= 0:
        raise ValueError("delta1 must be positive")
    r = dataset.r
    if r == 0:
        return LossValue(value=0.0, accuracy=delta1)
    N = value_steps(dataset.alpha, r, delta1)
    return LossValue(value=loss_at_depth(dataset, phi, N, counter), accuracy=delta1)


def grad_exact(dataset: Dataset, phi: np.ndarray, dense_cap: int = DENSE_CAP) -> GradEstimate:
    """Dataset loss gradient from dense solves (small-graph oracle).

    2/|Q| * sum_q J_q^T A_q^T (A_q pi_q + b_q)_+ with exact stationary
    vectors and Jacobians.
    """
    m = dataset.m1 + dataset.m2
    acc = np.zeros(m)
    for g in dataset.queries:
        tm = transition_model(g, phi, dataset.alpha)
        pi = exact_stationary(tm, dense_cap)
        jm = _judgment_matrix(g)
        res = jm.residuals(pi)
        if res.size == 0 or not np.any(res):
            continue
        jac = exact_derivative(tm, g, phi, dense_cap)
        acc += jac.T @ jm.transpose_apply(res)
    return GradEstimate(vector=2.0 / len(dataset.queries) * acc, accuracy=0.0)


def grad_inexact(
    dataset: Dataset,
    phi: np.ndarray,
    delta2: float,
    deriv_bound: float,
    counter: MatvecCounter | None = None,
) -> GradEstimate:
    """Dataset loss gradient guaranteed within delta2 in max-norm.

    One stationary pass at depth N1 per query feeds both the residuals
    and the Jacobian recursion (depth N2).
    """
    if delta2 <= 0:
        raise ValueError("delta2 must be positive")
    m = dataset.m1 + dataset.m2
    r = dataset.r
    if r == 0:
        return GradEstimate(vector=np.zeros(m), accuracy=delta2)
    N1, N2 = gradient_steps(dataset.alpha, r, delta2, float(deriv_bound))
    acc = np.zeros(m)
    for g in dataset.queries:
        tm = transition_model(g, phi, dataset.alpha)
        pi = series_stationary(tm, N1, counter)
        jm = _judgment_matrix(g)
        res = jm.residuals(pi)
        if res.size == 0 or not np.any(res):
            continue
        jac = series_derivative(tm, g, phi, N1, N2, counter=counter, pi_approx=pi)
        acc += jac.T @ jm.transpose_apply(res)
    return GradEstimate(vector=2.0 / len(dataset.queries) * acc, accuracy=delta2)
