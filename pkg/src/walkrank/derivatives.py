"""Jacobians of the walk probabilities and of the stationary distribution.

The stationary vector solves pi = alpha pi0(phi) + (1-alpha) P^T(phi) pi,
so its (p, m) Jacobian J satisfies J = S + (1-alpha) P^T J where the
seed matrix S collects the direct dependence of the restart and
transition probabilities on phi. J is approximated by the same
truncated-series scheme used for the stationary vector; a dense solve
serves as the small-graph oracle. All probability Jacobians have
columns summing to zero (total mass is constant), and the recursion
iterates never exceed a uniform 1-norm bound computable from the
feasible ball alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from walkrank import _kernels
from walkrank.graphs import Ball, QueryGraph, TransitionModel, split_params
from walkrank.stationary import DENSE_CAP, MatvecCounter, exact_stationary, series_stationary


def restart_jacobian(g: QueryGraph, phi: np.ndarray) -> np.ndarray:
    """(p, m) Jacobian of the restart distribution.

    Quotient rule on the seed-weight ratios: nonzero only in seed rows
    and the node-feature columns. Every column sums to zero.
    """
    phi1, _ = split_params(phi, g.m1)
    weights = g.node_features[g.seed] @ phi1
    total = float(weights.sum())
    if total <= 0:
        raise ValueError(f"query {g.query_id!r}: restart denominator {total} is not positive")
    jac = np.zeros((g.p, g.m1 + g.m2))
    jac[g.seed, : g.m1] = g.node_features[g.seed] / total - np.outer(
        weights / total**2, g.seed_feature_sum
    )
    return jac


def transition_jacobian_row(g: QueryGraph, phi: np.ndarray, i: int) -> np.ndarray:
    """(p, m) Jacobian of row i of the transition matrix.

    Row i must be non-dangling (dangling rows equal the restart
    distribution, whose Jacobian is restart_jacobian). Nonzeros are
    confined to the target rows of i's outgoing edges and the
    edge-feature columns; every column sums to zero.
    """
    lo, hi = g.out_indptr[i], g.out_indptr[i + 1]
    if lo == hi:
        raise ValueError(f"query {g.query_id!r}: node {i} is dangling")
    _, phi2 = split_params(phi, g.m1)
    feats = g.edge_features[lo:hi]
    w = feats @ phi2
    total = float(w.sum())
    if total <= 0:
        raise ValueError(f"query {g.query_id!r} node {i}: transition denominator is not positive")
    jac = np.zeros((g.p, g.m1 + g.m2))
    block = feats / total - np.outer(w / total**2, g.out_feature_sums[i])
    np.add.at(jac[:, g.m1 :], g.edge_dst[lo:hi], block)
    return jac


def derivative_seed(
    g: QueryGraph,
    phi: np.ndarray,
    alpha: float,
    pi_approx: np.ndarray,
    tm: TransitionModel | None = None,
) -> np.ndarray:
    """Seed matrix of the Jacobian recursion at a (possibly approximate) pi.

    alpha * d(pi0)/dphi plus (1-alpha) * sum_i d(row_i of P)/dphi
    weighted by pi_approx[i]. Dangling rows behave as the restart
    distribution, so their contribution reuses the restart Jacobian
    weighted by the dangling mass of pi_approx. Passing the transition
    model built at the same phi reuses its cached edge weights.
    """
    j0 = restart_jacobian(g, phi)
    dangling_mass = float(pi_approx[g.dangling].sum()) if g.dangling.size else 0.0
    seed_mat = (alpha + (1.0 - alpha) * dangling_mass) * j0
    if g.n_edges:
        if tm is not None:
            w, row_sums = tm.edge_weights, tm.row_weight_sums
        else:
            _, phi2 = split_params(phi, g.m1)
            w = g.edge_features @ phi2
            row_sums = np.bincount(g.edge_src, weights=w, minlength=g.p)
        s_src = row_sums[g.edge_src]
        if np.any(s_src <= 0):
            bad = int(g.edge_src[np.argmax(s_src <= 0)])
            raise ValueError(f"query {g.query_id!r} node {bad}: transition denominator is not positive")
        per_edge = g.edge_features / s_src[:, None] - (w / s_src**2)[:, None] * g.out_feature_sums[g.edge_src]
        per_edge *= ((1.0 - alpha) * pi_approx[g.edge_src])[:, None]
        np.add.at(seed_mat[:, g.m1 :], g.edge_dst, per_edge)
    return seed_mat


def series_derivative(
    tm: TransitionModel,
    g: QueryGraph,
    phi: np.ndarray,
    N1: int,
    N2: int,
    counter: MatvecCounter | None = None,
    pi_approx: np.ndarray | None = None,
    check_bound: float | None = None,
) -> np.ndarray:
    """Truncated-series approximation of the stationary Jacobian.

    Seeds the recursion from the depth-N1 stationary approximation
    (or a supplied one), iterates K -> P^T K, and returns
    sum_{k=0..N2} (1-alpha)^k K_k / (1 - (1-alpha)^(N2+1)).
    With ``check_bound`` set, asserts that every iterate's 1-norm stays
    within the bound (debug mode; same arithmetic, slower loop).
    """
    if N1 < 0 or N2 < 0:
        raise ValueError("N1 and N2 must be non-negative")
    if pi_approx is None:
        pi_approx = series_stationary(tm, N1, counter)
    seed_mat = derivative_seed(g, phi, tm.alpha, pi_approx, tm=tm)
    m = seed_mat.shape[1]
    if check_bound is None:
        acc = _kernels.series_sum_mat(
            tm.t_indptr, tm.t_src, tm.t_data, tm.dangling, tm.pi0, tm.alpha, N2, seed_mat
        )
    else:
        tol = check_bound * (1.0 + 1e-9) + 1e-12
        cur = seed_mat.copy()
        nxt = np.empty_like(cur)
        acc = seed_mat.copy()
        a = 1.0 - tm.alpha
        if np.abs(cur).sum(axis=0).max() > tol:
            raise AssertionError("derivative seed exceeds its 1-norm bound")
        for _ in range(N2):
            _kernels.pt_apply_mat(tm.t_indptr, tm.t_src, tm.t_data, tm.dangling, tm.pi0, cur, nxt)
            if np.abs(nxt).sum(axis=0).max() > tol:
                raise AssertionError("derivative iterate exceeds its 1-norm bound")
            acc += a * nxt
            cur, nxt = nxt, cur
            a *= 1.0 - tm.alpha
    if counter is not None:
        counter.add(N2 * m)
    return acc / (1.0 - (1.0 - tm.alpha) ** (N2 + 1))


def exact_derivative(
    tm: TransitionModel, g: QueryGraph, phi: np.ndarray, dense_cap: int = DENSE_CAP
) -> np.ndarray:
    """Dense solve of the Jacobian equation; small-graph oracle."""
    p = tm.p
    if p > dense_cap:
        raise ValueError(f"graph with {p} nodes exceeds dense cap {dense_cap}")
    pi = exact_stationary(tm, dense_cap)
    seed_mat = derivative_seed(g, phi, tm.alpha, pi, tm=tm)
    A = np.eye(p) - (1.0 - tm.alpha) * tm.dense_transition().T
    return np.linalg.solve(A, seed_mat)


@dataclass(frozen=True)
class DerivativeSeedBound:
    """Uniform 1-norm bound on the Jacobian recursion seed over a ball.

    ``value`` bounds the seed matrix (and every recursion iterate) in
    1-norm for any weight vector in the ball; the series output is then
    bounded by value / alpha. The dataset-level value is the max of the
    per-query values.
    """

    value: float
    per_query: dict

    def __float__(self):
        return self.value


def seed_derivative_bound(graphs, ball: Ball, alpha: float) -> DerivativeSeedBound:
    """Closed-form bound from ball geometry and per-graph feature sums.

    For a feature-sum vector v and matching center block c, the weight
    <phi, v> ranges over [<c, v> - R ||v||, <c, v> + R ||v||] on the
    ball, which bounds each probability Jacobian's 1-norm by
    2 (max_j v_j) (<c, v> + R ||v||) / (<c, v> - R ||v||)^2. Seed-set
    and per-node edge terms combine with weights alpha and (1-alpha);
    dangling rows contribute the seed-set term again since their
    transition row is the restart distribution.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    per_query = {}
    for g in graphs:
        c1 = ball.center[: g.m1]
        c2 = ball.center[g.m1 :]

        def column_bound(vec, center_block, label):
            lo = float(center_block @ vec) - ball.radius * float(np.linalg.norm(vec))
            if lo <= 0:
                raise ValueError(f"infeasible ball: {label} denominator can reach {lo:.6g}")
            hi = float(center_block @ vec) + ball.radius * float(np.linalg.norm(vec))
            return 2.0 * hi / lo**2 * float(vec.max())

        restart_term = column_bound(g.seed_feature_sum, c1, f"query {g.query_id!r} seed set")
        edge_terms = 0.0
        out_degree = np.diff(g.out_indptr)
        for i in np.flatnonzero(out_degree > 0):
            edge_terms += column_bound(
                g.out_feature_sums[i], c2, f"query {g.query_id!r} node {int(i)}"
            )
        edge_terms += g.dangling.size * restart_term
        per_query[g.query_id] = alpha * restart_term + (1.0 - alpha) * edge_terms
    if not per_query:
        raise ValueError("need at least one graph")
    return DerivativeSeedBound(value=max(per_query.values()), per_query=per_query)
