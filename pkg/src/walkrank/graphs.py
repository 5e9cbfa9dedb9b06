"""Per-query feature graphs and the weight-to-probability mappings.

A query graph has ``p`` nodes with non-negative feature vectors of
length ``m1``, directed edges with non-negative feature vectors of
length ``m2``, a seed set eligible for restarts, and a list of pairwise
relevance judgments. Given a weight vector ``phi = (phi1, phi2)`` the
graph defines a restart distribution (feature-weighted over the seed
set) and a row-stochastic transition matrix (feature-weighted over
outgoing edges); rows of dangling nodes equal the restart distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class JudgmentPair:
    """One assessor judgment: ``more_relevant`` should outrank ``less_relevant``.

    The pair contributes a squared-hinge penalty once the score of the
    less relevant node exceeds the score of the more relevant one by
    more than ``margin``.
    """

    more_relevant: int
    less_relevant: int
    margin: float

    def __post_init__(self):
        if self.more_relevant == self.less_relevant:
            raise ValueError("judgment compares a node with itself")
        if not 0.0 < self.margin < 1.0:
            raise ValueError(f"margin must lie in (0, 1), got {self.margin}")


@dataclass(frozen=True)
class Ball:
    """Euclidean ball {x : ||x - center||_2 <= radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _readonly(np.asarray(self.center, dtype=float)))
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.center)) <= self.radius + tol


@dataclass(frozen=True)
class FeasibleBall(Ball):
    """A ball of weight vectors lying strictly inside the positive orthant.

    Enforces ``center_j - radius > 0`` for every component, which keeps
    all node/edge weights (inner products with non-negative feature
    vectors) well defined throughout the ball.
    """

    def __post_init__(self):
        super().__post_init__()
        if not np.all(self.center - self.radius > 0):
            raise ValueError("feasible ball must lie strictly inside the positive orthant")


class QueryGraph:
    """One query's node/edge feature graph with seed set and judgments.

    Immutable after construction. Edges are canonicalized to
    (src, dst)-sorted order; CSR index structures for both the forward
    and transposed adjacency are precomputed since the sparsity pattern
    does not depend on the weights.
    """

    def __init__(
        self,
        query_id: str,
        node_features: np.ndarray,
        seed: Sequence[int],
        edge_src: Sequence[int],
        edge_dst: Sequence[int],
        edge_features: np.ndarray,
        judgments: Sequence[JudgmentPair] = (),
        split: str = "train",
    ):
        self.query_id = str(query_id)
        self.split = str(split)

        nf = np.asarray(node_features, dtype=float)
        if nf.ndim != 2:
            raise ValueError(f"query {query_id!r}: node_features must be 2-d (p, m1)")
        self.p, self.m1 = nf.shape
        if self.p < 1:
            raise ValueError(f"query {query_id!r}: needs at least one node")
        if np.any(nf < 0) or not np.all(np.isfinite(nf)):
            bad = int(np.argwhere((nf < 0) | ~np.isfinite(nf))[0][0])
            raise ValueError(f"query {query_id!r} node {bad}: negative or non-finite feature")

        seed = np.asarray(seed, dtype=np.int64)
        if seed.size < 1:
            raise ValueError(f"query {query_id!r}: seed set is empty")
        if np.unique(seed).size != seed.size:
            raise ValueError(f"query {query_id!r}: duplicate seed index")
        if np.any(seed < 0) or np.any(seed >= self.p):
            raise ValueError(f"query {query_id!r}: seed index out of range [0, {self.p})")
        seed = np.sort(seed)

        src = np.asarray(edge_src, dtype=np.int64)
        dst = np.asarray(edge_dst, dtype=np.int64)
        ef = np.asarray(edge_features, dtype=float)
        if ef.ndim != 2 or ef.shape[0] != len(src):
            raise ValueError(f"query {query_id!r}: edge_features must be 2-d (n_edges, m2)")
        if src.shape != dst.shape:
            raise ValueError(f"query {query_id!r}: edge endpoint arrays differ in length")
        if len(src) and (np.any(src < 0) or np.any(src >= self.p) or np.any(dst < 0) or np.any(dst >= self.p)):
            raise ValueError(f"query {query_id!r}: edge endpoint out of range")
        self.m2 = ef.shape[1]
        if len(src) and (np.any(ef < 0) or not np.all(np.isfinite(ef))):
            bad = int(np.argwhere((ef < 0) | ~np.isfinite(ef))[0][0])
            raise ValueError(
                f"query {query_id!r} edge {int(src[bad])}->{int(dst[bad])}: negative or non-finite feature"
            )

        order = np.lexsort((dst, src))
        self.edge_src = _readonly(src[order])
        self.edge_dst = _readonly(dst[order])
        self.edge_features = _readonly(ef[order])
        self.n_edges = len(self.edge_src)

        self.judgments = tuple(judgments)
        for j in self.judgments:
            if not (0 <= j.more_relevant < self.p and 0 <= j.less_relevant < self.p):
                raise ValueError(f"query {query_id!r}: judgment node index out of range")

        # CSR over sources (forward) and over destinations (transposed).
        self.out_indptr = _readonly(np.concatenate(
            ([0], np.cumsum(np.bincount(self.edge_src, minlength=self.p)))
        ).astype(np.int64))
        t_order = np.lexsort((self.edge_src, self.edge_dst))
        self.t_indptr = _readonly(np.concatenate(
            ([0], np.cumsum(np.bincount(self.edge_dst, minlength=self.p)))
        ).astype(np.int64))
        self.t_src = _readonly(self.edge_src[t_order])
        self.t_edge_order = _readonly(t_order.astype(np.int64))

        out_degree = np.diff(self.out_indptr)
        self.dangling = _readonly(np.flatnonzero(out_degree == 0).astype(np.int64))

        self.node_features = _readonly(nf)
        self.seed = _readonly(seed)
        self.seed_feature_sum = _readonly(nf[seed].sum(axis=0))
        # Per-node componentwise sums of outgoing edge features (zero rows
        # for dangling nodes); these drive the feasibility checks.
        sums = np.zeros((self.p, self.m2))
        if self.n_edges:
            np.add.at(sums, self.edge_src, self.edge_features)
        self.out_feature_sums = _readonly(sums)

        if not np.any(self.seed_feature_sum > 0):
            raise ValueError(f"query {query_id!r}: seed feature sums are all zero")
        nonzero_rows = np.any(self.out_feature_sums > 0, axis=1)
        bad_rows = np.flatnonzero((out_degree > 0) & ~nonzero_rows)
        if bad_rows.size:
            raise ValueError(
                f"query {query_id!r} node {int(bad_rows[0])}: outgoing edge feature sums are all zero"
            )

    @property
    def r(self) -> int:
        """Number of judgment rows."""
        return len(self.judgments)

    def __repr__(self):
        return (
            f"QueryGraph({self.query_id!r}, p={self.p}, edges={self.n_edges}, "
            f"seeds={self.seed.size}, judgments={self.r}, split={self.split!r})"
        )


@dataclass(frozen=True)
class TransitionModel:
    """Restart distribution and sparse transition structure at a fixed phi.

    The transposed transition matrix is stored in CSR form without the
    dangling rows; kernels add ``(sum of walker mass on dangling nodes)
    * pi0`` analytically, so storage stays proportional to the number
    of edges. ``edge_weights``/``row_weight_sums`` keep the raw edge
    weights and their per-source sums (in canonical edge order) for
    reuse by the derivative computations.
    """

    alpha: float
    pi0: np.ndarray
    t_indptr: np.ndarray
    t_src: np.ndarray
    t_data: np.ndarray
    dangling: np.ndarray
    edge_weights: np.ndarray
    row_weight_sums: np.ndarray

    @property
    def p(self) -> int:
        return self.pi0.shape[0]

    def dense_transition(self) -> np.ndarray:
        """Materialize the full row-stochastic matrix P (dangling rows = pi0)."""
        p = self.p
        P = np.zeros((p, p))
        for i in range(p):
            for e in range(self.t_indptr[i], self.t_indptr[i + 1]):
                P[self.t_src[e], i] = self.t_data[e]
        P[self.dangling, :] = self.pi0
        return P


def split_params(phi: np.ndarray, m1: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a weight vector into its node and edge blocks."""
    phi = np.asarray(phi, dtype=float)
    return phi[:m1], phi[m1:]


def node_weight(phi1: np.ndarray, v: np.ndarray) -> float:
    """Weight of a node: inner product of phi1 with its feature vector."""
    phi1 = np.asarray(phi1, dtype=float)
    v = np.asarray(v, dtype=float)
    if phi1.shape != v.shape:
        raise ValueError(f"dimension mismatch: {phi1.shape} vs {v.shape}")
    return float(phi1 @ v)


def restart_distribution(g: QueryGraph, phi: np.ndarray) -> np.ndarray:
    """Feature-weighted restart distribution over the seed set.

    Entry i is the weight of seed node i over the total seed weight;
    zero off the seed set. Raises if the total is not strictly positive
    (infeasible weights or degenerate features).
    """
    phi1, _ = split_params(phi, g.m1)
    weights = g.node_features[g.seed] @ phi1
    total = float(weights.sum())
    if total <= 0:
        raise ValueError(f"query {g.query_id!r}: restart denominator {total} is not positive")
    pi0 = np.zeros(g.p)
    pi0[g.seed] = weights / total
    return pi0


def transition_model(g: QueryGraph, phi: np.ndarray, alpha: float) -> TransitionModel:
    """Build the transition structure for weights phi and damping alpha.

    Each non-dangling row i holds edge weights <phi2, E_ij> normalized
    by their row sum; dangling rows are not materialized (they act as
    the restart distribution).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    pi0 = restart_distribution(g, phi)
    _, phi2 = split_params(phi, g.m1)
    if g.n_edges:
        w = g.edge_features @ phi2
        row_sums = np.bincount(g.edge_src, weights=w, minlength=g.p)
        bad = np.flatnonzero((np.diff(g.out_indptr) > 0) & (row_sums <= 0))
        if bad.size:
            raise ValueError(
                f"query {g.query_id!r} node {int(bad[0])}: transition denominator is not positive"
            )
        probs = w / row_sums[g.edge_src]
    else:
        w = np.zeros(0)
        row_sums = np.zeros(g.p)
        probs = w
    return TransitionModel(
        alpha=float(alpha),
        pi0=_readonly(pi0),
        t_indptr=g.t_indptr,
        t_src=g.t_src,
        t_data=_readonly(probs[g.t_edge_order]),
        dangling=g.dangling,
        edge_weights=_readonly(w),
        row_weight_sums=_readonly(row_sums),
    )


@dataclass
class FeasibilityReport:
    """Outcome of checking a ball of weights against a set of graphs.

    ``min_slack`` is the smallest value of <center, v> - R ||v||_2 over
    all seed/outgoing feature-sum vectors v (positive iff every
    probability denominator stays positive on the whole ball).
    ``slack_radius`` is the margin by which the ball radius could grow
    before some denominator can reach zero.
    """

    ok: bool
    failures: list[str] = field(default_factory=list)
    min_slack: float = np.inf
    slack_radius: float = np.inf

    def __bool__(self):
        return self.ok


def validate_feasibility(graphs: Sequence[QueryGraph], ball: Ball) -> FeasibilityReport:
    """Check that all probability denominators stay positive on the ball.

    For every query the seed feature sum v must satisfy
    <center_1, v> - R ||v||_2 > 0, and likewise for every non-dangling
    node's outgoing edge feature sum against the edge block of the
    center. Failures are reported (with the offending query/node), not
    raised.
    """
    report = FeasibilityReport(ok=True)

    def check(vec: np.ndarray, center_block: np.ndarray, label: str):
        norm = float(np.linalg.norm(vec))
        slack = float(center_block @ vec) - ball.radius * norm
        if slack <= 0:
            report.ok = False
            report.failures.append(f"{label}: denominator slack {slack:.6g} <= 0")
        report.min_slack = min(report.min_slack, slack)
        if norm > 0:
            report.slack_radius = min(
                report.slack_radius, float(center_block @ vec) / norm - ball.radius
            )
        else:
            report.slack_radius = min(report.slack_radius, -ball.radius)

    for g in graphs:
        c1 = ball.center[: g.m1]
        c2 = ball.center[g.m1 :]
        check(g.seed_feature_sum, c1, f"query {g.query_id!r} seed set")
        out_degree = np.diff(g.out_indptr)
        for i in np.flatnonzero(out_degree > 0):
            check(g.out_feature_sums[i], c2, f"query {g.query_id!r} node {int(i)}")
    return report
