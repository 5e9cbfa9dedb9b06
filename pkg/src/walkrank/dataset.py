"""Dataset schema, JSON round-trip, and the synthetic-instance generator.

On disk a dataset is a single JSON object::

    {
      "m1": 2, "m2": 3, "alpha": 0.15,
      "queries": [
        {
          "id": "q0",
          "nodes": [{"features": [0.3, 0.8]}, ...],
          "seed": [0, 4],
          "edges": [{"from": 0, "to": 1, "features": [0.1, 0.5, 0.9]}, ...],
          "judgments": [{"more": 3, "less": 0, "margin": 0.01}, ...],
          "split": "train"
        }, ...
      ]
    }

All features are non-negative; margins lie in (0, 1); alpha in (0, 1).
Loading validates every graph invariant and reports the offending
query/node/edge on failure.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from walkrank.graphs import FeasibleBall, JudgmentPair, QueryGraph, validate_feasibility


class DatasetError(ValueError):
    """Raised for malformed or invariant-violating dataset files."""


@dataclass
class Dataset:
    """A collection of query graphs sharing feature dimensions and damping."""

    m1: int
    m2: int
    alpha: float
    queries: list

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DatasetError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.queries:
            raise DatasetError("dataset has no queries")
        for g in self.queries:
            if g.m1 != self.m1 or g.m2 != self.m2:
                raise DatasetError(
                    f"query {g.query_id!r}: feature dims ({g.m1}, {g.m2}) "
                    f"differ from dataset ({self.m1}, {self.m2})"
                )

    @property
    def m(self) -> int:
        return self.m1 + self.m2

    @property
    def r(self) -> int:
        """Largest judgment-row count over the queries."""
        return max(g.r for g in self.queries)

    def subset(self, split: str) -> "Dataset":
        picked = [g for g in self.queries if g.split == split]
        if not picked:
            raise DatasetError(f"no queries with split {split!r}")
        return Dataset(m1=self.m1, m2=self.m2, alpha=self.alpha, queries=picked)

    def default_ball(self, radius: float = 0.99) -> FeasibleBall:
        """Ball around the all-ones weight vector (the untrained model)."""
        return FeasibleBall(center=np.ones(self.m), radius=radius)


def _require(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise DatasetError(f"{where}: missing field {key!r}")
    val = obj[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind):
        raise DatasetError(f"{where}: field {key!r} has wrong type {type(val).__name__}")
    return val


def _feature_list(raw, length, where):
    if not isinstance(raw, list) or len(raw) != length:
        raise DatasetError(f"{where}: features must be a list of length {length}")
    out = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise DatasetError(f"{where}: non-numeric feature value {v!r}")
        if v < 0:
            raise DatasetError(f"{where}: negative feature value {v}")
        out.append(float(v))
    return out


def _parse_query(raw, m1, m2, index) -> QueryGraph:
    where = f"query #{index}"
    qid = _require(raw, "id", str, where)
    where = f"query {qid!r}"
    nodes = _require(raw, "nodes", list, where)
    feats = np.array(
        [_feature_list(_require(n, "features", list, f"{where} node {i}"), m1, f"{where} node {i}")
         for i, n in enumerate(nodes)],
        dtype=float,
    ).reshape(len(nodes), m1)
    seed = _require(raw, "seed", list, where)
    edges = raw.get("edges", [])
    if not isinstance(edges, list):
        raise DatasetError(f"{where}: edges must be a list")
    src, dst, efeat = [], [], []
    for k, e in enumerate(edges):
        ewhere = f"{where} edge #{k}"
        src.append(_require(e, "from", int, ewhere))
        dst.append(_require(e, "to", int, ewhere))
        efeat.append(_feature_list(_require(e, "features", list, ewhere), m2, ewhere))
    judgments = []
    for k, j in enumerate(raw.get("judgments", [])):
        jwhere = f"{where} judgment #{k}"
        try:
            judgments.append(
                JudgmentPair(
                    more_relevant=_require(j, "more", int, jwhere),
                    less_relevant=_require(j, "less", int, jwhere),
                    margin=_require(j, "margin", float, jwhere),
                )
            )
        except ValueError as exc:
            raise DatasetError(f"{jwhere}: {exc}") from exc
    split = raw.get("split", "train")
    if split not in ("train", "test"):
        raise DatasetError(f"{where}: split must be 'train' or 'test', got {split!r}")
    try:
        return QueryGraph(
            query_id=qid,
            node_features=feats,
            seed=seed,
            edge_src=src,
            edge_dst=dst,
            edge_features=np.array(efeat, dtype=float).reshape(len(src), m2),
            judgments=judgments,
            split=split,
        )
    except ValueError as exc:
        raise DatasetError(str(exc)) from exc


def load_dataset(path) -> Dataset:
    """Load and fully validate a dataset JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: not valid JSON ({exc})") from exc
    m1 = _require(raw, "m1", int, str(path))
    m2 = _require(raw, "m2", int, str(path))
    alpha = _require(raw, "alpha", float, str(path))
    if m1 < 1 or m2 < 0:
        raise DatasetError(f"{path}: feature dimensions must be positive")
    queries_raw = _require(raw, "queries", list, str(path))
    queries = [_parse_query(q, m1, m2, i) for i, q in enumerate(queries_raw)]
    ids = [g.query_id for g in queries]
    if len(set(ids)) != len(ids):
        raise DatasetError(f"{path}: duplicate query ids")
    return Dataset(m1=m1, m2=m2, alpha=alpha, queries=queries)


def dataset_to_dict(dataset: Dataset) -> dict:
    """Plain-JSON form of a dataset (canonical field order)."""
    queries = []
    for g in dataset.queries:
        queries.append(
            {
                "id": g.query_id,
                "nodes": [{"features": list(row)} for row in g.node_features.tolist()],
                "seed": g.seed.tolist(),
                "edges": [
                    {"from": int(s), "to": int(d), "features": list(f)}
                    for s, d, f in zip(g.edge_src.tolist(), g.edge_dst.tolist(), g.edge_features.tolist())
                ],
                "judgments": [
                    {"more": j.more_relevant, "less": j.less_relevant, "margin": j.margin}
                    for j in g.judgments
                ],
                "split": g.split,
            }
        )
    return {"m1": dataset.m1, "m2": dataset.m2, "alpha": dataset.alpha, "queries": queries}


def write_atomic(path, text: str):
    """Write text to path via a temp file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_dataset(dataset: Dataset, path):
    """Serialize a dataset to JSON (atomic; deterministic bytes)."""
    write_atomic(path, json.dumps(dataset_to_dict(dataset), indent=2) + "\n")


def gen_synthetic(
    num_queries: int,
    p: int,
    s: int,
    m1: int,
    m2: int,
    judgment_count: int,
    seed: int,
    alpha: float = 0.15,
    structure: str = "random",
) -> Dataset:
    """Random dataset: p nodes per query, outdegrees <= s, features in (0, 1].

    Every node keeps strictly positive features, so the all-ones-center
    ball at radius 0.99 is always feasible (the L1 norm of any feature
    sum dominates its L2 norm). Margins scale like 1/p so that a decent
    share of judgments is active at the untrained weights. The first
    half of the queries (rounded up) is tagged train, the rest test.
    Deterministic in the seed.

    structure="random" draws each node's outdegree uniformly from
    0..s; structure="cycle" links a random node permutation into one
    directed cycle (outdegree exactly 1), giving the slowly-mixing
    path-shaped graphs typical of session logs.
    """
    if p < 1 or s < 0 or num_queries < 1:
        raise ValueError("need p >= 1, s >= 0, num_queries >= 1")
    if structure not in ("random", "cycle"):
        raise ValueError(f"unknown structure {structure!r}")
    if judgment_count > p * (p - 1) // 2:
        raise ValueError(
            f"judgment_count {judgment_count} exceeds available pairs {p * (p - 1) // 2}"
        )
    rng = np.random.default_rng(seed)
    queries = []
    n_train = (num_queries + 1) // 2
    for q in range(num_queries):
        node_features = 1.0 - rng.random((p, m1))
        n_seed = int(rng.integers(1, max(2, p // 3 + 1)))
        seed_nodes = np.sort(rng.choice(p, size=min(n_seed, p), replace=False))
        src, dst = [], []
        if p > 1 and structure == "cycle":
            order = rng.permutation(p)
            src = [int(v) for v in order]
            dst = [int(v) for v in np.roll(order, -1)]
        elif p > 1:
            for i in range(p):
                degree = int(rng.integers(0, s + 1))
                if degree == 0:
                    continue
                pool = np.delete(np.arange(p), i)
                targets = rng.choice(pool, size=min(degree, p - 1), replace=False)
                for t in np.sort(targets):
                    src.append(i)
                    dst.append(int(t))
        edge_features = 1.0 - rng.random((len(src), m2))
        pairs = []
        if judgment_count and p > 1:
            chosen = rng.choice(p * (p - 1) // 2, size=judgment_count, replace=False)
            all_pairs = [(a, b) for a in range(p) for b in range(a + 1, p)]
            for idx in np.sort(chosen):
                a, b = all_pairs[int(idx)]
                if rng.random() < 0.5:
                    a, b = b, a
                margin = (0.05 + 0.45 * rng.random()) / p
                pairs.append(JudgmentPair(more_relevant=a, less_relevant=b, margin=float(margin)))
        queries.append(
            QueryGraph(
                query_id=f"q{q}",
                node_features=node_features,
                seed=seed_nodes,
                edge_src=src,
                edge_dst=dst,
                edge_features=edge_features,
                judgments=pairs,
                split="train" if q < n_train else "test",
            )
        )
    dataset = Dataset(m1=m1, m2=m2, alpha=alpha, queries=queries)
    report = validate_feasibility(dataset.queries, dataset.default_ball())
    if not report.ok:
        raise RuntimeError(f"generated dataset is infeasible: {report.failures[:3]}")
    return dataset
