"""Experiment runner: training protocols, trace/summary emission.

Traces are CSV with a fixed header per method and numeric fields
printed with 17 significant digits, so re-parsing is bit-faithful and
repeat runs with the same seed produce byte-identical files. Wall time
is nondeterministic and therefore lives in the JSON summary only.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from walkrank.dataset import Dataset, DatasetError, write_atomic
from walkrank.graphs import FeasibleBall, transition_model
from walkrank.oracle import _judgment_matrix, loss_exact, loss_inexact
from walkrank.optimize import AgmConfig, GbpConfig, GfnConfig, TrainTrace, train_agm, train_gbp, train_gfn
from walkrank.stationary import DENSE_CAP, exact_stationary, power_stationary, series_stationary

METHODS = ("gfn", "agm", "gbp")


@dataclass
class RunConfig:
    """Flat bundle of the training CLI's knobs."""

    method: str
    seed: int
    out_dir: str
    radius: float = 0.99
    epsilon: float = 1e-6
    L: float = 1e-4
    L0: float = 1e-4
    max_iters_override: int | None = None
    max_outer_iters: int = 100
    step_size: float = 50.0
    N1: int = 100
    N2: int = 100
    stop_tol: float = 1e-5
    gbp_max_iters: int = 1000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")


def format_number(v) -> str:
    """17 significant digits for floats; plain decimal for integers."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_trace_csv(trace: TrainTrace, path):
    lines = [",".join(trace.columns)]
    for row in trace.rows:
        lines.append(",".join(format_number(v) for v in row))
    write_atomic(path, "\n".join(lines) + "\n")


def evaluate_loss(dataset: Dataset, phi: np.ndarray, dense_cap: int = DENSE_CAP) -> float:
    """Exact loss when all graphs fit the dense cap, else a 1e-9-accurate one."""
    if max(g.p for g in dataset.queries) <= dense_cap:
        return loss_exact(dataset, phi, dense_cap).value
    return loss_inexact(dataset, phi, 1e-9).value


def run_experiment(dataset: Dataset, cfg: RunConfig) -> dict:
    """Train on the train split, evaluate train/test, emit trace + summary.

    Writes ``<method>_trace.csv`` and ``<method>_summary.json`` into
    cfg.out_dir and returns the summary dict.
    """
    train = dataset.subset("train")
    try:
        test = dataset.subset("test")
    except DatasetError:
        test = None
    ball = FeasibleBall(center=np.ones(dataset.m), radius=cfg.radius)
    phi0 = ball.center.copy()

    if cfg.method == "gfn":
        result = train_gfn(
            train,
            GfnConfig(
                L=cfg.L,
                epsilon=cfg.epsilon,
                ball=ball,
                phi0=phi0,
                seed=cfg.seed,
                max_iters_override=cfg.max_iters_override,
            ),
        )
    elif cfg.method == "agm":
        result = train_agm(
            train,
            AgmConfig(
                L0=cfg.L0,
                epsilon=cfg.epsilon,
                ball=ball,
                phi0=phi0,
                max_outer_iters=cfg.max_outer_iters,
            ),
        )
    else:
        result = train_gbp(
            train,
            GbpConfig(
                ball=ball,
                phi0=phi0,
                step_size=cfg.step_size,
                N1=cfg.N1,
                N2=cfg.N2,
                stop_tol=cfg.stop_tol,
                max_iters=cfg.gbp_max_iters,
            ),
        )

    summary = {
        "method": cfg.method,
        "seed": cfg.seed,
        "iterations": result.extras.get("iterations"),
        "converged": bool(result.converged),
        "untrained_train_loss": evaluate_loss(train, phi0),
        "final_train_loss": evaluate_loss(train, result.phi),
        "final_test_loss": evaluate_loss(test, result.phi) if test else None,
        "untrained_test_loss": evaluate_loss(test, phi0) if test else None,
        "matvecs": result.matvecs,
        "wall_time_s": result.elapsed,
        "phi": [float(v) for v in result.phi],
        "settings": {
            k: v
            for k, v in result.extras.items()
            if k not in ("method", "iterations")
        },
    }
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_trace_csv(result.trace, os.path.join(cfg.out_dir, f"{cfg.method}_trace.csv"))
    write_atomic(
        os.path.join(cfg.out_dir, f"{cfg.method}_summary.json"),
        json.dumps(summary, indent=2) + "\n",
    )
    return summary


COMPARE_COLUMNS = (
    "N",
    "series_err",
    "power_err",
    "series_loss",
    "power_loss",
    "series_bound",
    "power_bound",
)


def compare_stationary(
    dataset: Dataset, phi: np.ndarray, max_N: int, out_path=None, dense_cap: int = DENSE_CAP
) -> TrainTrace:
    """Convergence comparison of the two stationary approximations.

    For every depth N in [0, max_N]: the largest per-query 1-norm error
    of each method against the dense solve, the dataset loss evaluated
    with each method's depth-N vectors, and the analytic error bounds
    2 (1-alpha)^(N+1) (series) and 2 (1-alpha)^N (power).
    """
    models = []
    for g in dataset.queries:
        tm = transition_model(g, phi, dataset.alpha)
        models.append((g, tm, exact_stationary(tm, dense_cap)))
    alpha = dataset.alpha
    table = TrainTrace(COMPARE_COLUMNS)
    nq = len(dataset.queries)
    for N in range(max_N + 1):
        series_err = power_err = 0.0
        series_loss = power_loss = 0.0
        for g, tm, exact in models:
            jm = _judgment_matrix(g)
            s = series_stationary(tm, N)
            w = power_stationary(tm, N)
            series_err = max(series_err, float(np.abs(s - exact).sum()))
            power_err = max(power_err, float(np.abs(w - exact).sum()))
            series_loss += float(np.sum(jm.residuals(s) ** 2))
            power_loss += float(np.sum(jm.residuals(w) ** 2))
        table.append(
            N,
            series_err,
            power_err,
            series_loss / nq,
            power_loss / nq,
            2.0 * (1.0 - alpha) ** (N + 1),
            2.0 * (1.0 - alpha) ** N,
        )
    if out_path is not None:
        write_trace_csv(table, out_path)
    return table


def rank_table(dataset: Dataset, phi: np.ndarray, method: str, N: int, dense_cap: int = DENSE_CAP):
    """Per-node ranking scores; rows (query_id, node, score)."""
    rows = []
    for g in dataset.queries:
        tm = transition_model(g, phi, dataset.alpha)
        if method == "exact":
            pi = exact_stationary(tm, dense_cap)
        elif method == "power":
            pi = power_stationary(tm, N)
        elif method == "series":
            pi = series_stationary(tm, N)
        else:
            raise ValueError(f"unknown ranking method {method!r}")
        for node in range(g.p):
            rows.append((g.query_id, node, float(pi[node])))
    return rows


def write_rank_csv(rows, path):
    lines = ["query_id,node,score"]
    for qid, node, score in rows:
        lines.append(f"{qid},{node},{format_number(score)}")
    write_atomic(path, "\n".join(lines) + "\n")
