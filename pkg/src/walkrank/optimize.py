"""Trainers for the ranking loss and their shared primitives.

Three learners over a Euclidean ball of weights:

* ``train_gfn``: random gradient-free search. Each step perturbs along
  a uniformly random unit direction, forms the two-point estimate
  (m / mu) (f(x + mu xi) - f(x)) xi from value oracles that are only
  delta-accurate, and takes a projected step with a fixed stepsize
  1 / (8 m L). Returns the best visited point by the delta-accurate
  estimates.
* ``train_agm``: adaptive projected gradient. Doubles a local curvature
  estimate M_k until the inexact-oracle descent inequality holds, with
  the oracle accuracies tied to M_k; tracks the smallest reduced
  gradient and stops once it reaches the target.
* ``train_gbp``: fixed-step projected gradient baseline with fixed-depth
  power iterations for the stationary vector and its Jacobian. The
  original method's reference code is not published; this is a
  reconstruction from its published knobs (depths, step sizes,
  loss-decrease stopping rule).

The generic cores (``minimize_gradient_free``, ``minimize_adaptive``)
take plain callables so they can be exercised on closed-form objectives.
Trainers are single-threaded state machines that own their RNG; given
the same config, seed, and dataset they produce bit-identical traces.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from walkrank import _kernels
from walkrank.dataset import Dataset
from walkrank.derivatives import derivative_seed, seed_derivative_bound
from walkrank.graphs import Ball, transition_model, validate_feasibility
from walkrank.oracle import (
    _judgment_matrix,
    grad_inexact,
    loss_at_depth,
    loss_inexact,
    value_steps,
)
from walkrank.stationary import MatvecCounter, power_stationary


# ---------------------------------------------------------------------------
# primitives


def sample_unit_sphere(rng: np.random.Generator, m: int) -> np.ndarray:
    """Uniform point on the unit sphere in R^m (normalized Gaussian)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    while True:
        v = rng.standard_normal(m)
        norm = float(np.linalg.norm(v))
        if norm > 0:
            return v / norm


def project_ball(x: np.ndarray, ball: Ball) -> np.ndarray:
    """Euclidean projection onto the ball (identity for interior points)."""
    x = np.asarray(x, dtype=float)
    diff = x - ball.center
    norm = float(np.linalg.norm(diff))
    if norm <= ball.radius:
        return x.copy()
    return ball.center + diff * (ball.radius / norm)


def prox_step(x_bar: np.ndarray, g: np.ndarray, gamma: float, ball: Ball):
    """Projected gradient step and the matching reduced gradient.

    Returns (x_new, g_X) with x_new the projection of x_bar - gamma g
    and g_X = (x_bar - x_new) / gamma. When the raw step stays interior,
    g_X equals g exactly; a small reduced gradient certifies approximate
    stationarity on the ball.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x_new = project_ball(x_bar - gamma * np.asarray(g, dtype=float), ball)
    return x_new, (x_bar - x_new) / gamma


def gf_oracle(
    dataset: Dataset,
    phi: np.ndarray,
    mu: float,
    delta: float,
    xi: np.ndarray,
    counter: MatvecCounter | None = None,
) -> np.ndarray:
    """Two-point random-direction gradient estimate at accuracy delta.

    (m / mu) (f(phi + mu xi, delta) - f(phi, delta)) xi with both values
    from the delta-accurate loss oracle. Deterministic in its inputs.
    """
    m = len(phi)
    f0 = loss_inexact(dataset, phi, delta, counter).value
    f1 = loss_inexact(dataset, phi + mu * xi, delta, counter).value
    return (m / mu) * (f1 - f0) * xi


# ---------------------------------------------------------------------------
# traces and results


@dataclass
class TrainTrace:
    """Per-iteration records of a training run (one row per record)."""

    columns: tuple
    rows: list = field(default_factory=list)

    def append(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def __len__(self):
        return len(self.rows)


@dataclass
class TrainResult:
    """Output of a trainer: final weights, trace, and diagnostics."""

    phi: np.ndarray
    trace: TrainTrace
    converged: bool
    matvecs: int
    elapsed: float
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# random gradient-free method


GFN_COLUMNS = ("iteration", "loss_estimate", "oracle_delta", "step_size", "grad_est_norm", "matvecs")


def gfn_settings(m: int, L: float, diameter: float, epsilon: float):
    """Step budget and smoothing/accuracy levels hitting a target gap.

    M = ceil(32 m L D^2 / eps), mu = sqrt(2 eps / (L (m + 8))), and the
    largest admissible oracle error
    delta = eps^(3/2) sqrt(2) / (8 m D sqrt(L (m + 8))).
    """
    M = math.ceil(32.0 * m * L * diameter**2 / epsilon)
    mu = math.sqrt(2.0 * epsilon / (L * (m + 8)))
    delta = epsilon**1.5 * math.sqrt(2.0) / (8.0 * m * diameter * math.sqrt(L * (m + 8)))
    return M, mu, delta


def gfn_train_settings(m: int, L: float, radius: float, epsilon: float):
    """Ball-radius form of the gradient-free settings.

    M = ceil(128 m L R^2 / eps),
    delta = eps^(3/2) sqrt(2) / (16 m R sqrt(L (m + 8))),
    mu = sqrt(2 eps / (L (m + 8))), step = 1 / (8 m L).
    """
    M = math.ceil(128.0 * m * L * radius**2 / epsilon)
    delta = epsilon**1.5 * math.sqrt(2.0) / (16.0 * m * radius * math.sqrt(L * (m + 8)))
    mu = math.sqrt(2.0 * epsilon / (L * (m + 8)))
    step = 1.0 / (8.0 * m * L)
    return M, mu, delta, step


def gfn_error_bound(m: int, L: float, diameter: float, mu: float, delta: float, M: int) -> float:
    """Expected-gap bound for the best point after M steps (convex case).

    8 m L D^2 / (M + 1) + mu^2 L (m + 8) / 8 + delta m D / (4 mu)
    + delta^2 m / (L mu^2).
    """
    return (
        8.0 * m * L * diameter**2 / (M + 1)
        + mu**2 * L * (m + 8) / 8.0
        + delta * m * diameter / (4.0 * mu)
        + delta**2 * m / (L * mu**2)
    )


def minimize_gradient_free(
    value_fn,
    ball: Ball,
    x0: np.ndarray,
    num_steps: int,
    mu: float,
    step: float,
    delta: float,
    rng: np.random.Generator,
    counter: MatvecCounter | None = None,
    on_iterate=None,
):
    """Projected random-direction descent with a two-point value oracle.

    Runs iterations k = 0..num_steps; at each, draws a uniform unit
    direction, forms g = (m / mu) (value(x + mu xi) - value(x)) xi and
    projects x - step * g back onto the ball. Returns (best_x, best_f,
    trace) where best is the argmin of the recorded value estimates over
    all visited iterates (ties to the earliest).
    """
    x = np.asarray(x0, dtype=float).copy()
    if not ball.contains(x):
        raise ValueError("start point lies outside the ball")
    m = x.size
    trace = TrainTrace(GFN_COLUMNS)
    best_f = math.inf
    best_x = x.copy()
    for k in range(num_steps + 1):
        if on_iterate is not None:
            on_iterate(k, x)
        xi = sample_unit_sphere(rng, m)
        f0 = value_fn(x)
        f1 = value_fn(x + mu * xi)
        g = (m / mu) * (f1 - f0) * xi
        trace.append(k, f0, delta, step, float(np.linalg.norm(g)), counter.count if counter else 0)
        if f0 < best_f:
            best_f = f0
            best_x = x.copy()
        x = project_ball(x - step * g, ball)
    return best_x, best_f, trace


@dataclass(frozen=True)
class GfnConfig:
    """Settings for the gradient-free trainer.

    L is the assumed gradient Lipschitz constant of the loss on the
    ball; epsilon the target expected accuracy. The step budget from
    these can be huge, so max_iters_override caps it for desk-scale
    runs.
    """

    L: float
    epsilon: float
    ball: Ball
    phi0: np.ndarray
    seed: int
    max_iters_override: int | None = None

    def __post_init__(self):
        if self.L <= 0 or self.epsilon <= 0:
            raise ValueError("L and epsilon must be positive")
        if not self.ball.contains(self.phi0):
            raise ValueError("phi0 must lie inside the ball")


def train_gfn(dataset: Dataset, cfg: GfnConfig) -> TrainResult:
    """Gradient-free training of the ranking loss.

    Derives the step budget M = ceil(128 m L R^2 / eps), the smoothing
    radius mu = sqrt(2 eps / (L (m + 8))) and the oracle accuracy
    delta = eps^(3/2) sqrt(2) / (16 m R sqrt(L (m + 8))) from the
    config, then runs the projected random-direction method with the
    delta-accurate loss oracle. mu is additionally capped at half the
    feasibility slack radius so perturbed points keep all probability
    denominators positive.
    """
    t0 = time.perf_counter()
    m = dataset.m
    if cfg.ball.dim != m:
        raise ValueError("ball dimension does not match dataset feature count")
    report = validate_feasibility(dataset.queries, cfg.ball)
    if not report.ok:
        raise ValueError(f"infeasible ball: {report.failures[:3]}")

    M, mu, delta, step = gfn_train_settings(m, cfg.L, cfg.ball.radius, cfg.epsilon)
    if cfg.max_iters_override is not None:
        M = min(M, int(cfg.max_iters_override))
    if report.slack_radius < np.inf:
        mu = min(mu, report.slack_radius / 2.0)

    counter = MatvecCounter()
    if dataset.r == 0:
        value_fn = lambda phi: 0.0  # noqa: E731 - flat objective
    else:
        depth = value_steps(dataset.alpha, dataset.r, delta)
        value_fn = lambda phi: loss_at_depth(dataset, phi, depth, counter)  # noqa: E731
    rng = np.random.default_rng(cfg.seed)
    best_x, best_f, trace = minimize_gradient_free(
        value_fn, cfg.ball, cfg.phi0, M, mu, step, delta, rng, counter
    )
    return TrainResult(
        phi=best_x,
        trace=trace,
        converged=True,
        matvecs=counter.count,
        elapsed=time.perf_counter() - t0,
        extras={
            "method": "gfn",
            "iterations": M + 1,
            "best_loss_estimate": best_f,
            "M": M,
            "mu": mu,
            "delta": delta,
            "step_size": step,
        },
    )


# ---------------------------------------------------------------------------
# adaptive projected gradient method


AGM_BASE_COLUMNS = (
    "iteration",
    "M_k",
    "loss_estimate",
    "trial_loss",
    "accepted",
    "gx_norm",
    "gx_norm_sq",
    "matvecs",
)


def minimize_adaptive(
    value_fn,
    grad_fn,
    ball: Ball,
    x0: np.ndarray,
    L0: float,
    epsilon: float,
    max_outer: int,
    counter: MatvecCounter | None = None,
    extra_columns: tuple = (),
    extra_fn=None,
    l_floor_factor: float = 2.0**-50,
):
    """Adaptive projected gradient with inexact oracles.

    value_fn(x, M) and grad_fn(x, M) evaluate the objective and its
    gradient at accuracies tied to the trial constant M. Each outer
    iteration doubles M from the running estimate L_k until

        f(w) <= f(x) + <g, w - x> + (M / 2) ||w - x||^2 + eps / (8 M)

    holds for the prox point w, then sets L_{k+1} = M / 2 (floored to
    avoid underflow on flat stretches). The iterate with the smallest
    reduced-gradient norm z determines the output point (the accepted
    step taken from it); the loop stops when z <= eps or max_outer is
    exhausted.

    Returns (x_out, trace, info) where info carries z, iterations,
    total checks, and whether the z <= eps stop fired.
    """
    x = np.asarray(x0, dtype=float).copy()
    if not ball.contains(x):
        raise ValueError("start point lies outside the ball")
    trace = TrainTrace(AGM_BASE_COLUMNS + tuple(extra_columns))
    L_k = float(L0)
    z = math.inf
    k_hat = -1
    x_out = x.copy()
    total_checks = 0
    converged = False
    iterations = 0
    for k in range(max_outer):
        M = L_k
        while True:
            f_x = value_fn(x, M)
            g = grad_fn(x, M)
            w, g_x = prox_step(x, g, 1.0 / M, ball)
            f_w = value_fn(w, M)
            diff = w - x
            rhs = f_x + float(g @ diff) + 0.5 * M * float(diff @ diff) + epsilon / (8.0 * M)
            accepted = f_w <= rhs
            total_checks += 1
            gx_norm = float(np.linalg.norm(g_x))
            row = (k, M, f_x, f_w, int(accepted), gx_norm, gx_norm**2,
                   counter.count if counter else 0)
            trace.append(*(row + (tuple(extra_fn(M)) if extra_fn else ())))
            if accepted:
                break
            M *= 2.0
        x = w
        L_k = max(M / 2.0, L0 * l_floor_factor)
        iterations = k + 1
        if gx_norm < z:
            z = gx_norm
            k_hat = k
            x_out = w.copy()
        if z <= epsilon:
            converged = True
            break
    info = {
        "z": z,
        "k_hat": k_hat,
        "iterations": iterations,
        "checks": total_checks,
        "converged": converged,
    }
    return x_out, trace, info


@dataclass(frozen=True)
class AgmConfig:
    """Settings for the adaptive-gradient trainer."""

    L0: float
    epsilon: float
    ball: Ball
    phi0: np.ndarray
    max_outer_iters: int = 100

    def __post_init__(self):
        if self.L0 <= 0 or self.epsilon <= 0:
            raise ValueError("L0 and epsilon must be positive")
        if not self.ball.contains(self.phi0):
            raise ValueError("phi0 must lie inside the ball")


def train_agm(dataset: Dataset, cfg: AgmConfig) -> TrainResult:
    """Adaptive projected gradient training of the ranking loss.

    Inside each trial with constant M the loss is evaluated at accuracy
    delta1 = eps / (32 M) and the gradient at
    delta2 = eps / (64 M R sqrt(m)); the required series depths follow
    from these. Returns the accepted step from the iterate with the
    smallest reduced gradient; ``converged`` is False when the outer
    budget runs out before z <= eps.
    """
    t0 = time.perf_counter()
    m = dataset.m
    if cfg.ball.dim != m:
        raise ValueError("ball dimension does not match dataset feature count")
    report = validate_feasibility(dataset.queries, cfg.ball)
    if not report.ok:
        raise ValueError(f"infeasible ball: {report.failures[:3]}")
    bound = seed_derivative_bound(dataset.queries, cfg.ball, dataset.alpha).value

    eps, R = cfg.epsilon, cfg.ball.radius
    counter = MatvecCounter()
    sqrt_m = math.sqrt(m)

    def delta1(M):
        return eps / (32.0 * M)

    def delta2(M):
        return eps / (64.0 * M * R * sqrt_m)

    def value_fn(phi, M):
        if dataset.r == 0:
            return 0.0
        depth = value_steps(dataset.alpha, dataset.r, delta1(M))
        return loss_at_depth(dataset, phi, depth, counter)

    def grad_fn(phi, M):
        return grad_inexact(dataset, phi, delta2(M), bound, counter).vector

    x_out, trace, info = minimize_adaptive(
        value_fn,
        grad_fn,
        cfg.ball,
        cfg.phi0,
        cfg.L0,
        eps,
        cfg.max_outer_iters,
        counter=counter,
        extra_columns=("delta1", "delta2"),
        extra_fn=lambda M: (delta1(M), delta2(M)),
    )
    return TrainResult(
        phi=x_out,
        trace=trace,
        converged=info["converged"],
        matvecs=counter.count,
        elapsed=time.perf_counter() - t0,
        extras={
            "method": "agm",
            "iterations": info["iterations"],
            "checks": info["checks"],
            "z": info["z"],
            "k_hat": info["k_hat"],
            "deriv_bound": bound,
        },
    )


# ---------------------------------------------------------------------------
# fixed-step baseline


GBP_COLUMNS = ("iteration", "loss_estimate", "step_size", "grad_norm", "matvecs")


@dataclass(frozen=True)
class GbpConfig:
    """Settings for the fixed-step baseline.

    N1/N2 are the power-iteration depths for the stationary vector and
    its Jacobian; training stops once the loss decrease falls below
    stop_tol (or after max_iters steps).
    """

    ball: Ball
    phi0: np.ndarray
    step_size: float = 50.0
    N1: int = 100
    N2: int = 100
    stop_tol: float = 1e-5
    max_iters: int = 1000

    def __post_init__(self):
        if min(self.step_size, self.stop_tol) < 0 or self.N1 < 0 or self.N2 < 0:
            raise ValueError("GBP settings must be non-negative")
        if not self.ball.contains(self.phi0):
            raise ValueError("phi0 must lie inside the ball")


def _gbp_loss_grad(dataset: Dataset, phi: np.ndarray, N1: int, N2: int, counter: MatvecCounter):
    """Loss and gradient with fixed-depth power iterations.

    The stationary vector is the depth-N1 power iterate; the Jacobian is
    N2 steps of the fixed-point map K <- seed + (1-alpha) P^T K.
    """
    m = dataset.m
    total = 0.0
    acc = np.zeros(m)
    for g in dataset.queries:
        tm = transition_model(g, phi, dataset.alpha)
        pi = power_stationary(tm, N1, counter)
        jm = _judgment_matrix(g)
        res = jm.residuals(pi)
        total += float(res @ res)
        if res.size == 0 or not np.any(res):
            continue
        seed_mat = derivative_seed(g, phi, tm.alpha, pi, tm=tm)
        jac = _kernels.fixed_point_mat(
            tm.t_indptr, tm.t_src, tm.t_data, tm.dangling, tm.pi0, tm.alpha, N2, seed_mat
        )
        counter.add(N2 * m)
        acc += jac.T @ jm.transpose_apply(res)
    n = len(dataset.queries)
    return total / n, 2.0 / n * acc


def train_gbp(dataset: Dataset, cfg: GbpConfig) -> TrainResult:
    """Fixed-step projected gradient baseline.

    Iterates phi <- Proj(phi - step * grad) with the fixed-depth
    estimates and stops when the loss between successive iterations
    decreases by less than stop_tol.
    """
    t0 = time.perf_counter()
    report = validate_feasibility(dataset.queries, cfg.ball)
    if not report.ok:
        raise ValueError(f"infeasible ball: {report.failures[:3]}")
    counter = MatvecCounter()
    phi = np.asarray(cfg.phi0, dtype=float).copy()
    trace = TrainTrace(GBP_COLUMNS)
    prev_loss = None
    steps_taken = 0
    stopped_by_rule = False
    for it in range(cfg.max_iters + 1):
        loss, grad = _gbp_loss_grad(dataset, phi, cfg.N1, cfg.N2, counter)
        trace.append(it, loss, cfg.step_size, float(np.linalg.norm(grad)), counter.count)
        if prev_loss is not None and loss - prev_loss > -cfg.stop_tol:
            stopped_by_rule = True
            break
        if it == cfg.max_iters:
            break
        prev_loss = loss
        phi = project_ball(phi - cfg.step_size * grad, cfg.ball)
        steps_taken += 1
    return TrainResult(
        phi=phi,
        trace=trace,
        converged=stopped_by_rule,
        matvecs=counter.count,
        elapsed=time.perf_counter() - t0,
        extras={
            "method": "gbp",
            "iterations": steps_taken,
            "stopped_by_rule": stopped_by_rule,
            "final_loss_estimate": trace.rows[-1][1],
        },
    )
