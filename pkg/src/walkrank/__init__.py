"""walkrank: learning feature-weighted random-walk ranking models.

A query is a directed graph whose nodes and edges carry non-negative
feature vectors. A weight vector ``phi`` (first ``m1`` components for
nodes, last ``m2`` for edges) turns the graph into a Markov chain with
restart; the stationary distribution ranks the nodes. Training tunes
``phi`` inside a Euclidean ball by minimizing a pairwise squared-hinge
loss over relevance judgments, using value/gradient oracles whose
accuracy is controlled explicitly.
"""

from walkrank.graphs import (
    Ball,
    FeasibleBall,
    JudgmentPair,
    QueryGraph,
    TransitionModel,
    node_weight,
    restart_distribution,
    transition_model,
    validate_feasibility,
)
from walkrank.stationary import (
    MatvecCounter,
    exact_stationary,
    power_stationary,
    series_stationary,
    steps_for_accuracy,
)
from walkrank.derivatives import (
    derivative_seed,
    exact_derivative,
    restart_jacobian,
    seed_derivative_bound,
    series_derivative,
    transition_jacobian_row,
)
from walkrank.oracle import (
    GradEstimate,
    JudgmentMatrix,
    LossValue,
    build_judgment_matrix,
    grad_exact,
    grad_inexact,
    gradient_steps,
    loss_exact,
    loss_inexact,
    value_steps,
)
from walkrank.dataset import Dataset, DatasetError, gen_synthetic, load_dataset, save_dataset
from walkrank.optimize import (
    AgmConfig,
    GbpConfig,
    GfnConfig,
    TrainResult,
    gf_oracle,
    gfn_error_bound,
    gfn_settings,
    gfn_train_settings,
    project_ball,
    prox_step,
    sample_unit_sphere,
    train_agm,
    train_gbp,
    train_gfn,
)

__all__ = [
    "Ball",
    "FeasibleBall",
    "JudgmentPair",
    "QueryGraph",
    "TransitionModel",
    "node_weight",
    "restart_distribution",
    "transition_model",
    "validate_feasibility",
    "MatvecCounter",
    "exact_stationary",
    "power_stationary",
    "series_stationary",
    "steps_for_accuracy",
    "derivative_seed",
    "exact_derivative",
    "restart_jacobian",
    "seed_derivative_bound",
    "series_derivative",
    "transition_jacobian_row",
    "GradEstimate",
    "JudgmentMatrix",
    "LossValue",
    "build_judgment_matrix",
    "grad_exact",
    "grad_inexact",
    "gradient_steps",
    "loss_exact",
    "loss_inexact",
    "value_steps",
    "Dataset",
    "DatasetError",
    "gen_synthetic",
    "load_dataset",
    "save_dataset",
    "AgmConfig",
    "GbpConfig",
    "GfnConfig",
    "TrainResult",
    "gf_oracle",
    "gfn_error_bound",
    "gfn_settings",
    "gfn_train_settings",
    "project_ball",
    "prox_step",
    "sample_unit_sphere",
    "train_agm",
    "train_gbp",
    "train_gfn",
]

__version__ = "0.1.0"
