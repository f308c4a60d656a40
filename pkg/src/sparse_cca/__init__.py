"""Sparse canonical correlation analysis by greedy selection."""
from .errors import (
    BudgetExceededError,
    InputError,
    ModelError,
    SolverError,
    SparseCCAError,
    TrialError,
)
from .experiments import (
    CurveRow,
    CurveTable,
    ExperimentConfig,
    large_scale_path,
    regularization_experiment,
    sparsity_tradeoff_experiment,
)
from .greedy import (
    GreedyConfig,
    PathEntry,
    SparsityPath,
    backward_greedy,
    bound_delta,
    bound_gamma,
    forward_step_approx,
    forward_step_exact,
    run_greedy,
    seed_pair,
)
from .model import (
    CovarianceTriple,
    DataSet,
    SparsityPattern,
    diagonalize_marginals,
    estimate_covariance,
    identity_marginals,
    restrict,
    ridge_regularize,
    validate_psd,
    wishart_sample,
)
from .oracle import exhaustive_sparse_cca, oracle_curve
from .solver import CcaSolution, correlation_of, solve_cca, solve_on_pattern, true_correlation

__version__ = "0.1.0"
