"""Kernel-smoothed sample average approximation for stochastic optimization.

Replaces the empirical measure in data-driven optimization with a
kernel-smoothed one, which provably trades the downward bias of plain
sample average approximation against a controlled smoothing bias, and
ships a seeded replication harness quantifying the effect.
"""

from .bandwidth import (
    BandwidthRule,
    bias_matched,
    fixed,
    plugin_106,
    rate_rule,
    silverman,
)
from .experiments import (
    EstimatorSpec,
    EstimatorStats,
    ExperimentConfig,
    HarnessError,
    Normal,
    run_replications,
    summarize,
)
from .kernels import (
    Kernel,
    KernelMoments,
    density,
    epanechnikov,
    gaussian,
    moments,
    sample_kernel,
    smoothed_hinge,
    smoothed_square,
    uniform,
)
from .problems import (
    AvarProblem,
    LassoProblem,
    PortfolioProblem,
    QuadraticLocationProblem,
    SvmProblem,
    avar_value,
    lasso_values,
    portfolio_value,
    quadratic_location_values,
    svm_values,
    true_avar_normal,
)
from .smoothing import (
    VALUE_TOL,
    EvaluationError,
    ModulusSpec,
    Sample,
    SmoothingPlan,
    bias_bound_constant,
    quadrature_nodes,
    saa_plan,
    smooth_objective_value,
    smooth_subgradient,
)
from .solvers import (
    SolveReport,
    SolverError,
    minimize_convex_1d,
    project_box_simplex,
    project_l1_ball,
    projected_subgradient,
    sphere_search_2d,
)

__version__ = "0.1.0"
