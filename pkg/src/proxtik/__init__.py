"""Iterated Tikhonov (proximal point) estimation for kernel methods.

Spline kernels with planted source/capacity benchmarks, a damped-Newton
proximal solver with decrement-based tolerances, exact spectral-filter oracles
for squared loss, Monte Carlo excess-risk evaluation, and a grid-sweep harness
for learning-rate experiments.
"""

from .harness import (
    ExperimentRecord,
    RateFit,
    SweepConfig,
    default_lambda_grid,
    fit_rate,
    group_keys,
    read_records,
    run_sweep,
    theoretical_lambda_rate,
    theoretical_rate,
)
from .iterated_tikhonov import (
    ProxRunConfig,
    ProxTrajectory,
    empirical_gradient_norm,
    make_schedule,
    run_iterated_tikhonov,
    true_decrement_audit,
)
from .kernels import (
    KernelMatrix,
    KernelSpec,
    bernoulli_poly,
    gram_matrix,
    smoothness_order,
    spline_kernel,
    theta_star_eval,
)
from .losses import (
    LOGISTIC,
    SQUARED,
    GscRadius,
    LossModel,
    gsc_radius,
    loss_derivatives,
    loss_value,
)
from .prox_newton import (
    Estimator,
    SolverError,
    SubproblemState,
    newton_decrement,
    solve_subproblem,
    subproblem_gradient_coeffs,
    zero_estimator,
)
from .risk import (
    RiskEstimate,
    excess_risk_logistic,
    excess_risk_squared,
    mc_inputs,
    predict,
)
from .spectral import (
    DofCurve,
    FilterSpec,
    dof_curve,
    filter_apply,
    filter_residual,
    filter_value,
    qualification_check,
)
from .synthetic import (
    Dataset,
    TaskSpec,
    generate,
    generate_classification,
    generate_regression,
    load_dataset,
    save_dataset,
    verify_optimality,
)

__version__ = "0.1.0"
