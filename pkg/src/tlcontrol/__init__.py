"""Station-keeping control of a stochastically forced particle in
stratified flow.

The package solves the stationary Fokker-Planck system of a switched
three-level control rule in closed form, optimizes its trigger distance
and actuation step under a variance budget, does the same for a linear
feedback rule via its stationary covariance, and verifies both against
finite-difference and Monte Carlo oracles. A command-line front end
writes CSV tables and figures.
"""

from .analytic import (
    BRANCHES,
    TlcAnalysis,
    TlcParams,
    TlcPdf,
    analyze_tlc,
    activation_frequency,
    branch_masses,
    efold_lambda,
    feasibility_limits,
    pdf_coefficients,
    pdf_eval,
    tlc_cost,
    tlc_variance,
)
from .cli import main
from .errors import (
    ConfigError,
    ConvergenceError,
    InfeasibleError,
    InstabilityError,
    TailTruncationWarning,
    TimeStepResolutionWarning,
    TlcontrolError,
)
from .fokker_planck import (
    DiscretePdfField,
    GridSpec,
    convergence_study,
    default_grid,
    max_branch_error,
    solve_steady_fp,
)
from .linear import (
    LinearGains,
    LinearOptimum,
    StationaryCovariance,
    closed_loop_matrices,
    control_variance,
    expected_abs_control,
    lyapunov_residual,
    optimize_linear,
    stationary_covariance,
)
from .optimize import TlcOptimum, cost_sweep, lambda_on_constraint, optimize_tlc
from .simulate import (
    AutomatonState,
    Histogram,
    HistogramComparison,
    SimConfig,
    SimStats,
    default_warmup,
    histogram_vs_analytic,
    reference_tlc_trajectory,
    simulate_linear,
    simulate_tlc,
    suggested_dt_linear,
    suggested_dt_tlc,
)
from .units import (
    FlowParams,
    GammaConstants,
    Scales,
    characteristic_scales,
    cost_from_gamma,
    dimensionless_R,
    gamma_from_cost,
    linear_gains_from_gammas,
    linear_gammas_from_gains,
    tlc_gammas_from_params,
    tlc_params_from_gammas,
)

__version__ = "0.1.0"

__all__ = [
    "AutomatonState",
    "BRANCHES",
    "ConfigError",
    "ConvergenceError",
    "DiscretePdfField",
    "FlowParams",
    "GammaConstants",
    "GridSpec",
    "Histogram",
    "HistogramComparison",
    "InfeasibleError",
    "InstabilityError",
    "LinearGains",
    "LinearOptimum",
    "Scales",
    "SimConfig",
    "SimStats",
    "StationaryCovariance",
    "TailTruncationWarning",
    "TimeStepResolutionWarning",
    "TlcAnalysis",
    "TlcOptimum",
    "TlcParams",
    "TlcPdf",
    "TlcontrolError",
    "activation_frequency",
    "analyze_tlc",
    "branch_masses",
    "characteristic_scales",
    "closed_loop_matrices",
    "control_variance",
    "convergence_study",
    "cost_from_gamma",
    "cost_sweep",
    "default_grid",
    "default_warmup",
    "dimensionless_R",
    "efold_lambda",
    "expected_abs_control",
    "feasibility_limits",
    "gamma_from_cost",
    "histogram_vs_analytic",
    "lambda_on_constraint",
    "linear_gains_from_gammas",
    "linear_gammas_from_gains",
    "lyapunov_residual",
    "main",
    "max_branch_error",
    "optimize_linear",
    "optimize_tlc",
    "pdf_coefficients",
    "pdf_eval",
    "reference_tlc_trajectory",
    "simulate_linear",
    "simulate_tlc",
    "solve_steady_fp",
    "stationary_covariance",
    "suggested_dt_linear",
    "suggested_dt_tlc",
    "tlc_cost",
    "tlc_gammas_from_params",
    "tlc_params_from_gammas",
    "tlc_variance",
]
