"""Open-loop subspace identification with finite-sample diagnostics.

The pipeline estimates a Hankel-like matrix by a bank of causal ARX
regressions, reduces it by weighted SVD, and realizes state-space matrices
by either a state-regression or a shift-invariance route.  Alongside the
estimators, the package evaluates every computable finite-sample quantity
attached to them (PE floors, burn-in times, error budgets, SVD robustness
margins) and ships a seeded Monte-Carlo harness that reproduces the
benchmark experiments.
"""

from .bounds import (
    BoundInputs,
    BoundReport,
    BurnIn,
    UniversalConstants,
    bound_report,
    burn_in,
    burn_in_growing_horizon,
    error_budgets,
    population_covariance,
    problem_dimension,
    realization_bounds,
    sigma_bar_sq,
    svd_robustness,
)
from .exceptions import (
    ConvergenceError,
    DataFormatError,
    ModelInvariantError,
    NotPositiveDefiniteError,
    OrderTieError,
    ParsimIdError,
    RankDeficiencyError,
    SearchLimitError,
)
from .hankel import (
    HorizonConfig,
    RegressorBundle,
    build_bundle,
    empirical_covariance,
    projector_complement,
)
from .lti import (
    InputSpec,
    StandardNoiseModel,
    StateSpaceModel,
    Trajectory,
    armax_to_ss,
    dare_to_innovations,
    markov_parameters,
    read_trajectory_csv,
    simulate,
    state_covariance,
    true_hankel,
    write_trajectory_csv,
)
from .pipeline import PipelineResult, dominant_pole_error, identify
from .realization import (
    BalancedRealization,
    SystemEstimate,
    procrustes_align,
    realize_cva,
    realize_moesp,
    suggest_order,
    weighted_svd_truncate,
)
from .regression import (
    HankelEstimate,
    PeCheck,
    check_pe,
    fit_one_step,
    fit_parsim,
    projection_hankel,
)
from .weighting import (
    WeightingKind,
    WeightingPair,
    build_weighting,
    custom_pair,
    inv_sqrt_psd,
    sqrt_psd,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
