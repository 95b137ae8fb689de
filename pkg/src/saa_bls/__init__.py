"""Budget-constrained noisy optimisation with gradient descent and backtracking line search."""

from .experiments import SweepConfig, loglog_slope, pearson_corr, rho_jb, sweep, trimmed_mean
from .gd_bls import GdBlsResult, LineSearchParams, StopReason, backtrack, run_budgeted, run_deterministic
from .problems import (
    ConfigurationError,
    HeavyTailed1D,
    MeanEstimation1D,
    Poisson1D,
    PoissonMulti,
    make_problem,
    oracle_poisson1d,
    parse_problem,
)
from .retrospective import RaConfig, RaResult, gamma_identity_residual, run, schedule, single_stage_saa
from .saa import AveragedObjective, BudgetMeter, SampleStream

__version__ = "0.1.0"
