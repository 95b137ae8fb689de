"""Multi-stage retrospective approximation and the single-stage SAA baseline.

Stage ``j`` runs budget-metered GD-BLS on ``F_{n_j}`` with

    gamma_j = 1 - delta**j
    n_j     = max(min_n, ceil(kappa * B**gamma_j))
    tau_j   = tau * B**(-(alpha' / (1 + alpha')) * gamma_j)

warm-started at the previous stage's output and with whatever budget the
previous stage left.  All stages read the same sample sequence.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .gd_bls import GdBlsResult, LineSearchParams, StopReason, run_budgeted
from .problems import ConfigurationError, NoisyProblem
from .saa import AveragedObjective, BudgetMeter, SampleStream

__all__ = [
    "RaConfig",
    "StageSchedule",
    "RaResult",
    "delta_lower_bound",
    "schedule",
    "run",
    "single_stage_n",
    "single_stage_saa",
    "gamma_identity_residual",
]


def delta_lower_bound(alpha_prime: float) -> float:
    """``2 alpha' / (1 + 3 alpha')``; rate guarantees need ``delta`` above this."""
    return 2.0 * alpha_prime / (1.0 + 3.0 * alpha_prime)


@dataclass(frozen=True)
class RaConfig:
    theta0: tuple = (1.0,)
    budget: int = 10**6
    alpha_prime: float = 1.0
    delta: float = 0.95
    J: int = 10_000
    kappa: float = 1.0
    tau: float = 1.0
    beta: float = 0.5
    min_n: int = 100
    c_eval: int = 1
    c_grad: int = 1
    final_stage_tau_zero: bool = False

    def __post_init__(self):
        object.__setattr__(self, "theta0", tuple(float(t) for t in np.ravel(self.theta0)))
        if int(self.budget) != self.budget or self.budget < 0:
            raise ConfigurationError(f"budget must be a nonnegative integer, got {self.budget!r}")
        object.__setattr__(self, "budget", int(self.budget))
        if not 0.0 < self.alpha_prime <= 1.0:
            raise ConfigurationError(f"alpha' must lie in (0, 1], got {self.alpha_prime!r}")
        if not 0.0 <= self.delta < 1.0:
            raise ConfigurationError(f"delta must lie in [0, 1), got {self.delta!r}")
        if self.J < 1:
            raise ConfigurationError(f"J must be positive, got {self.J!r}")
        if not self.kappa > 0 or not self.tau > 0:
            raise ConfigurationError("kappa and tau must be positive")
        if not 0.0 < self.beta < 1.0:
            raise ConfigurationError(f"beta must lie in (0, 1), got {self.beta!r}")
        if self.min_n < 0:
            raise ConfigurationError("min_n must be nonnegative")
        if self.c_eval < 1 or self.c_grad < 1:
            raise ConfigurationError("unit costs must be positive integers")

    def check_rate_range(self) -> bool:
        """Warn when ``delta`` is outside the range where the rate guarantee holds."""
        lo = delta_lower_bound(self.alpha_prime)
        if not lo < self.delta < 1.0:
            warnings.warn(
                f"delta={self.delta} is outside ({lo:.4g}, 1); the convergence-rate guarantee does not apply",
                stacklevel=2,
            )
            return False
        return True


@dataclass(frozen=True)
class StageSchedule:
    j: int
    gamma: float
    n: int
    tau: float


@dataclass
class RaResult:
    """``j_used`` is ``J_B``: the index of the last stage that consumed any
    budget (at least 1).  Later stages cannot change the estimate, so running
    with ``J = j_used`` reproduces ``theta_hat`` exactly.  ``last_moving_stage``
    is the last stage that accepted a step, and ``stages_invoked`` counts
    GD-BLS calls including a final one that was refused its first gradient.
    """

    theta_hat: np.ndarray
    j_used: int
    stages_invoked: int
    last_moving_stage: int = 0
    stage_records: list = field(default_factory=list)
    total_consumed: int = 0
    remaining: int = 0
    stop_reason: StopReason = StopReason.NEVER_STARTED


def schedule(B: int, cfg: RaConfig, j: int) -> StageSchedule:
    if not 1 <= j <= cfg.J:
        raise ValueError(f"stage index {j} outside 1..{cfg.J}")
    gamma = 1.0 - cfg.delta**j
    n = max(cfg.min_n, math.ceil(cfg.kappa * float(B) ** gamma))
    tau = cfg.tau * float(B) ** (-(cfg.alpha_prime / (1.0 + cfg.alpha_prime)) * gamma)
    return StageSchedule(j=j, gamma=gamma, n=n, tau=tau)


def run(problem: NoisyProblem, cfg: RaConfig, seed) -> RaResult:
    """Run the multi-stage procedure with budget ``cfg.budget``.

    ``seed`` seeds the sample sequence (an int, ``SeedSequence`` or Generator).
    """
    theta = _theta0(problem, cfg)
    stream = SampleStream(problem, seed)
    meter = BudgetMeter(cfg.budget, cfg.c_eval, cfg.c_grad)
    B = cfg.budget
    records = []
    j = 0
    j_used = 1
    moved = 0
    while meter.remaining > 0 and j < cfg.J:
        j += 1
        st = schedule(B, cfg, j)
        tau = 0.0 if (cfg.final_stage_tau_zero and j == cfg.J) else st.tau
        obj = AveragedObjective(stream, st.n)
        res = run_budgeted(obj, theta, meter, LineSearchParams(cfg.beta, tau))
        records.append((st, res))
        theta = res.theta
        if res.iterations > 0:
            moved = j
        if res.consumed > 0:
            j_used = j
        else:
            # n_j is nondecreasing and the budget did not move, so every later
            # stage would be refused its first gradient as well
            break
    return RaResult(
        theta_hat=theta,
        j_used=j_used,
        stages_invoked=j,
        last_moving_stage=moved,
        stage_records=records,
        total_consumed=meter.consumed,
        remaining=meter.remaining,
        stop_reason=records[j_used - 1][1].stop_reason if records else StopReason.NEVER_STARTED,
    )


def _theta0(problem, cfg):
    theta = np.array(cfg.theta0, dtype=float)
    if theta.size == 1 and problem.dim > 1:
        theta = np.full(problem.dim, theta[0])
    if theta.size != problem.dim:
        raise ConfigurationError(f"theta0 has length {theta.size}, problem dimension is {problem.dim}")
    return theta


def single_stage_n(B: int, alpha: float, c_n: float = 1.0, min_n: int = 100) -> int:
    """Sample size ``max(min_n, ceil(c_n * B**((1 + alpha) / (1 + 3 alpha))))``."""
    return max(min_n, math.ceil(c_n * float(B) ** ((1.0 + alpha) / (1.0 + 3.0 * alpha))))


def single_stage_saa(
    problem: NoisyProblem,
    theta0,
    B: int,
    alpha: float,
    beta: float = 0.5,
    c_n: float = 1.0,
    seed=None,
    min_n: int = 100,
    c_eval: int = 1,
    c_grad: int = 1,
) -> GdBlsResult:
    """One GD-BLS run with ``tau = 0`` on ``F_n`` until the budget is spent."""
    if not 0.0 < alpha <= 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1], got {alpha!r}")
    cfg = RaConfig(theta0=theta0, budget=B, beta=beta, c_eval=c_eval, c_grad=c_grad)
    theta = _theta0(problem, cfg)
    n = single_stage_n(B, alpha, c_n, min_n)
    obj = AveragedObjective(SampleStream(problem, seed), n)
    meter = BudgetMeter(B, c_eval, c_grad)
    return run_budgeted(obj, theta, meter, LineSearchParams(beta, 0.0))


def gamma_identity_residual(delta: float, alpha_prime: float, j: int) -> float:
    """``|gamma_j - (pi gamma'_j + (1 - pi) gamma_{j-1})|`` with ``pi = (1 - delta)(1 + 3a')/(1 + a')``.

    ``gamma'_j = w + (1 - w) gamma_{j-1}``, ``w = (1 + a')/(1 + 3a')``.  The
    convex-combination weight ``pi`` lies in ``(0, 1)`` exactly when
    ``delta`` is in ``(2a'/(1 + 3a'), 1)``.
    """
    if j < 2:
        raise ValueError("the recursion starts at j = 2")
    if not delta_lower_bound(alpha_prime) < delta < 1.0:
        raise ValueError(f"delta={delta} outside ({delta_lower_bound(alpha_prime)}, 1)")
    w = (1.0 + alpha_prime) / (1.0 + 3.0 * alpha_prime)
    pi = (1.0 - delta) * (1.0 + 3.0 * alpha_prime) / (1.0 + alpha_prime)
    gamma_prev = 1.0 - delta ** (j - 1)
    gamma_j = 1.0 - delta**j
    gamma_prime = w + (1.0 - w) * gamma_prev
    return abs(gamma_j - (pi * gamma_prime + (1.0 - pi) * gamma_prev))
