"""Gradient descent with backtracking line search (GD-BLS).

A step ``v`` from ``x`` is accepted when

    g(x - v * grad) <= g(x) - (v / 2) * ||grad||^2,

starting from ``v = 1`` and shrinking ``v <- beta * v`` until the test holds.
``+inf`` and ``nan`` trial values always fail the test.

:func:`run_budgeted` is the early-stopping, budget-metered variant used on
sample-average objectives; :func:`backtrack` and :func:`run_deterministic`
are the plain versions for exact functions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .saa import AveragedObjective, BudgetMeter

__all__ = [
    "LineSearchError",
    "StopReason",
    "LineSearchParams",
    "GdBlsResult",
    "sufficient_decrease",
    "backtrack",
    "run_deterministic",
    "run_budgeted",
]

MIN_STEP = 1e-300


class LineSearchError(RuntimeError):
    """Step size underflowed before the sufficient-decrease test held."""


class StopReason(str, enum.Enum):
    TOLERANCE_MET = "ToleranceMet"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    NEVER_STARTED = "NeverStarted"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class LineSearchParams:
    beta: float = 0.5
    tau: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta!r}")
        if not self.tau >= 0.0:
            raise ValueError(f"tau must be nonnegative, got {self.tau!r}")


@dataclass
class GdBlsResult:
    """Outcome of one budget-metered GD-BLS run on ``F_n``.

    ``value_calls`` and ``grad_calls`` count charged ``F_n`` evaluations, so
    ``consumed == n * (grad_calls * c_grad + value_calls * c_eval)``.
    ``fn_trace[t]`` and ``grad_norms[t]`` are ``F_n`` and ``||grad F_n||`` at
    the t-th accepted iterate; ``step_sizes[t]`` is the step taken from it.
    """

    theta: np.ndarray
    remaining: int
    iterations: int
    stop_reason: StopReason
    n: int
    consumed: int = 0
    value_calls: int = 0
    grad_calls: int = 0
    step_sizes: list = field(default_factory=list)
    fn_trace: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    grad_norm: float = math.nan


def sufficient_decrease(trial: float, gx: float, v: float, sq_norm: float) -> bool:
    # written as a positive test so nan fails
    return trial <= gx - 0.5 * v * sq_norm


def backtrack(g, x, grad, gx, beta):
    """Largest ``beta**k`` passing the sufficient-decrease test.

    Returns ``(v, g(x - v * grad), number of g evaluations)``.
    """
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    sq = float(grad @ grad)
    v = 1.0
    trial = g(x - v * grad)
    evals = 1
    while not sufficient_decrease(trial, gx, v, sq):
        v *= beta
        if v < MIN_STEP:
            raise LineSearchError(f"step size fell below {MIN_STEP:g} at x={x!r}")
        trial = g(x - v * grad)
        evals += 1
    return v, trial, evals


def run_deterministic(g, grad_g, x0, T, beta, return_steps=False):
    """``T`` iterations of GD-BLS on an exact function.

    Returns the ``(T + 1, d)`` array of iterates, and the accepted step sizes
    when ``return_steps`` is set.
    """
    x = np.array(x0, dtype=float).reshape(-1)
    xs = [x.copy()]
    steps = []
    gx = g(x)
    for _ in range(T):
        grad = np.asarray(grad_g(x), dtype=float)
        v, gx, _ = backtrack(g, x, grad, gx, beta)
        x = x - v * grad
        xs.append(x.copy())
        steps.append(v)
    xs = np.array(xs)
    return (xs, steps) if return_steps else xs


def run_budgeted(obj: AveragedObjective, theta0, meter: BudgetMeter, params: LineSearchParams) -> GdBlsResult:
    """GD-BLS on ``F_n`` until ``||grad F_n|| <= tau`` or the budget runs out.

    Each line-search trial costs one ``F_n`` value; the search starts at
    ``v = 1``.  If the search is cut short by the budget, the last trial is
    discarded and the current iterate is returned.  A run that cannot pay for
    its first gradient or first value returns ``theta0`` untouched with
    ``NeverStarted``.
    """
    n = obj.n
    beta, tau = params.beta, params.tau
    theta = np.array(theta0, dtype=float).reshape(-1)
    start_consumed, start_values, start_grads = meter.consumed, meter.value_calls, meter.grad_calls
    steps: list = []
    trace: list = []
    norms: list = []

    def result(reason, grad_norm=math.nan):
        return GdBlsResult(
            theta=theta,
            remaining=max(meter.remaining, 0),
            iterations=len(steps),
            stop_reason=reason,
            n=n,
            consumed=meter.consumed - start_consumed,
            value_calls=meter.value_calls - start_values,
            grad_calls=meter.grad_calls - start_grads,
            step_sizes=steps,
            fn_trace=trace,
            grad_norms=norms,
            grad_norm=grad_norm,
        )

    G = obj.grad(theta, meter)
    if G is None:
        return result(StopReason.NEVER_STARTED)
    gt = obj.value(theta, meter)
    if gt is None:
        return result(StopReason.NEVER_STARTED, float(np.linalg.norm(G)))
    trace.append(gt)
    eval_cost = n * meter.c_eval

    gnorm = float(np.linalg.norm(G))
    norms.append(gnorm)
    while gnorm > tau and meter.remaining >= eval_cost:
        sq = gnorm * gnorm
        v = 1.0
        trial = obj.value(theta - G, meter)
        while not sufficient_decrease(trial, gt, v, sq) and meter.remaining >= eval_cost:
            v *= beta
            if v < MIN_STEP:
                raise LineSearchError(f"step size fell below {MIN_STEP:g} at theta={theta!r}")
            trial = obj.value(theta - v * G, meter)
        if not sufficient_decrease(trial, gt, v, sq):
            break
        theta = theta - v * G
        gt = trial
        steps.append(v)
        trace.append(gt)
        G = obj.grad(theta, meter)
        if G is None:
            return result(StopReason.BUDGET_EXHAUSTED)
        gnorm = float(np.linalg.norm(G))
        norms.append(gnorm)

    reason = StopReason.TOLERANCE_MET if gnorm <= tau else StopReason.BUDGET_EXHAUSTED
    return result(reason, gnorm)
