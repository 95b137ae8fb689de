import math
from dataclasses import dataclass

import numpy as np
import pytest

from saa_bls.checks import check_budget, check_descent, check_gd_bounds, random_spd
from saa_bls.gd_bls import (
    LineSearchError,
    LineSearchParams,
    StopReason,
    backtrack,
    run_budgeted,
    run_deterministic,
)
from saa_bls.problems import MeanEstimation1D, NoisyProblem, Poisson1D
from saa_bls.saa import AveragedObjective, BudgetMeter, SampleStream


def test_backtrack_accepts_unit_step():
    v, trial, evals = backtrack(lambda x: 0.5 * float(x @ x), np.array([1.0]), np.array([1.0]), 0.5, 0.5)
    assert (v, trial, evals) == (1.0, 0.0, 1)


def test_backtrack_two_shrinks():
    v, trial, evals = backtrack(lambda x: 2.0 * float(x @ x), np.array([1.0]), np.array([4.0]), 2.0, 0.5)
    assert (v, trial, evals) == (0.25, 0.0, 3)
    assert v >= 0.5 / 4.0


def test_backtrack_zero_gradient():
    g = lambda x: float(x @ x) + 7.0
    x = np.array([0.0, 0.0])
    assert backtrack(g, x, np.zeros(2), g(x), 0.5) == (1.0, 7.0, 1)


def test_backtrack_rejects_infinite_and_nan_trials():
    # from x = 1 with g = x^2: v = 1 lands on -1 (inf), v = 0.5 on 0 (nan), v = 0.25 on 0.5
    def g(x):
        if x[0] < -0.5:
            return math.inf
        if x[0] < 0.25:
            return math.nan
        return float(x[0] ** 2)

    v, trial, evals = backtrack(g, np.array([1.0]), np.array([2.0]), 1.0, 0.5)
    assert (v, trial, evals) == (0.25, 0.25, 3)


def test_backtrack_underflow_guard():
    with pytest.raises(LineSearchError):
        backtrack(lambda x: float(x[0]), np.array([0.0]), np.array([-1.0]), 0.0, 0.5)


def test_deterministic_one_step_to_minimiser():
    xs = run_deterministic(lambda x: 0.5 * float(x @ x), lambda x: x, [3.0, -2.0, 5.0], 1, 0.5)
    assert xs.shape == (2, 3)
    assert np.array_equal(xs[1], np.zeros(3))


def test_deterministic_constant_at_minimiser():
    A = np.diag([1.0, 4.0])
    xs = run_deterministic(lambda x: 0.5 * x @ A @ x, lambda x: A @ x, [0.0, 0.0], 5, 0.3)
    assert np.all(xs == 0.0)


def test_deterministic_gap_bound_random_quadratic():
    rng = np.random.default_rng(11)
    A, L = random_spd(rng, 5)
    x0 = rng.standard_normal(5)
    T = 60
    xs = run_deterministic(lambda x: 0.5 * x @ A @ x, lambda x: A @ x, x0, T, 0.5)
    assert 0.5 * xs[T] @ A @ xs[T] <= float(x0 @ x0) * L / (2 * 0.5 * T)


def test_quadratic_step_and_gap_bounds():
    assert check_gd_bounds() == []


def _obj(n=10, problem=None, seed=0):
    return AveragedObjective(SampleStream(problem or Poisson1D(), seed), n)


def test_budgeted_trace_loop_refused():
    meter = BudgetMeter(25)
    res = run_budgeted(_obj(), [1.0], meter, LineSearchParams(0.5, 0.0))
    assert res.theta.tolist() == [1.0]
    assert (res.remaining, res.iterations, res.grad_calls, res.value_calls) == (5, 0, 1, 1)
    assert res.stop_reason == StopReason.BUDGET_EXHAUSTED


def test_budgeted_never_started():
    res = run_budgeted(_obj(), [1.0], BudgetMeter(9), LineSearchParams(0.5, 0.0))
    assert res.theta.tolist() == [1.0]
    assert res.remaining == 9 and res.stop_reason == StopReason.NEVER_STARTED


def test_budgeted_value_unaffordable_is_never_started():
    res = run_budgeted(_obj(), [1.0], BudgetMeter(15), LineSearchParams(0.5, 0.0))
    assert res.stop_reason == StopReason.NEVER_STARTED
    assert res.remaining == 5 and res.grad_calls == 1


def test_budgeted_tolerance_met_immediately():
    res = run_budgeted(_obj(), [1.0], BudgetMeter(1000), LineSearchParams(0.5, 1e9))
    assert res.stop_reason == StopReason.TOLERANCE_MET
    assert res.remaining == 980 and res.iterations == 0


def test_budgeted_hand_trace_with_equality_acceptance():
    # F(theta) = theta^2 - 6 theta exactly; from 1: G = -4, v = 1 fails (-5 > -13),
    # v = 0.5 gives F(3) = -9 == -5 - 4, accepted on equality; then G = 0.
    obj = _obj(n=10, problem=MeanEstimation1D(("point", 3.0)))
    res = run_budgeted(obj, [1.0], BudgetMeter(1000), LineSearchParams(0.5, 0.0))
    assert res.theta.tolist() == [3.0]
    assert res.step_sizes == [0.5]
    assert res.fn_trace == [-5.0, -9.0]
    assert (res.grad_calls, res.value_calls, res.consumed) == (2, 3, 50)
    assert res.stop_reason == StopReason.TOLERANCE_MET


def test_budgeted_discards_unfinished_line_search():
    # same problem, but the budget runs out right after the rejected v = 1 trial
    obj = _obj(n=10, problem=MeanEstimation1D(("point", 3.0)))
    res = run_budgeted(obj, [1.0], BudgetMeter(30), LineSearchParams(0.5, 0.0))
    assert res.theta.tolist() == [1.0]
    assert res.remaining == 0 and res.iterations == 0
    assert res.stop_reason == StopReason.BUDGET_EXHAUSTED


def test_budgeted_grad_unaffordable_after_step():
    obj = _obj(n=10, problem=MeanEstimation1D(("point", 3.0)))
    res = run_budgeted(obj, [1.0], BudgetMeter(45), LineSearchParams(0.5, 0.0))
    assert res.theta.tolist() == [3.0]
    assert res.remaining == 5 and res.stop_reason == StopReason.BUDGET_EXHAUSTED


def test_budgeted_steps_are_powers_of_beta():
    res = run_budgeted(_obj(n=500, seed=3), [1.5], BudgetMeter(200_000), LineSearchParams(0.3, 0.0))
    assert res.iterations > 5
    for v in res.step_sizes:
        k = round(math.log(v) / math.log(0.3))
        assert v == 0.3**k or v == pytest.approx(0.3**k, rel=1e-15)
        assert 0 < v <= 1


@dataclass(frozen=True)
class _SteepExp(NoisyProblem):
    """f(theta, z) = exp(theta) - 1000 theta, minimised at log(1000)."""

    columns = ("z",)

    @property
    def dim(self):
        return 1

    @property
    def theta_star(self):
        return np.array([math.log(1000.0)])

    def sample(self, rng, size):
        return np.zeros((size, 1))

    def values(self, theta, Z):
        with np.errstate(over="ignore"):
            return np.full(len(Z), np.exp(theta[0]) - 1000.0 * theta[0])

    def grads(self, theta, Z):
        with np.errstate(over="ignore"):
            return np.full((len(Z), 1), np.exp(theta[0]) - 1000.0)


def test_budgeted_overflow_trial_is_rejected():
    obj = _obj(n=3, problem=_SteepExp())
    # G(0) = -999, so the unit step lands at 999 where exp overflows
    assert obj.value_uncharged([999.0]) == math.inf
    res = run_budgeted(obj, [0.0], BudgetMeter(30_000), LineSearchParams(0.5, 1e-3))
    assert res.step_sizes[0] < 1.0
    assert np.isfinite(res.fn_trace).all()
    assert res.stop_reason == StopReason.TOLERANCE_MET
    assert res.theta[0] == pytest.approx(math.log(1000.0), abs=1e-5)


def test_descent_suite():
    assert check_descent() == []


def test_budget_exactness_suite():
    assert check_budget(runs=300, seed=5) == []


def test_line_search_params_validation():
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            LineSearchParams(bad, 0.0)
    with pytest.raises(ValueError):
        LineSearchParams(0.5, -1.0)
