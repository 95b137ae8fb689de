import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saa_bls.problems import HeavyTailed1D, MeanEstimation1D, Poisson1D
from saa_bls.saa import AveragedObjective, BudgetMeter, SampleStream, extend_prefix, f_n_grad, f_n_value


def test_extend_is_monotone():
    s = SampleStream(Poisson1D(), 0)
    extend_prefix(s, 5)
    extend_prefix(s, 3)
    assert len(s) == 5


def test_extend_keeps_existing_entries():
    s = SampleStream(HeavyTailed1D(), 1)
    extend_prefix(s, 3)
    first = s.prefix.copy()
    extend_prefix(s, 5)
    assert np.array_equal(s.prefix[:3], first)


@pytest.mark.parametrize("steps", [[100], [1, 7, 50, 100], [99, 100], [1500, 3000]])
def test_prefix_does_not_depend_on_growth_pattern(steps):
    ref = SampleStream(HeavyTailed1D(), 42)
    ref.extend(3000)
    s = SampleStream(HeavyTailed1D(), 42)
    for n in steps:
        s.extend(n)
    assert np.array_equal(s.prefix, ref.prefix[: steps[-1]])


def test_equal_seeds_equal_prefixes():
    a, b = SampleStream(Poisson1D(), 9), SampleStream(Poisson1D(), 9)
    a.extend(100)
    b.extend(100)
    assert np.array_equal(a.prefix, b.prefix)


def test_value_charge_exact():
    obj = AveragedObjective(SampleStream(Poisson1D(), 0), 10)
    meter = BudgetMeter(10)
    assert f_n_value(obj, [0.3], meter) is not None
    assert meter.remaining == 0 and meter.consumed == 10


def test_value_refused_atomically():
    obj = AveragedObjective(SampleStream(Poisson1D(), 0), 10)
    meter = BudgetMeter(9)
    assert f_n_value(obj, [0.3], meter) is None
    assert (meter.remaining, meter.consumed, meter.value_calls) == (9, 0, 0)


def test_point_mass_values():
    p = MeanEstimation1D(("point", 3.0))
    for n in (1, 17, 400):
        obj = AveragedObjective(SampleStream(p, n), n)
        assert f_n_value(obj, [0.0], BudgetMeter(10**4)) == 0.0
        assert f_n_grad(obj, [3.0], BudgetMeter(10**4)).tolist() == [0.0]


def test_grad_charge_trace():
    obj = AveragedObjective(SampleStream(Poisson1D(), 0), 10)
    meter = BudgetMeter(25)
    assert f_n_grad(obj, [0.0], meter) is not None
    assert meter.remaining == 15
    assert f_n_grad(obj, [0.0], BudgetMeter(0)) is None


def test_unit_costs_scale_charges():
    obj = AveragedObjective(SampleStream(Poisson1D(), 0), 7)
    meter = BudgetMeter(100, c_eval=3, c_grad=2)
    obj.value([0.1], meter)
    obj.grad([0.1], meter)
    assert meter.consumed == 7 * 3 + 7 * 2


def test_value_is_mean_of_pointwise_values():
    s = SampleStream(Poisson1D(), 3)
    obj = AveragedObjective(s, 250)
    theta = np.array([0.4])
    expected = sum(Poisson1D().values(theta, s.prefix[i : i + 1])[0] for i in range(250)) / 250
    assert obj.value(theta, BudgetMeter(10**6)) == pytest.approx(expected, rel=1e-13)


def test_value_is_pure_function_of_theta():
    obj = AveragedObjective(SampleStream(HeavyTailed1D(), 5), 300)
    a = obj.value([0.2], BudgetMeter(10**6))
    obj.value([1.7], BudgetMeter(10**6))
    assert obj.value([0.2], BudgetMeter(10**6)) == a


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 2000), extra=st.integers(1, 2000), theta=st.floats(-1.5, 1.5), seed=st.integers(0, 2**31))
def test_prefix_nesting(n, extra, theta, seed):
    p = Poisson1D()
    s = SampleStream(p, seed)
    m = n + extra
    Fn = AveragedObjective(s, n).value_uncharged([theta])
    Fm = AveragedObjective(s, m).value_uncharged([theta])
    tail = np.sum(p.values(np.array([theta]), s.prefix[n:m]))
    scale = np.sum(np.abs(p.values(np.array([theta]), s.prefix[:m])))
    assert abs(m * Fm - n * Fn - tail) <= 1e-12 * scale


@settings(max_examples=100, deadline=None)
@given(budget=st.integers(0, 10**6), ops=st.lists(st.tuples(st.booleans(), st.integers(1, 5000)), max_size=40))
def test_meter_conservation_and_atomicity(budget, ops):
    meter = BudgetMeter(budget, c_eval=2, c_grad=3)
    for is_grad, n in ops:
        before = (meter.remaining, meter.consumed)
        ok = meter.charge_grad(n) if is_grad else meter.charge_value(n)
        if not ok:
            assert (meter.remaining, meter.consumed) == before
        assert meter.remaining >= 0
        assert meter.remaining + meter.consumed == budget


def test_meter_rejects_bad_arguments():
    with pytest.raises(ValueError):
        BudgetMeter(-1)
    with pytest.raises(ValueError):
        BudgetMeter(10, c_eval=0)
    with pytest.raises(ValueError):
        BudgetMeter(10).charge(-3)
