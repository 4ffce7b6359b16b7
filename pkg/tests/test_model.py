import pytest

from cost_functions import CostFunction
from exceptions import DimensionMismatchError, InfeasibleScheduleError, InstanceValidationError
from model import ProblemInstance, Schedule, is_feasible, schedule_cost, switching_cost, validate_instance
from workload import random_tiny_instance


def test_validate_reports_infeasible_slot():
    instance = ProblemInstance.build(
        beta=[1.0], fleet=[1], cost_functions=[CostFunction.affine(1.0, 1.0, 1.0)], volumes=[2.0]
    )
    report = validate_instance(instance)
    assert not report.ok
    assert report.violations == ["slot 1 infeasible: capacity 1 < volume 2"]
    with pytest.raises(InstanceValidationError):
        report.raise_if_invalid()


def test_validate_reports_non_convex_function():
    f = CostFunction.piecewise([(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)], 2.0)
    instance = ProblemInstance.build(beta=[1.0], fleet=[1], cost_functions=[f], volumes=[0.0])
    report = validate_instance(instance)
    assert any("non-convex: slope decreases 2→1" in v for v in report.violations)


def test_validate_accepts_two_types_two_slots():
    instance = ProblemInstance.build(
        beta=[2.0, 3.0],
        fleet=[2, 1],
        cost_functions=[CostFunction.affine(1.0, 1.0, 1.0), CostFunction.affine(0.5, 2.0, 2.0)],
        volumes=[1.5, 3.0]
    )
    assert validate_instance(instance).ok


def test_validate_reports_dimension_mismatch_and_beta():
    f = CostFunction.affine(1.0, 1.0, 1.0)
    instance = ProblemInstance(T=2, d=1, beta=(1.0,), fleet=(1,), cost_functions=(f,), volumes=(0.0,))
    assert any("dimension mismatch" in v for v in validate_instance(instance).violations)

    instance = ProblemInstance.build(beta=[0.0], fleet=[1], cost_functions=[f], volumes=[0.0])
    assert validate_instance(instance).violations == ["beta_1 must be > 0, got 0"]


def test_is_feasible_messages():
    f = CostFunction.affine(1.0, 1.0, 1.0)
    instance = ProblemInstance.build(beta=[1.0], fleet=[2], cost_functions=[f], volumes=[1.0])
    check = is_feasible(Schedule.from_rows([[0]]), instance)
    assert not check
    assert check.violation == "slot 1: capacity 0 < 1"
    check = is_feasible(Schedule.from_rows([[3]]), instance)
    assert check.violation == "slot 1: x_1=3 > m=2"
    assert check.slot == 1

    idle = ProblemInstance.build(beta=[1.0], fleet=[2], cost_functions=[f], volumes=[0.0, 0.0])
    assert is_feasible(Schedule.zeros(2, 1), idle)


def test_is_feasible_rejects_wrong_shape(single_server):
    with pytest.raises(DimensionMismatchError):
        is_feasible(Schedule.from_rows([[1], [1]]), single_server)
    with pytest.raises(DimensionMismatchError):
        is_feasible(Schedule.from_rows([[1, 0]]), single_server)


def test_schedule_cost_charges_power_ups_only():
    instance = ProblemInstance.build(
        beta=[2.0], fleet=[1], cost_functions=[CostFunction.constant(1.0, 1.0)], volumes=[0.0, 0.0, 0.0]
    )
    breakdown = schedule_cost(Schedule.from_rows([[1], [0], [1]]), instance)
    assert breakdown.switching_total == pytest.approx(4.0)
    assert breakdown.operating_total == pytest.approx(2.0)
    assert breakdown.grand_total == pytest.approx(6.0)
    assert breakdown.per_slot == ((1.0, 2.0), (0.0, 0.0), (1.0, 2.0))


def test_schedule_cost_zero_workload(two_type_instance):
    idle = ProblemInstance.build(
        beta=two_type_instance.beta, fleet=two_type_instance.fleet,
        cost_functions=two_type_instance.cost_functions, volumes=[0.0] * 4
    )
    assert schedule_cost(Schedule.zeros(4, 2), idle).grand_total == 0.0


def test_schedule_cost_rejects_infeasible(single_server):
    with pytest.raises(InfeasibleScheduleError) as info:
        schedule_cost(Schedule.from_rows([[0]]), single_server)
    assert info.value.slot == 1
    assert "slot 1" in str(info.value)


def test_switching_scales_with_beta_and_balances_power_downs(rng):
    for _ in range(50):
        instance = random_tiny_instance(rng)
        rows = [[int(rng.integers(0, m + 1)) for m in instance.fleet_at(t)] for t in range(1, instance.T + 1)]
        # keep the schedule feasible by powering the whole fleet where needed
        for t, row in enumerate(rows, start=1):
            if instance.capacity(t, row) < instance.volume(t):
                rows[t - 1] = list(instance.fleet_at(t))
        schedule = Schedule.from_rows(rows)
        base = schedule_cost(schedule, instance)

        doubled = ProblemInstance.build(
            beta=[2.0 * b for b in instance.beta], fleet=instance.fleet,
            cost_functions=instance.cost_functions, volumes=instance.volumes
        )
        scaled = schedule_cost(schedule, doubled)
        assert scaled.switching_total == pytest.approx(2.0 * base.switching_total)
        assert scaled.operating_total == pytest.approx(base.operating_total)

        padded = [(0,) * instance.d] + list(schedule.configs) + [(0,) * instance.d]
        ups = sum(switching_cost(a, b, instance.beta) for a, b in zip(padded, padded[1:]))
        downs = sum(switching_cost(b, a, instance.beta) for a, b in zip(padded, padded[1:]))
        assert ups == pytest.approx(downs)
        assert base.grand_total == pytest.approx(sum(op + sw for op, sw in base.per_slot))


def test_instance_transforms(two_type_instance):
    prefix = two_type_instance.prefix(3)
    assert prefix.T == 3 and prefix.volumes == (0.5, 2.0, 3.5)
    expanded = two_type_instance.with_time_dependent_fleet()
    assert expanded.fleet_time_dependent and expanded.fleet_constant
    assert expanded.fleet_at(5) == (3, 2)
    swapped = two_type_instance.permuted([1, 0])
    assert swapped.beta == (2.5, 4.0)
    assert swapped.functions_at(1)[0] == two_type_instance.functions_at(1)[1]
    assert two_type_instance.time_independent
    assert two_type_instance.idle_ratio_constant() == pytest.approx(1.0 / 4.0 + 0.5 / 2.5)
