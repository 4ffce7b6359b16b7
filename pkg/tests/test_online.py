import math

import numpy as np
import pytest

from cost_functions import CostFunction
from exceptions import ParameterError, UsageError
from model import ProblemInstance, is_feasible
from offline_solver import solve_offline
from online_algorithms import (
    AlgorithmA, AlgorithmB, OnlineState, competitive_bound, competitive_ratio,
    create_algorithm, dwell_time, dwell_times, expiry_slots, run_online, sub_slot_count
)
from prefix_optimizer import PrefixOptimizer, PrefixStep, prefix_feed
from workload import random_tiny_instance

IDLE_SEQUENCE = [3, 1, 4, 1, 2, 1, 1, 2, 3, 5, 1, 3]


class ScriptedOptimizer:
    """Hands out a fixed sequence of prefix targets"""

    def __init__(self, targets):
        self.targets = list(targets)
        self.t = 0

    def feed_slot(self, volume, functions, scale=1.0):
        self.t += 1
        return PrefixStep(t=self.t, config=tuple(self.targets[self.t - 1]), cost=0.0)


def _scripted(algorithm, targets):
    algorithm.optimizer = ScriptedOptimizer([(x,) for x in targets])
    return algorithm


# ----------------------------------------------------------------------
# Ski-rental helpers
# ----------------------------------------------------------------------

def test_dwell_time():
    assert dwell_time(6.0, 4.0) == 2
    assert dwell_time(6.0, 2.0) == 3
    assert dwell_time(5.0, 1.0) == 5
    assert math.isinf(dwell_time(5.0, 0.0))
    assert dwell_time(5.0, 0.0, horizon=7) == 7
    # any positive β keeps a server on for at least its own slot
    assert dwell_time(1e-10, 1.0) == 1
    assert dwell_time(0.3, 0.1) == 3


def test_dwell_times_follow_idle_sums():
    assert dwell_times(IDLE_SEQUENCE, 6.0)[:3] == [3, 2, 4]
    assert dwell_times(IDLE_SEQUENCE, 6.0)[-1] == 0


def test_expiry_slots_from_prefix_sums():
    sums = np.concatenate([[0.0], np.cumsum(IDLE_SEQUENCE)])
    expected = {5: [1, 2], 8: [3], 9: [4, 5], 10: [6, 7, 8], 12: [9]}
    for t in range(1, len(IDLE_SEQUENCE) + 1):
        assert expiry_slots(sums, 6.0, t) == expected.get(t, []), f"slot {t}"


def test_expiry_is_one_slot_after_dwell():
    sums = np.concatenate([[0.0], np.cumsum(IDLE_SEQUENCE)])
    dwell = dwell_times(IDLE_SEQUENCE, 6.0)
    for t in range(1, len(IDLE_SEQUENCE) + 1):
        for u in expiry_slots(sums, 6.0, t):
            assert t == u + dwell[u - 1] + 1


def test_sub_slot_count():
    assert sub_slot_count([1.0, 0.5], [1.0, 1.0], 0.5) == 4
    assert sub_slot_count([0.0, 0.0], [1.0, 2.0], 0.5) == 1
    assert sub_slot_count([1.0], [3.0], 1.0) == 1
    with pytest.raises(ParameterError):
        sub_slot_count([1.0], [1.0], 0.0)


def test_competitive_bounds(two_type_instance):
    assert competitive_bound(two_type_instance, "a") == 5.0
    assert competitive_bound(two_type_instance, "b") == pytest.approx(5.0 + 1.0 / 4.0 + 0.5 / 2.5)
    assert competitive_bound(two_type_instance, "c", 0.5) == 5.5
    flat = ProblemInstance.build(
        beta=[1.0], fleet=[1], cost_functions=[CostFunction.constant(1.0, 1.0)], volumes=[0.5]
    )
    assert competitive_bound(flat, "a") == 2.0


def test_competitive_ratio_with_zero_optimum():
    assert competitive_ratio(0.0, 0.0) == (1.0, True)
    ratio, opt_zero = competitive_ratio(1.0, 0.0)
    assert math.isinf(ratio) and opt_zero
    assert competitive_ratio(3.0, 2.0) == (1.5, False)


# ----------------------------------------------------------------------
# Prefix optimizer
# ----------------------------------------------------------------------

def test_prefix_feed_single_slot():
    optimizer = PrefixOptimizer([5.0], [1])
    config, cost = prefix_feed(optimizer, 1.0, [CostFunction.affine(0.0, 1.0, 1.0)])
    assert config == (1,)
    assert cost == pytest.approx(6.0)


def test_prefix_cost_matches_offline_prefix(rng):
    for _ in range(30):
        instance = random_tiny_instance(rng, T_max=5, time_dependent=True)
        optimizer = PrefixOptimizer(instance.beta, instance.fleet)
        for t in range(1, instance.T + 1):
            step = optimizer.feed_slot(instance.volume(t), instance.functions_at(t))
            expected = solve_offline(instance.prefix(t), cost_only=True).dp_cost
            assert step.cost == pytest.approx(expected, rel=1e-9, abs=1e-9)
            assert step.t == t


# ----------------------------------------------------------------------
# Ledger
# ----------------------------------------------------------------------

def test_ledger_rejects_double_expiry():
    state = OnlineState(d=1)
    state.open_slot()
    state.top_up((2,))
    state.open_slot()
    state.expire(1, 0)
    assert state.config == [0]
    with pytest.raises(RuntimeError):
        state.expire(1, 0)


def test_algorithm_a_dwell_trajectory():
    targets = (1, 1, 1, 2, 2, 0, 0, 3, 3, 2, 2, 1, 0, 0)
    functions = (CostFunction.affine(1.0, 0.0, 10.0),)
    algorithm = _scripted(AlgorithmA([5.0], [3], functions), targets)
    assert algorithm.dwell == [5.0]

    emitted = [algorithm.step(t, 0.0, functions)[0] for t in range(1, len(targets) + 1)]
    assert emitted == [1, 1, 1, 2, 2, 1, 1, 3, 3, 3, 3, 3, 1, 0]
    assert algorithm.state.conservation_holds()
    assert algorithm.state.dominance_holds()
    assert algorithm.state.expiry_slots_of(0) == {1: 6, 4: 9, 8: 13, 9: 14}


def test_algorithm_b_runs_servers_one_slot_longer_on_integer_ratio():
    targets = (1, 0, 0, 0, 0, 2, 0, 0, 0, 0)
    functions = (CostFunction.affine(2.0, 0.0, 10.0),)
    a = _scripted(AlgorithmA([6.0], [2], functions), targets)
    b = _scripted(AlgorithmB([6.0], [2]), targets)
    for t in range(1, len(targets) + 1):
        a.step(t, 0.0, functions)
        b.step(t, 0.0, functions)
    a_expiry = a.state.expiry_slots_of(0)
    b_expiry = b.state.expiry_slots_of(0)
    assert a_expiry == {1: 4, 6: 9}
    assert b_expiry == {u: slot + 1 for u, slot in a_expiry.items()}


def test_algorithm_b_shift_holds_for_fractional_idle_costs():
    # 0.1 + 0.1 + 0.1 sums to slightly more than 0.3 in floating point
    targets = (1, 0, 0, 0, 0, 0)
    functions = (CostFunction.affine(0.1, 0.0, 10.0),)
    a = _scripted(AlgorithmA([0.3], [1], functions), targets)
    b = _scripted(AlgorithmB([0.3], [1]), targets)
    for t in range(1, len(targets) + 1):
        a.step(t, 0.0, functions)
        b.step(t, 0.0, functions)
    assert a.state.expiry_slots_of(0) == {1: 4}
    assert b.state.expiry_slots_of(0) == {1: 5}
    assert b.state.conservation_holds()


def test_algorithm_a_with_tiny_switching_cost_powers_down():
    targets = (1, 0, 0, 0)
    functions = (CostFunction.affine(1.0, 0.0, 10.0),)
    algorithm = _scripted(AlgorithmA([1e-10], [1], functions), targets)
    emitted = [algorithm.step(t, 0.0, functions)[0] for t in range(1, len(targets) + 1)]
    assert emitted == [1, 0, 0, 0]
    assert algorithm.state.conservation_holds()
    assert algorithm.state.expiry_slots_of(0) == {1: 2}


def test_slots_must_arrive_in_order(two_type_instance):
    algorithm = create_algorithm("b", two_type_instance)
    algorithm.step(1, 0.5, two_type_instance.functions_at(1))
    with pytest.raises(UsageError):
        algorithm.step(3, 3.5, two_type_instance.functions_at(3))


def test_algorithm_a_rejects_changing_functions():
    functions = (CostFunction.affine(1.0, 1.0, 1.0),)
    algorithm = AlgorithmA([1.0], [1], functions)
    with pytest.raises(UsageError):
        algorithm.step(1, 0.5, (CostFunction.affine(2.0, 1.0, 1.0),))


# ----------------------------------------------------------------------
# Usage conditions
# ----------------------------------------------------------------------

def test_usage_errors(rng):
    instance = random_tiny_instance(rng)
    with pytest.raises(UsageError):
        run_online(instance, "d")
    with pytest.raises(ParameterError):
        run_online(instance, "c")

    changing = ProblemInstance.build(
        beta=[1.0], fleet=[1],
        cost_functions=[[CostFunction.affine(1.0, 1.0, 1.0)], [CostFunction.affine(2.0, 1.0, 1.0)]],
        volumes=[0.5, 0.5]
    )
    with pytest.raises(UsageError):
        run_online(changing, "a")
    assert run_online(changing, "b").schedule.T == 2

    shrinking = ProblemInstance.build(
        beta=[1.0], fleet=[[2], [1]], cost_functions=[CostFunction.affine(1.0, 1.0, 1.0)],
        volumes=[0.5, 0.5]
    )
    with pytest.raises(UsageError):
        run_online(shrinking, "b")


def test_constant_fleet_written_per_slot_is_accepted(two_type_instance):
    expanded = two_type_instance.with_time_dependent_fleet()
    assert run_online(expanded, "b").schedule == run_online(two_type_instance, "b").schedule


# ----------------------------------------------------------------------
# Competitive audits
# ----------------------------------------------------------------------

def _check_run(result, instance):
    assert is_feasible(result.schedule, instance)
    assert not result.violation, f"{result.algorithm}: ratio {result.ratio} > bound {result.bound}"
    assert result.state.dominance_holds()


def test_algorithm_a_audit(rng):
    for _ in range(200):
        instance = random_tiny_instance(rng)
        result = run_online(instance, "a")
        _check_run(result, instance)
        assert result.state.conservation_holds()
        assert result.bound == 2.0 * instance.d + 1.0 or instance.load_independent


def test_algorithm_a_load_independent_bound(rng):
    for _ in range(100):
        instance = random_tiny_instance(rng, load_independent=True)
        result = run_online(instance, "a")
        assert result.bound == 2.0 * instance.d
        _check_run(result, instance)


def test_algorithm_b_audit(rng):
    for i in range(200):
        instance = random_tiny_instance(rng, time_dependent=(i % 4 != 0))
        result = run_online(instance, "b")
        _check_run(result, instance)
        assert result.state.conservation_holds()


@pytest.mark.parametrize("epsilon", [0.25, 0.5, 1.0])
def test_algorithm_c_audit(rng, epsilon):
    for _ in range(100):
        instance = random_tiny_instance(rng, time_dependent=True)
        result = run_online(instance, "c", epsilon=epsilon)
        _check_run(result, instance)
        assert result.cost_transfer_ok
        assert result.bound == pytest.approx(2.0 * instance.d + 1.0 + epsilon)
        assert len(result.sub_slots) == instance.T
        assert all(n >= 1 for n in result.sub_slots)


def test_algorithm_c_inner_run_keeps_ledger():
    instance = ProblemInstance.build(
        beta=[2.0, 1.0], fleet=[2, 1],
        cost_functions=[CostFunction.affine(1.0, 1.0, 1.0), CostFunction.power(0.5, 1.0, 2.0, 2.0)],
        volumes=[1.0, 3.0, 0.0, 2.0]
    )
    algorithm = create_algorithm("c", instance, epsilon=0.25)
    for t in range(1, instance.T + 1):
        algorithm.step(t, instance.volume(t), instance.functions_at(t))
    assert algorithm.sub_slots == [4, 4, 4, 4]
    assert algorithm.inner.state.t == 16
    assert algorithm.inner.state.conservation_holds()
    assert algorithm.inner.state.dominance_holds()
    assert all(4 * (t - 1) < u <= 4 * t for t, u in enumerate(algorithm.chosen, start=1))
    assert algorithm.inner_schedule().T == 16


def test_algorithm_c_picks_earliest_sub_slot_on_ties():
    # one server must run in every sub-slot, so all sub-slots cost the same
    instance = ProblemInstance.build(
        beta=[1.0], fleet=[1], cost_functions=[CostFunction.affine(1.0, 1.0, 1.0)],
        volumes=[0.5, 0.5, 0.5]
    )
    result = run_online(instance, "c", epsilon=0.5)
    assert result.sub_slots == [2, 2, 2]
    assert result.schedule.configs == ((1,), (1,), (1,))

    algorithm = create_algorithm("c", instance, epsilon=0.5)
    for t in range(1, instance.T + 1):
        algorithm.step(t, instance.volume(t), instance.functions_at(t))
    assert algorithm.chosen == [1, 3, 5]
    assert [algorithm.inner_operating[u - 1] for u in algorithm.chosen] == [min(algorithm.inner_operating)] * 3


def test_online_decisions_ignore_the_future(rng):
    for _ in range(30):
        instance = random_tiny_instance(rng, T_max=6, time_dependent=True)
        full = run_online(instance, "b", audit=False)
        for t in range(1, instance.T):
            prefix = run_online(instance.prefix(t), "b", audit=False)
            assert prefix.schedule.configs == full.schedule.configs[:t]


def test_zero_workload_costs_nothing(two_type_instance):
    idle = ProblemInstance.build(
        beta=two_type_instance.beta, fleet=two_type_instance.fleet,
        cost_functions=two_type_instance.cost_functions, volumes=[0.0] * 3
    )
    for algorithm in ("a", "b"):
        result = run_online(idle, algorithm)
        assert result.cost == 0.0
        assert result.opt_zero and result.ratio == 1.0 and not result.violation


def test_gamma_prefix_heuristic_stays_feasible(rng):
    for _ in range(20):
        instance = random_tiny_instance(rng, m_max=8)
        result = run_online(instance, "b", gamma=2.0, audit=False)
        assert is_feasible(result.schedule, instance)
        assert result.ratio is None
