"""
RightSize Studio - Brute-Force References
테스트와 verify 명령이 사용하는 독립 기준 구현 (소규모 전용)

- brute_force_offline: 모든 구성 수열을 numpy 브로드캐스트로 전수 평가
- grid_search_allocation: 단체(simplex)를 1/N 간격으로 격자 탐색
"""
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from config import settings
from allocation import OperatingCostCache
from cost_functions import CostFunction
from exceptions import BudgetExceededError, InfeasibleInstanceError, ParameterError
from model import ProblemInstance, Schedule, schedule_cost, switching_cost, validate_instance


@dataclass
class EnumerationBudget:
    """전수 탐색 상한: ∏_t ∏_j (m_{t,j}+1) ≤ max_states"""
    max_states: int = field(default_factory=lambda: settings.enumeration_budget)

    @staticmethod
    def count(instance: ProblemInstance) -> int:
        total = 1
        for t in range(1, instance.T + 1):
            total *= math.prod(m + 1 for m in instance.fleet_at(t))
        return total

    def check(self, instance: ProblemInstance) -> int:
        states = self.count(instance)
        if states > self.max_states:
            raise BudgetExceededError(
                f"enumeration needs {states:,} schedules, budget is {self.max_states:,}"
            )
        return states


def _slot_configs(fleet: Sequence[int]):
    return list(itertools.product(*(range(m + 1) for m in fleet)))


def brute_force_offline(
    instance: ProblemInstance,
    budget: Optional[EnumerationBudget] = None
) -> Tuple[Schedule, float]:
    """
    모든 스케줄 중 최소 비용 (동률은 사전식 최소 스케줄)

    Raises:
        BudgetExceededError, InfeasibleInstanceError
    """
    validate_instance(instance).raise_if_invalid()
    budget = budget or EnumerationBudget()
    states = budget.check(instance)

    cache = OperatingCostCache(instance)
    T = instance.T
    slots = [_slot_configs(instance.fleet_at(t)) for t in range(1, T + 1)]
    shape = tuple(len(configs) for configs in slots)
    total = np.zeros(shape)

    previous = [(0,) * instance.d]
    for t, configs in enumerate(slots, start=1):
        operating = np.array([cache.get(t, config) for config in configs])
        switching = np.array([
            [switching_cost(prev, config, instance.beta) for config in configs]
            for prev in previous
        ])
        axis_shape = [1] * T
        axis_shape[t - 1] = -1
        total = total + operating.reshape(axis_shape)
        if t == 1:
            total = total + switching[0].reshape(axis_shape)
        else:
            pair_shape = [1] * T
            pair_shape[t - 2] = len(previous)
            pair_shape[t - 1] = len(configs)
            total = total + switching.reshape(pair_shape)
        previous = configs

    flat = int(np.argmin(total))
    if not math.isfinite(total.flat[flat]):
        raise InfeasibleInstanceError("every schedule is infeasible")
    index = np.unravel_index(flat, shape)
    schedule = Schedule(configs=tuple(slots[t][i] for t, i in enumerate(index)))
    cost = schedule_cost(schedule, instance, cache).grand_total
    logger.debug(f"🔎 전수 탐색 {states:,}개 스케줄: 최소 {cost:.9f}")
    return schedule, cost


def _single_type_costs(x: int, shares: np.ndarray, volume: float, f: CostFunction) -> np.ndarray:
    """eval_g_single을 z 배열에 대해 벡터화"""
    loads = volume * shares
    if x == 0:
        return np.where(loads > 0, np.inf, 0.0)
    return x * np.asarray(f(loads / x), dtype=float)


def grid_search_allocation(
    x: Sequence[int],
    volume: float,
    functions: Sequence[CostFunction],
    resolution: Optional[int] = None
) -> float:
    """
    min Σ_j g_{t,j}(x_j, z_j) over z ∈ {k/N} ∩ simplex (d ≤ 3)

    Raises:
        ParameterError: d > 3 또는 N < 1
    """
    N = resolution or settings.grid_search_resolution
    d = len(x)
    if d > 3:
        raise ParameterError(f"grid search supports d <= 3, got d = {d}")
    if N < 1:
        raise ParameterError(f"resolution must be >= 1, got {N}")

    shares = np.arange(N + 1) / N
    costs = [_single_type_costs(int(x[j]), shares, volume, functions[j]) for j in range(d)]

    if d == 1:
        return float(costs[0][N])
    k = np.arange(N + 1)
    if d == 2:
        return float(np.min(costs[0] + costs[1][N - k]))

    k1, k2 = np.meshgrid(k, k, indexing="ij")
    rest = N - k1 - k2
    valid = rest >= 0
    combined = costs[0][k1] + costs[1][k2] + costs[2][np.where(valid, rest, 0)]
    return float(np.min(np.where(valid, combined, np.inf)))


def discretization_allowance(
    x: Sequence[int],
    volume: float,
    functions: Sequence[CostFunction],
    resolution: Optional[int] = None
) -> float:
    """
    격자 탐색이 정확한 최소보다 클 수 있는 최대 폭

    가장 가까운 실행 가능 격자점까지 이동하는 부하는 d·λ/N 이하,
    이동한 부하 단위당 비용 증가는 최대 한계 비용 이하.
    """
    N = resolution or settings.grid_search_resolution
    active = [f for count, f in zip(x, functions) if count > 0]
    if len(active) < 2:
        return 0.0
    steepest = max(f.right_derivative(f.z_max) for f in active)
    return len(x) * volume / N * steepest
