"""
RightSize Studio - Approximate Offline Solver
기하 격자 M^γ 위의 레이어 DP로 (2γ−1)-근사 스케줄 계산

M^γ_j = {0, 1, ⌊γ⌋, ⌈γ⌉, ⌊γ²⌋, ⌈γ²⌉, …, m_j}
ε 인터페이스: γ = 1 + ε/2 → 근사 비율 1 + ε
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from allocation import OperatingCostCache
from exceptions import ParameterError
from model import ProblemInstance, costs_close, validate_instance
from offline_solver import LayerGrid, OfflineSolution, solve_layered, solve_offline

# γ^k가 정수에 이만큼 가까우면 반올림 값도 포함
_DRIFT_TOL = 1e-9


@lru_cache(maxsize=1024)
def gamma_values(m: int, gamma: float) -> Tuple[int, ...]:
    """
    타입 하나의 허용 서버 수 (오름차순)

    Args:
        m: 최대 서버 수
        gamma: 격자 비율 (> 1)
    """
    if not gamma > 1.0:
        raise ParameterError(f"gamma must be > 1, got {gamma:g}")
    values = {0, m}
    if m >= 1:
        values.add(1)

    power = gamma
    while power <= m:
        values.add(math.floor(power))
        ceiling = math.ceil(power)
        if ceiling <= m:
            values.add(ceiling)
        nearest = round(power)
        if abs(power - nearest) < _DRIFT_TOL and nearest <= m:
            values.add(nearest)
        power *= gamma
    return tuple(sorted(values))


def gamma_for_epsilon(epsilon: float) -> float:
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be > 0, got {epsilon:g}")
    return 1.0 + epsilon / 2.0


@dataclass(frozen=True)
class GammaGrid:
    """슬롯·타입별 기하 격자"""
    gamma: float
    values_by_slot: Tuple[Tuple[Tuple[int, ...], ...], ...]

    @property
    def T(self) -> int:
        return len(self.values_by_slot)

    def values(self, j: int, t: int = 1) -> Tuple[int, ...]:
        return self.values_by_slot[t - 1][j]

    def successor(self, j: int, x: int, t: int = 1) -> int:
        """N_j(x): 격자에서 x 다음 값 (x가 최대면 x)"""
        values = self.values(j, t)
        pos = int(np.searchsorted(values, x, side="right"))
        return values[pos] if pos < len(values) else x

    def layer(self, t: int) -> LayerGrid:
        return LayerGrid.from_values(self.values_by_slot[t - 1])

    @property
    def size(self) -> int:
        return sum(int(np.prod([len(v) for v in row])) for row in self.values_by_slot)


def build_gamma_grid(fleet, gamma: float, T: int = 1) -> GammaGrid:
    """
    fleet (타입별 m_j 또는 슬롯별 행)에 대한 γ-격자

    Raises:
        ParameterError: γ ≤ 1
    """
    if not gamma > 1.0:
        raise ParameterError(f"gamma must be > 1, got {gamma:g}")
    if fleet and isinstance(fleet[0], (list, tuple)):
        rows = [tuple(int(m) for m in row) for row in fleet]
    else:
        rows = [tuple(int(m) for m in fleet)] * T
    return GammaGrid(
        gamma=float(gamma),
        values_by_slot=tuple(tuple(gamma_values(m, float(gamma)) for m in row) for row in rows)
    )


def solve_approx(
    instance: ProblemInstance,
    epsilon: Optional[float] = None,
    gamma: Optional[float] = None,
    cost_only: bool = False,
    audit: bool = False,
    state_ceiling: Optional[int] = None
) -> OfflineSolution:
    """
    (2γ−1)-근사 오프라인 스케줄

    Args:
        epsilon: γ = 1 + ε/2 로 변환 (gamma와 둘 중 하나)
        gamma: 격자 비율 직접 지정
        audit: 정확해를 함께 계산하여 reference_cost 기록

    Raises:
        ParameterError, InfeasibleInstanceError, StateSpaceExceededError
    """
    validate_instance(instance).raise_if_invalid()
    if gamma is None:
        if epsilon is None:
            raise ParameterError("solve_approx needs epsilon or gamma")
        gamma = gamma_for_epsilon(epsilon)

    grid = build_gamma_grid(instance.fleet, gamma, T=instance.T)
    layers = [grid.layer(t) for t in range(1, instance.T + 1)]
    cache = OperatingCostCache(instance)

    solution = solve_layered(
        instance, layers, cache=cache, cost_only=cost_only,
        state_ceiling=state_ceiling, gamma=float(gamma)
    )
    logger.info(
        f"✅ 근사 해 (γ={gamma:g}, 보장 {solution.bound:g}): 비용 {solution.cost:.9f}, "
        f"격자점 {grid.size:,}"
    )

    if audit:
        exact = solve_offline(instance, cost_only=True, state_ceiling=state_ceiling, cache=cache)
        solution.reference_cost = exact.dp_cost
        if not solution.within_bound:
            logger.warning(
                f"⚠️ 근사 보장 위반: {solution.cost:.9f} > {solution.bound:g} × {exact.dp_cost:.9f}"
            )
        elif costs_close(solution.cost, exact.dp_cost):
            logger.debug("근사 해가 정확해와 동일")
    return solution
