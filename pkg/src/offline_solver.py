"""
RightSize Studio - Optimal Offline Solver
계층 격자 그래프 G(I)의 최단 경로를 레이어별 DP 스윕으로 계산

그래프는 만들지 않음. 레이어 t마다:
    A_t  도착 값 (이전 레이어에서 0-가중치로 넘어옴)
    U_t  = relax_up(A_t)        전원 켜기 간선 (가중치 β_j·Δx)
    V_t  = U_t + g_t            운영 간선
    B_t  = relax_down(V_t)      전원 끄기 간선 (가중치 0)
    A_{t+1} = B_t를 다음 레이어 격자로 제한
최적 비용 = min_x V_T(x) (= B_T(0)).
"""
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from config import settings
from allocation import OperatingCostCache, ServerConfig
from exceptions import InfeasibleInstanceError, StateSpaceExceededError
from model import CostBreakdown, ProblemInstance, Schedule, costs_close, schedule_cost, validate_instance


@dataclass(frozen=True)
class LayerGrid:
    """레이어의 허용 구성 격자 (타입별 오름차순 서버 수 축의 곱)"""
    axes: Tuple[np.ndarray, ...]

    @classmethod
    def box(cls, fleet: Sequence[int]) -> "LayerGrid":
        """정확한 격자 ∏_j [0, m_j]"""
        return cls(axes=tuple(np.arange(m + 1, dtype=int) for m in fleet))

    @classmethod
    def from_values(cls, values: Sequence[Sequence[int]]) -> "LayerGrid":
        return cls(axes=tuple(np.array(sorted(set(v)), dtype=int) for v in values))

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(axis) for axis in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def d(self) -> int:
        return len(self.axes)

    def axis_values(self, j: int) -> np.ndarray:
        """축 j 값을 브로드캐스트 가능한 모양으로"""
        shape = [1] * self.d
        shape[j] = -1
        return self.axes[j].reshape(shape)

    def config_at(self, index: Tuple[int, ...]) -> ServerConfig:
        return tuple(int(self.axes[j][i]) for j, i in enumerate(index))

    def index_of(self, config: Sequence[int]) -> Optional[Tuple[int, ...]]:
        index = []
        for axis, value in zip(self.axes, config):
            pos = int(np.searchsorted(axis, value))
            if pos >= len(axis) or axis[pos] != value:
                return None
            index.append(pos)
        return tuple(index)

    def configs(self):
        """사전식 순서로 모든 구성"""
        for index in np.ndindex(*self.shape):
            yield self.config_at(index)

    def __eq__(self, other):
        if not isinstance(other, LayerGrid) or other.d != self.d:
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))

    def __hash__(self):
        return hash(tuple(tuple(axis.tolist()) for axis in self.axes))


@dataclass
class LayerValueTable:
    """격자 위 DP 값 (도달 불가는 +inf)"""
    grid: LayerGrid
    values: np.ndarray

    @classmethod
    def origin(cls, grid: LayerGrid) -> "LayerValueTable":
        """A_1: 0 구성만 0, 나머지 +inf"""
        values = np.full(grid.shape, np.inf)
        values[(0,) * grid.d] = 0.0
        return cls(grid=grid, values=values)

    def value(self, config: Sequence[int]) -> float:
        index = self.grid.index_of(config)
        return math.inf if index is None else float(self.values[index])

    def argmin(self) -> Tuple[ServerConfig, float]:
        """최소값과 사전식 최소 구성"""
        flat = int(np.argmin(self.values))
        index = np.unravel_index(flat, self.grid.shape)
        return self.grid.config_at(index), float(self.values[index])

    def copy(self) -> "LayerValueTable":
        return LayerValueTable(grid=self.grid, values=self.values.copy())


def layer_relax_up(arrivals: LayerValueTable, beta: Sequence[float]) -> LayerValueTable:
    """
    전원 켜기 스윕: U(x) = min_{x' ≤ x} A(x') + Σ_j β_j (x_j − x'_j)

    타입 j마다 x_j 증가 방향으로 U(x) ← min(U(x), U(x − step_j) + β_j·(값 차이)).
    γ-격자에서는 한 칸 비용이 β_j (N_j(x_j) − x_j)이므로 합이 그대로 telescoping.
    """
    table = arrivals.copy()
    for j, axis in enumerate(table.grid.axes):
        steps = np.diff(axis).astype(float) * beta[j]
        view = np.moveaxis(table.values, j, 0)
        for i in range(1, len(axis)):
            np.minimum(view[i, ...], view[i - 1, ...] + steps[i - 1], out=view[i, ...])
    return table


def layer_relax_down(values: LayerValueTable) -> LayerValueTable:
    """전원 끄기 스윕: B(x) = min_{x' ≥ x} V(x') (접미 최소)"""
    table = values.copy()
    for j in range(table.grid.d):
        view = np.moveaxis(table.values, j, 0)
        suffix = np.minimum.accumulate(view[::-1], axis=0)[::-1]
        view[...] = suffix
    return table


def restrict_to_grid(table: LayerValueTable, grid: LayerGrid) -> LayerValueTable:
    """
    다음 레이어로 넘어가는 0-가중치 간선

    두 격자 모두에 있는 구성만 값을 넘기고, 나머지는 +inf (제거된 정점).
    """
    if table.grid == grid:
        return table.copy()

    positions = []
    mask = np.ones(grid.shape, dtype=bool)
    for j, (current, target) in enumerate(zip(table.grid.axes, grid.axes)):
        pos = np.minimum(np.searchsorted(current, target), len(current) - 1)
        present = current[pos] == target
        shape = [1] * grid.d
        shape[j] = -1
        mask &= present.reshape(shape)
        positions.append(pos)
    gathered = table.values[np.ix_(*positions)]
    return LayerValueTable(grid=grid, values=np.where(mask, gathered, np.inf))


@dataclass
class LayerRecord:
    """역추적용 레이어 기록"""
    arrivals: LayerValueTable
    operating: LayerValueTable  # V_t


class LayeredGraphSolver:
    """
    레이어 단위 최단 경로 DP

    오프라인 솔버와 온라인 prefix 최적화기가 같은 스텝 함수를 공유.
    keep_history=False 이면 마지막 레이어만 유지 (비용 전용 모드).
    """

    def __init__(
        self,
        beta: Sequence[float],
        keep_history: bool = True,
        state_ceiling: Optional[int] = None
    ):
        self.beta = tuple(float(b) for b in beta)
        self.keep_history = keep_history
        self.state_ceiling = state_ceiling or settings.state_ceiling
        self.records: List[LayerRecord] = []
        self.current: Optional[LayerValueTable] = None
        self.layers = 0

    def check_grid(self, grid: LayerGrid):
        if grid.size > self.state_ceiling:
            raise StateSpaceExceededError(
                f"layer grid has {grid.size:,} configurations, ceiling is {self.state_ceiling:,}"
            )

    def feed(self, grid: LayerGrid, operating: np.ndarray) -> LayerValueTable:
        """
        레이어 하나 추가

        Args:
            grid: 이 슬롯의 허용 구성 격자
            operating: 격자 모양의 g_t 값

        Returns:
            V_t (운영 간선 이후 값)
        """
        self.check_grid(grid)
        if self.current is None:
            arrivals = LayerValueTable.origin(grid)
        else:
            arrivals = restrict_to_grid(layer_relax_down(self.current), grid)

        up = layer_relax_up(arrivals, self.beta)
        up.values += operating
        self.current = up
        self.layers += 1
        if self.keep_history:
            self.records.append(LayerRecord(arrivals=arrivals, operating=up))
        return up

    @property
    def optimal_cost(self) -> float:
        if self.current is None:
            return 0.0
        return float(np.min(self.current.values))

    def backtrack(self) -> List[ServerConfig]:
        """
        저장된 레이어에서 운영 간선 구성을 역순으로 복원

        x_T = argmin V_T, 이후 각 레이어에서
        y = argmin_{y ≤ x_t} A_t(y) + Σ β_j (x_t,j − y_j)   (넘어온 지점)
        x_{t−1} = argmin_{x' ≥ y} V_{t−1}(x')
        동률은 모두 사전식 최소 구성.
        """
        if not self.keep_history:
            raise RuntimeError("backtracking needs keep_history=True")
        if not self.records:
            return []

        config, _ = self.records[-1].operating.argmin()
        configs = [config]
        for layer in range(len(self.records) - 1, 0, -1):
            arrivals = self.records[layer].arrivals
            grid = arrivals.grid
            entry_cost = arrivals.values.copy()
            for j in range(grid.d):
                axis = grid.axis_values(j)
                entry_cost = entry_cost + self.beta[j] * (config[j] - axis)
                entry_cost = np.where(axis <= config[j], entry_cost, np.inf)
            entry_index = np.unravel_index(int(np.argmin(entry_cost)), grid.shape)
            entry = grid.config_at(entry_index)

            previous = self.records[layer - 1].operating
            candidates = previous.values.copy()
            for j in range(previous.grid.d):
                axis = previous.grid.axis_values(j)
                candidates = np.where(axis >= entry[j], candidates, np.inf)
            prev_index = np.unravel_index(int(np.argmin(candidates)), previous.grid.shape)
            config = previous.grid.config_at(prev_index)
            configs.append(config)

        configs.reverse()
        return configs


@dataclass
class OfflineSolution:
    """오프라인 솔버 결과"""
    schedule: Optional[Schedule]
    breakdown: Optional[CostBreakdown]
    dp_cost: float
    grid_points: int
    gamma: Optional[float] = None
    elapsed: float = 0.0
    reference_cost: Optional[float] = None  # 감사 시 정확해 비용

    @property
    def cost(self) -> float:
        return self.breakdown.grand_total if self.breakdown is not None else self.dp_cost

    @property
    def bound(self) -> float:
        """근사 보장 2γ−1 (정확해는 1)"""
        return 1.0 if self.gamma is None else 2.0 * self.gamma - 1.0

    @property
    def within_bound(self) -> Optional[bool]:
        if self.reference_cost is None:
            return None
        tol = settings.cost_tolerance
        return self.reference_cost - tol <= self.cost <= self.bound * self.reference_cost + tol

    def __str__(self):
        label = "정확해" if self.gamma is None else f"근사해 (γ={self.gamma:g})"
        return (
            f"📊 {label}: 비용 {self.cost:.9f} | DP {self.dp_cost:.9f} | "
            f"격자점 {self.grid_points:,} | {self.elapsed:.3f}초"
        )


def solve_layered(
    instance: ProblemInstance,
    grids: Sequence[LayerGrid],
    cache: Optional[OperatingCostCache] = None,
    cost_only: bool = False,
    state_ceiling: Optional[int] = None,
    gamma: Optional[float] = None
) -> OfflineSolution:
    """
    주어진 슬롯별 격자 위에서 레이어 DP 실행 (정확해 / 근사해 공용)
    """
    validate_instance(instance).raise_if_invalid()
    started = time.perf_counter()
    cache = cache or OperatingCostCache(instance)
    solver = LayeredGraphSolver(instance.beta, keep_history=not cost_only, state_ceiling=state_ceiling)

    for grid in grids:
        solver.check_grid(grid)

    for t, grid in enumerate(grids, start=1):
        solver.feed(grid, cache.table(t, grid.axes))
        logger.debug(f"   레이어 {t}/{instance.T}: 격자 {grid.size:,}, 현재 최소 {solver.optimal_cost:.6f}")

    dp_cost = solver.optimal_cost
    if not math.isfinite(dp_cost):
        raise InfeasibleInstanceError("no finite-cost schedule exists on the layer grids")

    grid_points = sum(grid.size for grid in grids)
    if cost_only:
        cache.log_stats()
        return OfflineSolution(
            schedule=None, breakdown=None, dp_cost=dp_cost, grid_points=grid_points,
            gamma=gamma, elapsed=time.perf_counter() - started
        )

    schedule = Schedule(configs=tuple(solver.backtrack()))
    breakdown = schedule_cost(schedule, instance, cache)
    if gamma is None and not costs_close(breakdown.grand_total, dp_cost):
        logger.warning(f"⚠️ 경로/비용 불일치: schedule {breakdown.grand_total:.12f} vs DP {dp_cost:.12f}")
    cache.log_stats()
    return OfflineSolution(
        schedule=schedule, breakdown=breakdown, dp_cost=dp_cost, grid_points=grid_points,
        gamma=gamma, elapsed=time.perf_counter() - started
    )


def solve_offline(
    instance: ProblemInstance,
    cost_only: bool = False,
    state_ceiling: Optional[int] = None,
    cache: Optional[OperatingCostCache] = None
) -> OfflineSolution:
    """
    최적 오프라인 스케줄 (슬롯별 fleet 크기 지원)

    Raises:
        InstanceValidationError, InfeasibleInstanceError, StateSpaceExceededError
    """
    grids = [LayerGrid.box(instance.fleet_at(t)) for t in range(1, instance.T + 1)]
    solution = solve_layered(instance, grids, cache=cache, cost_only=cost_only, state_ceiling=state_ceiling)
    logger.info(f"✅ 최적 오프라인 해: 비용 {solution.cost:.9f} (T={instance.T}, d={instance.d})")
    return solution
