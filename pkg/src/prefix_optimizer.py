"""
RightSize Studio - Prefix Optimizer
슬롯이 하나씩 들어올 때마다 prefix 인스턴스 I^t의 최적 비용과 끝 구성 x̂^t_t 갱신

오프라인 솔버의 레이어 스텝을 그대로 재사용하고 마지막 레이어만 유지.
min_x V_t(x) = solve_offline(I^t) 비용 (전원 끄기 간선 가중치가 0이므로).
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from allocation import ServerConfig, eval_g_total
from cost_functions import CostFunction
from offline_solver import LayerGrid, LayeredGraphSolver


@dataclass(frozen=True)
class PrefixStep:
    """prefix_feed 한 번의 결과"""
    t: int
    config: ServerConfig  # x̂^t_t (사전식 최소 argmin)
    cost: float           # I^t 최적 비용


def operating_table(grid: LayerGrid, volume: float, functions: Sequence[CostFunction]) -> np.ndarray:
    """격자 전체의 g(x) 값 (슬롯 하나, 캐시 없이)"""
    values = np.empty(grid.shape, dtype=float)
    for index in np.ndindex(*grid.shape):
        values[index] = eval_g_total(grid.config_at(index), volume, functions).cost
    return values


class PrefixOptimizer:
    """
    온라인 prefix 최적 스케줄 추적기

    gamma를 주면 γ-격자 위에서 실행 (대형 fleet용 휴리스틱, 보장 없음).
    """

    def __init__(
        self,
        beta: Sequence[float],
        fleet: Sequence[int],
        gamma: Optional[float] = None,
        state_ceiling: Optional[int] = None
    ):
        if gamma is None:
            self.grid = LayerGrid.box(fleet)
        else:
            from approximation import gamma_values
            self.grid = LayerGrid.from_values([gamma_values(int(m), float(gamma)) for m in fleet])
        self.gamma = gamma
        self.solver = LayeredGraphSolver(beta, keep_history=False, state_ceiling=state_ceiling)
        self.solver.check_grid(self.grid)
        self.t = 0
        self.last: Optional[PrefixStep] = None

    def table(self, volume: float, functions: Sequence[CostFunction]) -> np.ndarray:
        return operating_table(self.grid, volume, functions)

    def feed(self, operating: np.ndarray) -> PrefixStep:
        """미리 계산된 g 표로 레이어 하나 추가"""
        values = self.solver.feed(self.grid, operating)
        config, cost = values.argmin()
        self.t += 1
        self.last = PrefixStep(t=self.t, config=config, cost=cost)
        logger.debug(f"   prefix {self.t}: x̂={config}, OPT(I^t)={cost:.6f}")
        return self.last

    def feed_slot(
        self,
        volume: float,
        functions: Sequence[CostFunction],
        scale: float = 1.0
    ) -> PrefixStep:
        """
        슬롯 하나 입력

        Args:
            scale: 운영 비용 배율 (서브 슬롯은 1/ñ_t)
        """
        table = self.table(volume, functions)
        if scale != 1.0:
            table = table * scale
        return self.feed(table)


def prefix_feed(optimizer: PrefixOptimizer, volume: float, functions: Sequence[CostFunction]):
    """(x̂^t_t, OPT(I^t)) 튜플 반환"""
    step = optimizer.feed_slot(volume, functions)
    return step.config, step.cost
