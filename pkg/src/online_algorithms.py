"""
RightSize Studio - Online Schedulers
슬롯 하나씩 (λ_t, f_{t,·})를 받아 미래를 보지 않고 x_t를 결정

공통 규칙: prefix 최적 끝 구성 x̂^t_t 이상이 되도록 서버를 켜고,
켜진 서버는 스키 렌탈 규칙에 따라 유휴 비용이 β_j에 도달하면 끈다.

- AlgorithmA: 시간 무관 비용, 고정 체류 시간 t̄_j = ⌈β_j / l_j⌉
- AlgorithmB: 시간 의존 비용, 누적 유휴 비용으로 만료 슬롯 W_t 계산
- AlgorithmC: 슬롯을 ñ_t개 서브 슬롯으로 나눠 내부 B 실행
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from config import settings
from allocation import ServerConfig
from cost_functions import CostFunction
from exceptions import ParameterError, UsageError
from model import CostBreakdown, ProblemInstance, Schedule, schedule_cost, switching_cost, validate_instance
from offline_solver import solve_offline
from prefix_optimizer import PrefixOptimizer

ALGORITHMS = ("a", "b", "c")


# ----------------------------------------------------------------------
# Ski-rental helpers
# ----------------------------------------------------------------------

def dwell_time(beta: float, idle: float, horizon: Optional[int] = None) -> float:
    """
    알고리즘 A의 t̄_j = ⌈β_j / l_j⌉

    l_j = 0이면 horizon (없으면 무한대): 지평 끝까지 끄지 않음.
    """
    if idle <= 0:
        return float(horizon) if horizon is not None else math.inf
    q = beta / idle
    return float(max(1, math.ceil(q - 1e-9 * max(1.0, q))))


def dwell_times(idle_costs: Sequence[float], beta: float) -> List[int]:
    """
    완전한 유휴 비용 열에 대한 t̄_{t,j} (t = 1..T)

    t̄_{t,j} = max{t̄ ∈ [T−t] : Σ_{v=t+1}^{t+t̄} l_v ≤ β}, 없으면 0
    """
    idle = np.asarray(idle_costs, dtype=float)
    T = len(idle)
    limit = beta + settings.cost_tolerance * max(1.0, beta)
    result = []
    for t in range(1, T + 1):
        tail = np.cumsum(idle[t:])  # l_{t+1}, l_{t+1}+l_{t+2}, …
        result.append(int(np.count_nonzero(tail <= limit)))
    return result


def expiry_slots(prefix_sums: Sequence[float], beta: float, t: int) -> List[int]:
    """
    W_t = {u ∈ [t−1] : S_{t−1} − S_u ≤ β < S_t − S_u}

    Args:
        prefix_sums: S_0 = 0, S_k = Σ_{v≤k} l_v (길이 ≥ t+1)
    """
    if t < 2:
        return []
    S = np.asarray(prefix_sums, dtype=float)
    u = np.arange(1, t)
    limit = beta + settings.cost_tolerance * max(1.0, beta)
    mask = (S[t - 1] - S[u] <= limit) & (limit < S[t] - S[u])
    return [int(v) for v in u[mask]]


def sub_slot_count(idle_costs: Sequence[float], beta: Sequence[float], epsilon: float) -> int:
    """ñ_t = max(1, ⌈(d/ε)·max_j l_{t,j}/β_j⌉)"""
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be > 0, got {epsilon:g}")
    d = len(beta)
    peak = max(l / b for l, b in zip(idle_costs, beta))
    q = d / epsilon * peak
    return max(1, int(math.ceil(q - 1e-9 * max(1.0, q))))


def competitive_bound(instance: ProblemInstance, algorithm: str, epsilon: Optional[float] = None) -> float:
    """이론적 경쟁 비율 (A: 2d+1 또는 2d, B: 2d+1+c(I), C: 2d+1+ε)"""
    d = instance.d
    algorithm = algorithm.lower()
    if algorithm == "a":
        return 2.0 * d if instance.load_independent else 2.0 * d + 1.0
    if algorithm == "b":
        return 2.0 * d + 1.0 + instance.idle_ratio_constant()
    if algorithm == "c":
        if epsilon is None:
            raise ParameterError("algorithm c needs epsilon")
        return 2.0 * d + 1.0 + epsilon
    raise UsageError(f"unknown algorithm '{algorithm}' (choose from {', '.join(ALGORITHMS)})")


# ----------------------------------------------------------------------
# State
# ----------------------------------------------------------------------

@dataclass
class OnlineState:
    """
    온라인 알고리즘의 서버 장부

    power_ups[t-1][j] = w_{t,j}, expired_at[t-1][j] = 해당 항목이 만료된 슬롯
    """
    d: int
    config: List[int] = field(default_factory=list)
    power_ups: List[List[int]] = field(default_factory=list)
    expired_at: List[List[Optional[int]]] = field(default_factory=list)
    prefix_targets: List[ServerConfig] = field(default_factory=list)
    history: List[ServerConfig] = field(default_factory=list)

    def __post_init__(self):
        if not self.config:
            self.config = [0] * self.d

    @property
    def t(self) -> int:
        return len(self.power_ups)

    def open_slot(self):
        self.power_ups.append([0] * self.d)
        self.expired_at.append([None] * self.d)

    def expire(self, u: int, j: int):
        """w_{u,j} 항목을 현재 슬롯에서 만료"""
        if self.expired_at[u - 1][j] is not None:
            raise RuntimeError(f"ledger entry w[{u},{j + 1}] expired twice")
        self.config[j] -= self.power_ups[u - 1][j]
        self.expired_at[u - 1][j] = self.t

    def top_up(self, target: Sequence[int]):
        """x_j < x̂_j 인 타입을 x̂_j까지 켜고 w_{t,j} 기록"""
        for j, want in enumerate(target):
            if self.config[j] < want:
                self.power_ups[-1][j] = want - self.config[j]
                self.config[j] = want
        self.prefix_targets.append(tuple(int(v) for v in target))
        self.history.append(tuple(self.config))

    def running_servers(self, j: int) -> int:
        """만료되지 않은 장부 항목의 합"""
        return sum(w[j] for w, gone in zip(self.power_ups, self.expired_at) if gone[j] is None)

    def conservation_holds(self) -> bool:
        return all(self.config[j] == self.running_servers(j) for j in range(self.d))

    def dominance_holds(self) -> bool:
        return all(
            all(x >= xh for x, xh in zip(emitted, target))
            for emitted, target in zip(self.history, self.prefix_targets)
        )

    def expiry_slots_of(self, j: int) -> Dict[int, int]:
        """{켠 슬롯 u: 만료 슬롯} (w_{u,j} > 0 항목만)"""
        return {
            u: gone[j]
            for u, (w, gone) in enumerate(zip(self.power_ups, self.expired_at), start=1)
            if w[j] > 0 and gone[j] is not None
        }


# ----------------------------------------------------------------------
# Algorithms
# ----------------------------------------------------------------------

class OnlineAlgorithm(ABC):
    """온라인 알고리즘 베이스 클래스"""

    def __init__(self, beta: Sequence[float], fleet: Sequence[int], gamma: Optional[float] = None):
        self.beta = tuple(float(b) for b in beta)
        self.fleet = tuple(int(m) for m in fleet)
        self.d = len(self.beta)
        self.optimizer = PrefixOptimizer(self.beta, self.fleet, gamma=gamma)
        self.state = OnlineState(d=self.d)

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @abstractmethod
    def step(self, t: int, volume: float, functions: Sequence[CostFunction]) -> ServerConfig:
        """슬롯 t의 구성 결정 (슬롯 순서대로 호출)"""
        pass

    def _check_order(self, t: int):
        if t != self.state.t + 1:
            raise UsageError(f"{self.name}: slots must be fed in order, expected {self.state.t + 1}, got {t}")


class AlgorithmA(OnlineAlgorithm):
    """
    시간 무관 비용용 알고리즘

    슬롯 t에 켠 서버는 t + t̄_j에 끔 (t̄_j = ⌈β_j / f_j(0)⌉).
    """

    def __init__(
        self,
        beta: Sequence[float],
        fleet: Sequence[int],
        functions: Sequence[CostFunction],
        horizon: Optional[int] = None,
        gamma: Optional[float] = None
    ):
        super().__init__(beta, fleet, gamma=gamma)
        self.functions = tuple(functions)
        self.dwell = [dwell_time(b, f.idle_cost, horizon) for b, f in zip(self.beta, self.functions)]

    @property
    def name(self) -> str:
        return "A"

    def step(self, t: int, volume: float, functions: Sequence[CostFunction]) -> ServerConfig:
        self._check_order(t)
        if tuple(functions) != self.functions:
            raise UsageError(f"algorithm A needs time-independent cost functions (slot {t} differs)")

        target = self.optimizer.feed_slot(volume, functions).config
        self.state.open_slot()
        for j, dwell in enumerate(self.dwell):
            u = t - dwell
            if math.isfinite(u) and u >= 1:
                self.state.expire(int(u), j)
        self.state.top_up(target)
        return self.state.history[-1]


class AlgorithmB(OnlineAlgorithm):
    """
    시간 의존 비용용 알고리즘

    슬롯 u에 켠 서버는 이후 유휴 비용 합이 β_j를 처음 넘는 슬롯에 끔.
    """

    def __init__(self, beta: Sequence[float], fleet: Sequence[int], gamma: Optional[float] = None):
        super().__init__(beta, fleet, gamma=gamma)
        self.prefix_sums: List[List[float]] = [[0.0] for _ in range(self.d)]

    @property
    def name(self) -> str:
        return "B"

    def record_idle(self, idle_costs: Sequence[float]):
        for j, l in enumerate(idle_costs):
            self.prefix_sums[j].append(self.prefix_sums[j][-1] + float(l))

    def expire_due(self, t: int):
        for j in range(self.d):
            for u in expiry_slots(self.prefix_sums[j], self.beta[j], t):
                self.state.expire(u, j)

    def advance(self, t: int, target: Sequence[int], idle_costs: Sequence[float]) -> ServerConfig:
        """x̂가 이미 주어진 경우의 스텝 (알고리즘 C의 내부 B가 사용)"""
        self.record_idle(idle_costs)
        self.state.open_slot()
        self.expire_due(t)
        self.state.top_up(target)
        return self.state.history[-1]

    def step(self, t: int, volume: float, functions: Sequence[CostFunction]) -> ServerConfig:
        self._check_order(t)
        target = self.optimizer.feed_slot(volume, functions).config
        return self.advance(t, target, [f.idle_cost for f in functions])


class AlgorithmC(OnlineAlgorithm):
    """
    서브 슬롯 분할 알고리즘

    슬롯 t를 ñ_t개 서브 슬롯 (운영 비용 g_t/ñ_t, 작업량 λ_t 그대로)으로 나누고
    내부 B를 실행한 뒤, 운영 비용이 가장 작은 서브 슬롯의 구성을 사용.
    """

    def __init__(
        self,
        beta: Sequence[float],
        fleet: Sequence[int],
        epsilon: float,
        gamma: Optional[float] = None
    ):
        if epsilon is None or not epsilon > 0:
            raise ParameterError(f"algorithm c needs epsilon > 0, got {epsilon}")
        super().__init__(beta, fleet, gamma=gamma)
        self.epsilon = float(epsilon)
        self.inner = AlgorithmB(beta, fleet, gamma=gamma)
        self.inner.optimizer = self.optimizer
        self.sub_slots: List[int] = []
        self.inner_operating: List[float] = []  # 서브 슬롯별 g̃_u(x^B_u)
        self.chosen: List[int] = []             # μ(t) (전역 서브 슬롯 번호)

    @property
    def name(self) -> str:
        return "C"

    def step(self, t: int, volume: float, functions: Sequence[CostFunction]) -> ServerConfig:
        self._check_order(t)
        idle = [f.idle_cost for f in functions]
        n = sub_slot_count(idle, self.beta, self.epsilon)
        scale = 1.0 / n
        table = self.optimizer.table(volume, functions)
        scaled_table = table * scale
        scaled_idle = [l * scale for l in idle]

        best_u, best_cost, best_config = None, math.inf, None
        for _ in range(n):
            target = self.optimizer.feed(scaled_table).config
            u = self.inner.state.t + 1
            config = self.inner.advance(u, target, scaled_idle)
            cost = float(scaled_table[self.optimizer.grid.index_of(config)])
            self.inner_operating.append(cost)
            if cost < best_cost or best_u is None:
                best_u, best_cost, best_config = u, cost, config

        self.sub_slots.append(n)
        self.chosen.append(best_u)
        self.state.open_slot()
        self.state.prefix_targets.append(self.inner.state.prefix_targets[best_u - 1])
        self.state.history.append(best_config)
        self.state.config = list(best_config)
        logger.debug(f"   C 슬롯 {t}: ñ={n}, μ={best_u}, x={best_config}")
        return best_config

    def inner_schedule(self) -> Schedule:
        return Schedule(configs=tuple(self.inner.state.history))

    def inner_cost(self) -> float:
        """내부 X^B의 Ĩ 위 총 비용"""
        previous = (0,) * self.d
        switching = 0.0
        for config in self.inner.state.history:
            switching += switching_cost(previous, config, self.beta)
            previous = config
        return float(sum(self.inner_operating)) + switching


def create_algorithm(
    algorithm: str,
    instance: ProblemInstance,
    epsilon: Optional[float] = None,
    gamma: Optional[float] = None
) -> OnlineAlgorithm:
    """
    알고리즘 팩토리

    Raises:
        UsageError: 알 수 없는 id, 시간 의존 인스턴스에 A, 시간에 따라 바뀌는 fleet
    """
    key = algorithm.lower()
    if key not in ALGORITHMS:
        raise UsageError(f"unknown algorithm '{algorithm}' (choose from {', '.join(ALGORITHMS)})")
    if not instance.fleet_constant:
        raise UsageError("online algorithms need a fleet that is constant in time")
    fleet = instance.fleet_at(1)
    if key == "a":
        if not instance.time_independent:
            raise UsageError("algorithm A needs time-independent cost functions")
        return AlgorithmA(instance.beta, fleet, instance.functions_at(1), horizon=instance.T, gamma=gamma)
    if key == "b":
        return AlgorithmB(instance.beta, fleet, gamma=gamma)
    return AlgorithmC(instance.beta, fleet, epsilon=epsilon, gamma=gamma)


# ----------------------------------------------------------------------
# Runner
# ----------------------------------------------------------------------

@dataclass
class OnlineRunResult:
    """온라인 실행 결과 + 경쟁 비율 감사"""
    algorithm: str
    schedule: Schedule
    breakdown: CostBreakdown
    bound: float
    state: OnlineState
    epsilon: Optional[float] = None
    opt_cost: Optional[float] = None
    ratio: Optional[float] = None
    violation: bool = False
    opt_zero: bool = False
    sub_slots: Tuple[int, ...] = ()
    inner_cost: Optional[float] = None
    cost_transfer_ok: Optional[bool] = None

    @property
    def cost(self) -> float:
        return self.breakdown.grand_total

    def __str__(self):
        text = f"🤖 알고리즘 {self.algorithm.upper()}: 비용 {self.cost:.9f} | 보장 {self.bound:.6g}"
        if self.ratio is not None:
            emoji = "❌" if self.violation else "✅"
            text += f" | OPT {self.opt_cost:.9f} | 비율 {self.ratio:.6f} {emoji}"
        return text


def competitive_ratio(cost: float, opt: float, tol: Optional[float] = None) -> Tuple[float, bool]:
    """
    (비율, OPT=0 여부)

    OPT = 0이면 알고리즘 비용도 0일 때 1, 아니면 +inf.
    """
    tol = settings.cost_tolerance if tol is None else tol
    if opt <= tol:
        return (1.0 if cost <= tol else math.inf), True
    return cost / opt, False


def run_online(
    instance: ProblemInstance,
    algorithm: str,
    epsilon: Optional[float] = None,
    audit: bool = True,
    gamma: Optional[float] = None
) -> OnlineRunResult:
    """
    인스턴스를 슬롯 단위로 스트리밍하여 온라인 알고리즘 실행

    Args:
        algorithm: "a" | "b" | "c"
        epsilon: 알고리즘 C 파라미터
        audit: solve_offline OPT 대비 비율 측정
        gamma: prefix 최적화기를 γ-격자에서 실행 (휴리스틱)
    """
    validate_instance(instance).raise_if_invalid()
    runner = create_algorithm(algorithm, instance, epsilon=epsilon, gamma=gamma)
    bound = competitive_bound(instance, algorithm, epsilon)

    for t in range(1, instance.T + 1):
        runner.step(t, instance.volume(t), instance.functions_at(t))

    schedule = Schedule(configs=tuple(runner.state.history))
    breakdown = schedule_cost(schedule, instance)
    result = OnlineRunResult(
        algorithm=runner.name, schedule=schedule, breakdown=breakdown,
        bound=bound, state=runner.state, epsilon=epsilon
    )

    if isinstance(runner, AlgorithmC):
        result.sub_slots = tuple(runner.sub_slots)
        result.inner_cost = runner.inner_cost()
        slack = settings.cost_tolerance * max(1.0, result.inner_cost)
        result.cost_transfer_ok = breakdown.grand_total <= result.inner_cost + slack
        if not result.cost_transfer_ok:
            logger.warning(f"⚠️ C 비용 전이 위반: {breakdown.grand_total:.9f} > Ĩ {result.inner_cost:.9f}")

    if audit:
        opt = solve_offline(instance, cost_only=True).dp_cost
        ratio, opt_zero = competitive_ratio(breakdown.grand_total, opt)
        result.opt_cost, result.ratio, result.opt_zero = opt, ratio, opt_zero
        result.violation = ratio > bound + settings.ratio_tolerance
        if result.violation:
            logger.warning(f"⚠️ 경쟁 비율 위반: {runner.name} 비율 {ratio:.6f} > 보장 {bound:.6f}")

    logger.info(str(result))
    return result
