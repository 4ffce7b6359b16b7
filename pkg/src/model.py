"""
RightSize Studio - Core Model
문제 인스턴스 / 스케줄 / 비용 분해 + 검증과 총 비용 계산

슬롯 t는 1부터 T까지, 서버 타입 j는 0부터 d-1까지 (메시지에서는 x_1, x_2 …).
"""
import math
from dataclasses import dataclass, field, asdict
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from config import settings
from cost_functions import CostFunction
from allocation import OperatingCostCache, ServerConfig
from exceptions import DimensionMismatchError, InfeasibleScheduleError, InstanceValidationError

FleetSpec = Union[Tuple[int, ...], Tuple[Tuple[int, ...], ...]]
FunctionSpec = Union[Tuple[CostFunction, ...], Tuple[Tuple[CostFunction, ...], ...]]


@dataclass(frozen=True)
class ProblemInstance:
    """
    문제 인스턴스 I = (T, d, m, β, F, Λ)

    - fleet: 타입별 m_j, 또는 슬롯별 (m_{t,1}, …, m_{t,d})
    - cost_functions: 타입별 f_j (시간 무관), 또는 T×d 행렬
    시간 무관 데이터는 한 번만 저장하고 슬롯 조회 시 펼침.
    """
    T: int
    d: int
    beta: Tuple[float, ...]
    fleet: FleetSpec
    cost_functions: FunctionSpec
    volumes: Tuple[float, ...]

    @classmethod
    def build(
        cls,
        beta: Sequence[float],
        fleet,
        cost_functions,
        volumes: Sequence[float]
    ) -> "ProblemInstance":
        """리스트 입력을 불변 튜플로 정규화하여 생성"""
        volumes = tuple(float(v) for v in volumes)
        beta = tuple(float(b) for b in beta)
        if fleet and isinstance(fleet[0], (list, tuple)):
            fleet = tuple(tuple(int(m) for m in row) for row in fleet)
        else:
            fleet = tuple(int(m) for m in fleet)
        if cost_functions and isinstance(cost_functions[0], (list, tuple)):
            cost_functions = tuple(tuple(row) for row in cost_functions)
        else:
            cost_functions = tuple(cost_functions)
        return cls(
            T=len(volumes), d=len(beta), beta=beta,
            fleet=fleet, cost_functions=cost_functions, volumes=volumes
        )

    # ------------------------------------------------------------------
    # 슬롯 조회 (t는 1-based)
    # ------------------------------------------------------------------

    @property
    def fleet_time_dependent(self) -> bool:
        return bool(self.fleet) and isinstance(self.fleet[0], tuple)

    @property
    def functions_time_dependent(self) -> bool:
        return bool(self.cost_functions) and isinstance(self.cost_functions[0], tuple)

    @property
    def time_independent(self) -> bool:
        """모든 슬롯의 비용 함수가 같은지 (알고리즘 A 적용 조건)"""
        if not self.functions_time_dependent:
            return True
        first = self.cost_functions[0]
        return all(row == first for row in self.cost_functions)

    @property
    def fleet_constant(self) -> bool:
        if not self.fleet_time_dependent:
            return True
        first = self.fleet[0]
        return all(row == first for row in self.fleet)

    @property
    def load_independent(self) -> bool:
        """모든 비용 함수가 상수 (f ≡ l)"""
        return all(f.is_load_independent for t in range(1, self.T + 1) for f in self.functions_at(t))

    def volume(self, t: int) -> float:
        return self.volumes[t - 1]

    def fleet_at(self, t: int) -> Tuple[int, ...]:
        if self.fleet_time_dependent:
            return self.fleet[t - 1]
        return self.fleet

    def functions_at(self, t: int) -> Tuple[CostFunction, ...]:
        if self.functions_time_dependent:
            return self.cost_functions[t - 1]
        return self.cost_functions

    def idle_costs(self, t: int) -> np.ndarray:
        """l_{t,j} = f_{t,j}(0)"""
        return np.array([f.idle_cost for f in self.functions_at(t)])

    def capacity(self, t: int, config: Optional[Sequence[int]] = None) -> float:
        """Σ_j x_j·z_max_j (config가 없으면 전체 fleet)"""
        counts = self.fleet_at(t) if config is None else config
        return sum(c * f.z_max for c, f in zip(counts, self.functions_at(t)))

    def idle_ratio_constant(self) -> float:
        """c(I) = Σ_j max_t l_{t,j} / β_j"""
        total = 0.0
        for j in range(self.d):
            peak = max(self.functions_at(t)[j].idle_cost for t in range(1, self.T + 1))
            total += peak / self.beta[j]
        return total

    def prefix(self, t: int) -> "ProblemInstance":
        """앞의 t개 슬롯만 남긴 인스턴스 I^t"""
        fleet = self.fleet[:t] if self.fleet_time_dependent else self.fleet
        functions = self.cost_functions[:t] if self.functions_time_dependent else self.cost_functions
        return ProblemInstance(
            T=t, d=self.d, beta=self.beta, fleet=fleet,
            cost_functions=functions, volumes=self.volumes[:t]
        )

    def with_time_dependent_fleet(self) -> "ProblemInstance":
        """fleet을 슬롯별 벡터 형태로 펼친 동일 인스턴스"""
        fleet = tuple(self.fleet_at(t) for t in range(1, self.T + 1))
        return ProblemInstance(
            T=self.T, d=self.d, beta=self.beta, fleet=fleet,
            cost_functions=self.cost_functions, volumes=self.volumes
        )

    def permuted(self, order: Sequence[int]) -> "ProblemInstance":
        """서버 타입 순서를 바꾼 동일 인스턴스"""
        def pick(row):
            return tuple(row[j] for j in order)

        fleet = tuple(pick(r) for r in self.fleet) if self.fleet_time_dependent else pick(self.fleet)
        functions = (
            tuple(pick(r) for r in self.cost_functions)
            if self.functions_time_dependent else pick(self.cost_functions)
        )
        return ProblemInstance(
            T=self.T, d=self.d, beta=pick(self.beta), fleet=fleet,
            cost_functions=functions, volumes=self.volumes
        )


@dataclass(frozen=True)
class Schedule:
    """스케줄 X = (x_1, …, x_T), 경계 x_0 = x_{T+1} = 0"""
    configs: Tuple[ServerConfig, ...]

    @classmethod
    def from_rows(cls, rows) -> "Schedule":
        return cls(configs=tuple(tuple(int(v) for v in row) for row in rows))

    @classmethod
    def zeros(cls, T: int, d: int) -> "Schedule":
        return cls(configs=((0,) * d,) * T)

    @property
    def T(self) -> int:
        return len(self.configs)

    def at(self, t: int) -> ServerConfig:
        return self.configs[t - 1]

    def as_array(self) -> np.ndarray:
        return np.array(self.configs, dtype=int).reshape(self.T, -1)

    def __str__(self):
        return " → ".join(str(c) for c in self.configs)


@dataclass
class CostBreakdown:
    """비용 분해 (운영 / 전환 / 합계, 슬롯별)"""
    operating_total: float
    switching_total: float
    grand_total: float
    per_slot: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return asdict(self)

    def __str__(self):
        return (
            f"💰 총 비용 {self.grand_total:.9f} "
            f"(운영 {self.operating_total:.9f} + 전환 {self.switching_total:.9f})"
        )


@dataclass
class ValidationReport:
    """인스턴스 검증 결과"""
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_if_invalid(self):
        if not self.ok:
            raise InstanceValidationError(self.violations)

    def __str__(self):
        if self.ok:
            return "✅ instance ok"
        return "\n".join(["❌ instance invalid:"] + [f"  - {v}" for v in self.violations])


@dataclass
class FeasibilityCheck:
    feasible: bool
    violation: Optional[str] = None
    slot: Optional[int] = None

    def __bool__(self):
        return self.feasible


def costs_close(a: float, b: float, tol: Optional[float] = None) -> bool:
    """|a - b| ≤ tol·max(1, |a|, |b|)"""
    tol = settings.cost_tolerance if tol is None else tol
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def _check_dimensions(instance: ProblemInstance) -> List[str]:
    problems: List[str] = []
    T, d = instance.T, instance.d
    if T < 1:
        problems.append(f"T must be a positive integer, got {T}")
    if d < 1:
        problems.append(f"d must be a positive integer, got {d}")
    if len(instance.volumes) != T:
        problems.append(f"dimension mismatch: |lambda| = {len(instance.volumes)} != T = {T}")
    if len(instance.beta) != d:
        problems.append(f"dimension mismatch: |beta| = {len(instance.beta)} != d = {d}")

    if instance.fleet_time_dependent:
        if len(instance.fleet) != T:
            problems.append(f"dimension mismatch: fleet has {len(instance.fleet)} slots, T = {T}")
        for t, row in enumerate(instance.fleet, start=1):
            if len(row) != d:
                problems.append(f"dimension mismatch: fleet slot {t} has {len(row)} types, d = {d}")
    elif len(instance.fleet) != d:
        problems.append(f"dimension mismatch: |fleet| = {len(instance.fleet)} != d = {d}")

    if instance.functions_time_dependent:
        if len(instance.cost_functions) != T:
            problems.append(
                f"dimension mismatch: cost_functions has {len(instance.cost_functions)} slots, T = {T}"
            )
        for t, row in enumerate(instance.cost_functions, start=1):
            if len(row) != d:
                problems.append(f"dimension mismatch: cost_functions slot {t} has {len(row)} types, d = {d}")
    elif len(instance.cost_functions) != d:
        problems.append(f"dimension mismatch: |cost_functions| = {len(instance.cost_functions)} != d = {d}")
    return problems


def validate_instance(instance: ProblemInstance) -> ValidationReport:
    """
    인스턴스 검증 (예외 대신 위반 목록 반환)

    차원 불일치, 비볼록 piecewise, 용량 부족 슬롯, β ≤ 0 등을 보고.
    """
    report = ValidationReport(violations=_check_dimensions(instance))
    if not report.ok:
        return report

    for j, b in enumerate(instance.beta, start=1):
        if not b > 0:
            report.violations.append(f"beta_{j} must be > 0, got {b:g}")

    for t, volume in enumerate(instance.volumes, start=1):
        if not volume >= 0:
            report.violations.append(f"lambda_{t} must be >= 0, got {volume:g}")

    if instance.fleet_time_dependent:
        for t in range(1, instance.T + 1):
            for j, m in enumerate(instance.fleet_at(t), start=1):
                if m < 0:
                    report.violations.append(f"fleet slot {t} type {j}: m must be >= 0, got {m}")
    else:
        for j, m in enumerate(instance.fleet, start=1):
            if m < 1:
                report.violations.append(f"fleet type {j}: m must be >= 1, got {m}")

    if instance.functions_time_dependent:
        for t, row in enumerate(instance.cost_functions, start=1):
            for j, f in enumerate(row, start=1):
                report.violations.extend(f"slot {t} type {j}: {p}" for p in f.violations())
    else:
        for j, f in enumerate(instance.cost_functions, start=1):
            report.violations.extend(f"type {j}: {p}" for p in f.violations())

    if report.ok:
        for t in range(1, instance.T + 1):
            capacity = instance.capacity(t)
            if capacity < instance.volume(t):
                report.violations.append(
                    f"slot {t} infeasible: capacity {capacity:g} < volume {instance.volume(t):g}"
                )
    return report


def _check_schedule_shape(schedule: Schedule, instance: ProblemInstance):
    if schedule.T != instance.T:
        raise DimensionMismatchError(f"schedule has {schedule.T} slots, instance has T = {instance.T}")
    for t, config in enumerate(schedule.configs, start=1):
        if len(config) != instance.d:
            raise DimensionMismatchError(f"slot {t}: config has {len(config)} types, d = {instance.d}")


def is_feasible(schedule: Schedule, instance: ProblemInstance) -> FeasibilityCheck:
    """
    실행 가능성 검사: 0 ≤ x_{t,j} ≤ m_{t,j}, Σ_j x_{t,j}·z_max ≥ λ_t

    Returns:
        FeasibilityCheck (첫 위반 메시지 포함)
    """
    _check_schedule_shape(schedule, instance)
    for t, config in enumerate(schedule.configs, start=1):
        fleet = instance.fleet_at(t)
        for j, (x, m) in enumerate(zip(config, fleet), start=1):
            if x < 0:
                return FeasibilityCheck(False, f"slot {t}: x_{j}={x} < 0", t)
            if x > m:
                return FeasibilityCheck(False, f"slot {t}: x_{j}={x} > m={m}", t)
        capacity = instance.capacity(t, config)
        if capacity < instance.volume(t):
            return FeasibilityCheck(False, f"slot {t}: capacity {capacity:g} < {instance.volume(t):g}", t)
    return FeasibilityCheck(True)


def switching_cost(previous: Sequence[int], current: Sequence[int], beta: Sequence[float]) -> float:
    """Σ_j β_j·(x_j − x'_j)^+ (전원 켜기만 과금)"""
    return float(sum(b * max(c - p, 0) for p, c, b in zip(previous, current, beta)))


def schedule_cost(
    schedule: Schedule,
    instance: ProblemInstance,
    cache: Optional[OperatingCostCache] = None
) -> CostBreakdown:
    """
    총 비용 C(X) = Σ_t g_t(x_t) + Σ_t Σ_j β_j (x_{t,j} − x_{t−1,j})^+

    Raises:
        InfeasibleScheduleError: 위반 슬롯을 메시지에 포함
    """
    check = is_feasible(schedule, instance)
    if not check:
        raise InfeasibleScheduleError(f"infeasible schedule: {check.violation}", check.slot)

    cache = cache or OperatingCostCache(instance)
    previous = (0,) * instance.d
    per_slot = []
    for t, config in enumerate(schedule.configs, start=1):
        operating = cache.get(t, config)
        switching = switching_cost(previous, config, instance.beta)
        per_slot.append((operating, switching))
        previous = config

    operating_total = float(sum(op for op, _ in per_slot))
    switching_total = float(sum(sw for _, sw in per_slot))
    return CostBreakdown(
        operating_total=operating_total,
        switching_total=switching_total,
        grand_total=operating_total + switching_total,
        per_slot=tuple(per_slot)
    )
