"""
RightSize Studio - Synthetic Workloads
시드 고정 합성 인스턴스 생성 (모든 난수는 명시적 seed에서 출발)

- generate_instance: gen 명령용 트레이스 (sinusoidal / bursty / constant)
- random_tiny_instance: 전수 탐색 가능한 소형 무작위 인스턴스 (검증 스위트)
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from cost_functions import CostFunction
from exceptions import ParameterError
from model import ProblemInstance


@dataclass(frozen=True)
class WorkloadProfile:
    """부하 형태 설정"""
    name: str
    description: str
    base_level: float    # 총 용량 대비 기본 부하
    peak_level: float    # 총 용량 대비 최대 부하
    period: int          # 주기 (슬롯)
    burst_probability: float
    noise: float


WORKLOAD_PROFILES: Dict[str, WorkloadProfile] = {
    # 일주기: 밤에 낮고 낮에 높은 부하
    "sinusoidal": WorkloadProfile(
        name="sinusoidal",
        description="diurnal load, one period per 24 slots",
        base_level=0.15,
        peak_level=0.85,
        period=24,
        burst_probability=0.0,
        noise=0.05
    ),
    # 낮은 기본 부하 + 간헐적 폭주
    "bursty": WorkloadProfile(
        name="bursty",
        description="low base load with random bursts",
        base_level=0.1,
        peak_level=0.9,
        period=1,
        burst_probability=0.25,
        noise=0.05
    ),
    "constant": WorkloadProfile(
        name="constant",
        description="flat load",
        base_level=0.5,
        peak_level=0.5,
        period=1,
        burst_probability=0.0,
        noise=0.0
    ),
}


def _round(value: float, digits: int = 3) -> float:
    return float(round(float(value), digits))


def _floor(value: float, digits: int = 3) -> float:
    """용량을 넘지 않도록 내림"""
    scale = 10 ** digits
    return float(math.floor(value * scale) / scale)


def _draw_type(rng: np.random.Generator, j: int) -> CostFunction:
    """짝수 타입은 affine, 홀수 타입은 power"""
    z_max = _round(rng.choice([1.0, 1.5, 2.0]), 1)
    idle = _round(rng.uniform(0.5, 2.0), 2)
    slope = _round(rng.uniform(0.5, 3.0), 2)
    if j % 2 == 0:
        return CostFunction.affine(idle, slope, z_max)
    return CostFunction.power(idle, slope, float(rng.choice([1.5, 2.0])), z_max)


def _load_shape(profile: WorkloadProfile, T: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(1, T + 1)
    if profile.name == "sinusoidal":
        wave = 0.5 * (1.0 - np.cos(2.0 * np.pi * t / profile.period))
        shape = profile.base_level + (profile.peak_level - profile.base_level) * wave
    elif profile.name == "bursty":
        bursts = rng.random(T) < profile.burst_probability
        shape = np.where(bursts, profile.peak_level, profile.base_level)
    else:
        shape = np.full(T, profile.base_level)
    if profile.noise > 0:
        shape = shape + rng.normal(0.0, profile.noise, T)
    return np.clip(shape, 0.0, 1.0)


def generate_instance(
    T: int,
    d: int,
    m: int,
    seed: int,
    profile: str = "sinusoidal",
    time_dependent: bool = False,
    varying_fleet: bool = False
) -> ProblemInstance:
    """
    합성 인스턴스 생성 (같은 인자 → 같은 인스턴스)

    Args:
        T, d, m: 슬롯 수, 타입 수, 타입별 서버 수
        profile: WORKLOAD_PROFILES 키
        time_dependent: 유휴 비용이 시간에 따라 변동 (전력 가격)
        varying_fleet: 타입별 정비 구간 동안 일부 서버 사용 불가
    """
    if profile not in WORKLOAD_PROFILES:
        raise ParameterError(f"unknown profile '{profile}' (choose from {', '.join(WORKLOAD_PROFILES)})")
    if T < 1 or d < 1 or m < 1:
        raise ParameterError(f"T, d and m must be >= 1, got T={T}, d={d}, m={m}")

    rng = np.random.default_rng(seed)
    base_functions = [_draw_type(rng, j) for j in range(d)]
    beta = [_round(rng.uniform(2.0, 10.0), 2) for _ in range(d)]

    fleet_rows: List[List[int]] = [[m] * d for _ in range(T)]
    if varying_fleet:
        for j in range(d):
            start = int(rng.integers(1, T + 1))
            length = int(rng.integers(1, max(2, T // 4) + 1))
            down = int(rng.integers(1, max(1, m // 2) + 1))
            for t in range(start, min(T, start + length - 1) + 1):
                fleet_rows[t - 1][j] = max(0, m - down)

    functions_by_slot: List[List[CostFunction]] = []
    if time_dependent:
        phase = rng.uniform(0.0, 2.0 * np.pi)
        for t in range(1, T + 1):
            price = 1.0 + 0.3 * math.sin(2.0 * math.pi * t / 24.0 + phase)
            row = []
            for f in base_functions:
                if f.form == "power":
                    row.append(CostFunction.power(_round(f.a * price, 3), f.b, f.p, f.z_max))
                else:
                    row.append(CostFunction.affine(_round(f.a * price, 3), f.b, f.z_max))
            functions_by_slot.append(row)

    shape = _load_shape(WORKLOAD_PROFILES[profile], T, rng)
    volumes = []
    for t in range(1, T + 1):
        capacity = sum(count * f.z_max for count, f in zip(fleet_rows[t - 1], base_functions))
        volumes.append(_floor(shape[t - 1] * capacity))

    fleet = fleet_rows if varying_fleet else [m] * d
    functions = functions_by_slot if time_dependent else base_functions
    return ProblemInstance.build(beta=beta, fleet=fleet, cost_functions=functions, volumes=volumes)


# ----------------------------------------------------------------------
# Tiny random instances
# ----------------------------------------------------------------------

FORMS = ("affine", "power", "piecewise")


def random_cost_function(
    rng: np.random.Generator,
    forms: Sequence[str] = FORMS,
    load_independent: bool = False
) -> CostFunction:
    """무작위 볼록 비감소 비용 함수"""
    z_max = _round(rng.uniform(0.5, 2.0), 2)
    if load_independent:
        return CostFunction.constant(_round(rng.uniform(0.1, 3.0), 2), z_max)

    form = str(rng.choice(list(forms)))
    idle = _round(rng.uniform(0.0, 3.0), 2)
    if form == "affine":
        return CostFunction.affine(idle, _round(rng.uniform(0.0, 3.0), 2), z_max)
    if form == "power":
        return CostFunction.power(
            idle, _round(rng.uniform(0.1, 3.0), 2), _round(rng.uniform(1.0, 3.0), 2), z_max
        )
    slopes = np.sort(rng.uniform(0.0, 4.0, int(rng.integers(1, 4))))
    knots = np.linspace(0.0, z_max, len(slopes) + 1)
    points = [(0.0, idle)]
    value = idle
    for slope, z0, z1 in zip(slopes, knots[:-1], knots[1:]):
        value += float(slope) * float(z1 - z0)
        points.append((float(z1), value))
    return CostFunction.piecewise(points, z_max)


def random_tiny_instance(
    rng: np.random.Generator,
    T_max: int = 4,
    d_max: int = 2,
    m_max: int = 2,
    time_dependent: bool = False,
    varying_fleet: bool = False,
    load_independent: bool = False,
    forms: Sequence[str] = FORMS
) -> ProblemInstance:
    """
    전수 탐색 오라클과 비교할 소형 인스턴스

    λ_t는 해당 슬롯 전체 용량 이하에서 뽑으며, 약 20% 확률로 0.
    """
    T = int(rng.integers(1, T_max + 1))
    d = int(rng.integers(1, d_max + 1))
    beta = [_round(rng.uniform(0.5, 5.0), 2) for _ in range(d)]

    if varying_fleet:
        fleet = [[int(rng.integers(0, m_max + 1)) for _ in range(d)] for _ in range(T)]
    else:
        fleet = [int(rng.integers(1, m_max + 1)) for _ in range(d)]

    if time_dependent:
        functions = [
            [random_cost_function(rng, forms, load_independent) for _ in range(d)]
            for _ in range(T)
        ]
    else:
        functions = [random_cost_function(rng, forms, load_independent) for _ in range(d)]

    volumes = []
    for t in range(T):
        counts = fleet[t] if varying_fleet else fleet
        row = functions[t] if time_dependent else functions
        capacity = sum(c * f.z_max for c, f in zip(counts, row))
        if rng.random() < 0.2:
            volumes.append(0.0)
        else:
            volumes.append(_floor(rng.uniform(0.0, capacity)))

    return ProblemInstance.build(beta=beta, fleet=fleet, cost_functions=functions, volumes=volumes)
