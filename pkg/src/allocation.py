"""
RightSize Studio - Job Allocation
슬롯 하나의 운영 비용 g_t(x): 작업량 λ를 서버 타입 사이에 최적 분할

타입 j 안에서는 x_j대가 부하를 균등 분할 (볼록 함수이므로 균등 분할이 최적).
타입 간 분할은 분리 가능 볼록 최소화 문제:
    min Σ_j x_j·f_j(v_j / x_j)   s.t.  Σ v_j = λ,  0 ≤ v_j ≤ x_j·z_max_j
"""
import math
import time
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from config import settings
from cost_functions import CostFunction

ServerConfig = Tuple[int, ...]


@dataclass(frozen=True)
class AllocationResult:
    """한 슬롯의 최적 작업 분할"""
    z: Tuple[float, ...]        # λ 대비 비율 (λ > 0이면 합 1)
    volumes: Tuple[float, ...]  # v_j = λ·z_j
    cost: float                 # g_t(x), 불가능하면 +inf

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.cost)

    def __str__(self):
        if not self.feasible:
            return "Allocation: infeasible (+inf)"
        shares = ", ".join(f"{share:.3f}" for share in self.z)
        return f"Allocation: cost={self.cost:.6f} z=({shares})"


def eval_g_single(x: int, z: float, volume: float, f: CostFunction) -> float:
    """
    타입 하나의 비용 g_{t,j}(x, z)

    Returns:
        x·f(λz/x) (x > 0), x = 0이면 λz > 0일 때 +inf, 아니면 0
    """
    load = volume * z
    if x == 0:
        return math.inf if load > 0 else 0.0
    return x * f(load / x)


def _capacity(x: Sequence[int], fs: Sequence[CostFunction]) -> float:
    return sum(count * f.z_max for count, f in zip(x, fs) if count > 0)


def _idle_result(x: Sequence[int], fs: Sequence[CostFunction]) -> AllocationResult:
    """λ = 0: 유휴 비용만 발생, z는 첫 활성 타입에 1"""
    d = len(x)
    z = [0.0] * d
    for j, count in enumerate(x):
        if count > 0:
            z[j] = 1.0
            break
    cost = sum(count * f.idle_cost for count, f in zip(x, fs) if count > 0)
    return AllocationResult(z=tuple(z), volumes=(0.0,) * d, cost=cost)


def _greedy_linear(x: Sequence[int], volume: float, fs: Sequence[CostFunction]) -> np.ndarray:
    """구간 선형 함수: 기울기 오름차순으로 구간을 채우는 정확한 greedy"""
    pieces = []
    for j, (count, f) in enumerate(zip(x, fs)):
        if count == 0:
            continue
        for k, (slope, length) in enumerate(f.linear_segments()):
            pieces.append((slope, j, k, count * length))
    pieces.sort(key=lambda piece: (piece[0], piece[1], piece[2]))

    volumes = np.zeros(len(x))
    remaining = volume
    for _, j, _, room in pieces:
        if remaining <= 0:
            break
        take = min(room, remaining)
        volumes[j] += take
        remaining -= take
    return volumes


def _volumes_at(theta: float, x: Sequence[int], fs: Sequence[CostFunction]) -> np.ndarray:
    return np.array([
        count * f.load_at_threshold(theta) if count > 0 else 0.0
        for count, f in zip(x, fs)
    ])


def _bisect_threshold(
    x: Sequence[int],
    volume: float,
    fs: Sequence[CostFunction],
    max_iter: int
) -> np.ndarray:
    """
    공통 한계 비용 θ에 대한 이분 탐색

    v_j(θ)는 θ에 대해 비감소. lo는 Σv(lo) < λ, hi는 Σv(hi) ≥ λ를 유지하고,
    마지막에 남은 작업량은 타입 인덱스 순으로 [v(lo), v(hi)] 범위에서 채움.
    """
    tol = settings.cost_tolerance * max(1.0, volume)

    lo, hi = 0.0, 0.0
    base = _volumes_at(lo, x, fs)
    if base.sum() >= volume:
        # θ = 0에서 이미 충분: 0 미만 영역은 부하 0
        ceiling = base
        base = np.zeros(len(x))
    else:
        hi = max(
            (f.right_derivative(f.z_max) for count, f in zip(x, fs) if count > 0),
            default=0.0
        )
        hi = max(hi, 1e-300)
        ceiling = _volumes_at(hi, x, fs)
        while ceiling.sum() < volume:
            hi *= 2.0
            ceiling = _volumes_at(hi, x, fs)

        for _ in range(max_iter):
            if ceiling.sum() - base.sum() <= tol:
                break
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            probe = _volumes_at(mid, x, fs)
            if probe.sum() >= volume:
                hi, ceiling = mid, probe
            else:
                lo, base = mid, probe
        else:
            logger.debug(f"θ 이분 탐색 최대 반복 도달 (λ={volume:g}, θ∈[{lo:g}, {hi:g}])")

    volumes = base.copy()
    remaining = volume - volumes.sum()
    for j in range(len(x)):
        if remaining <= 0:
            break
        extra = min(max(ceiling[j] - volumes[j], 0.0), remaining)
        volumes[j] += extra
        remaining -= extra
    return volumes


def eval_g_total(
    x: Sequence[int],
    volume: float,
    fs: Sequence[CostFunction],
    max_iter: Optional[int] = None
) -> AllocationResult:
    """
    g_t(x) = min over the simplex Z of Σ_j g_{t,j}(x_j, z_j)

    Args:
        x: 타입별 활성 서버 수
        volume: 작업량 λ_t
        fs: 타입별 비용 함수

    Returns:
        AllocationResult (용량 부족이면 cost=+inf, z=())
    """
    max_iter = max_iter or settings.bisection_max_iter
    if _capacity(x, fs) < volume:
        return AllocationResult(z=(), volumes=(), cost=math.inf)
    if volume == 0:
        return _idle_result(x, fs)

    active_linear = all(f.is_linear for count, f in zip(x, fs) if count > 0)
    if active_linear:
        volumes = _greedy_linear(x, volume, fs)
    else:
        volumes = _bisect_threshold(x, volume, fs, max_iter)

    # 박스 제약으로 클램프
    caps = np.array([count * f.z_max for count, f in zip(x, fs)])
    volumes = np.clip(volumes, 0.0, caps)

    cost = 0.0
    for count, f, v in zip(x, fs, volumes):
        if count > 0:
            cost += count * f(min(v / count, f.z_max))

    z = tuple(float(v / volume) for v in volumes)
    return AllocationResult(z=z, volumes=tuple(float(v) for v in volumes), cost=float(cost))


@dataclass
class CacheStats:
    hit_count: int
    miss_count: int
    cached_items: int

    @property
    def hit_rate(self) -> float:
        total = self.hit_count + self.miss_count
        return self.hit_count / total if total > 0 else 0.0


class OperatingCostCache:
    """
    g_t(x) 메모이제이션

    동일한 (슬롯, 구성)에 대한 재요청 시 저장된 값을 반환.
    할당 계산이 DP 전체 실행 시간의 대부분을 차지함.
    """

    def __init__(self, instance):
        """
        Args:
            instance: ProblemInstance (volume / functions_at 제공)
        """
        self.instance = instance
        self._cache: Dict[Tuple[int, ServerConfig], float] = {}
        self._hit_count = 0
        self._miss_count = 0
        self._elapsed = 0.0

    def get(self, t: int, config: Sequence[int]) -> float:
        """g_t(config) 조회 (캐시 우선)"""
        key = (t, tuple(int(c) for c in config))
        if key in self._cache:
            self._hit_count += 1
            return self._cache[key]

        self._miss_count += 1
        started = time.perf_counter()
        result = eval_g_total(key[1], self.instance.volume(t), self.instance.functions_at(t))
        self._elapsed += time.perf_counter() - started
        self._cache[key] = result.cost
        return result.cost

    def allocation(self, t: int, config: Sequence[int]) -> AllocationResult:
        """최적 분할 전체 (캐시하지 않음)"""
        return eval_g_total(tuple(config), self.instance.volume(t), self.instance.functions_at(t))

    def table(self, t: int, axes: Sequence[np.ndarray]) -> np.ndarray:
        """
        격자 전체의 g_t 값 배열

        Args:
            axes: 타입별 허용 서버 수 (오름차순)
        """
        shape = tuple(len(axis) for axis in axes)
        values = np.empty(shape, dtype=float)
        for index in np.ndindex(*shape):
            config = tuple(int(axes[j][i]) for j, i in enumerate(index))
            values[index] = self.get(t, config)
        return values

    def invalidate(self, t: Optional[int] = None):
        """캐시 무효화 (t가 없으면 전체)"""
        if t is None:
            self._cache.clear()
            return
        for key in [k for k in self._cache if k[0] == t]:
            del self._cache[key]

    def get_stats(self) -> CacheStats:
        return CacheStats(
            hit_count=self._hit_count,
            miss_count=self._miss_count,
            cached_items=len(self._cache)
        )

    def log_stats(self):
        stats = self.get_stats()
        logger.debug(
            f"📦 g_t 캐시: {stats.cached_items}개 | 적중률 {stats.hit_rate:.1%} | "
            f"할당 계산 {self._elapsed:.3f}초"
        )
