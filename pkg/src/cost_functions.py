"""
RightSize Studio - Operating Cost Functions
서버 1대의 부하별 운영 비용 f(z): affine / power / piecewise-linear convex

f(z)는 [0, z_max]에서 볼록·비감소이며, z > z_max 이면 +inf.
"""
import math
from dataclasses import dataclass
from typing import Literal, List, Tuple, Union

import numpy as np

Form = Literal["affine", "power", "piecewise"]
ArrayLike = Union[float, np.ndarray]

# 부하가 z_max를 넘는지 판단할 때의 상대 허용치
_CAP_TOL = 1e-12


@dataclass(frozen=True)
class CostFunction:
    """
    서버 타입별 운영 비용 함수

    - affine:    f(z) = a + b·z
    - power:     f(z) = a + b·z^p  (p ≥ 1)
    - piecewise: breakpoints 사이 선형 보간, 마지막 구간 기울기로 z_max까지 연장
    """
    form: Form
    z_max: float
    a: float = 0.0
    b: float = 0.0
    p: float = 1.0
    breakpoints: Tuple[Tuple[float, float], ...] = ()

    @classmethod
    def affine(cls, a: float, b: float, z_max: float) -> "CostFunction":
        return cls(form="affine", z_max=float(z_max), a=float(a), b=float(b))

    @classmethod
    def power(cls, a: float, b: float, p: float, z_max: float) -> "CostFunction":
        return cls(form="power", z_max=float(z_max), a=float(a), b=float(b), p=float(p))

    @classmethod
    def piecewise(cls, breakpoints, z_max: float) -> "CostFunction":
        points = tuple((float(z), float(v)) for z, v in breakpoints)
        return cls(form="piecewise", z_max=float(z_max), breakpoints=points)

    @classmethod
    def constant(cls, level: float, z_max: float) -> "CostFunction":
        """부하 무관 비용 (load-independent)"""
        return cls.affine(level, 0.0, z_max)

    # ------------------------------------------------------------------
    # 평가
    # ------------------------------------------------------------------

    @property
    def idle_cost(self) -> float:
        """유휴 비용 l = f(0)"""
        if self.form == "piecewise":
            return self.breakpoints[0][1] if self.breakpoints else 0.0
        return self.a

    @property
    def is_linear(self) -> bool:
        """구간 선형 여부 (할당에서 정확한 greedy 사용 가능)"""
        return self.form != "power" or self.p == 1.0

    @property
    def is_load_independent(self) -> bool:
        if self.form == "piecewise":
            return all(v == self.idle_cost for _, v in self.breakpoints)
        return self.b == 0.0

    def _exceeds_cap(self, z: ArrayLike) -> ArrayLike:
        return z > self.z_max + _CAP_TOL * max(1.0, self.z_max)

    def _raw(self, z: np.ndarray) -> np.ndarray:
        if self.form == "affine":
            return self.a + self.b * z
        if self.form == "power":
            return self.a + self.b * np.power(z, self.p)

        zs = np.array([bp[0] for bp in self.breakpoints], dtype=float)
        vs = np.array([bp[1] for bp in self.breakpoints], dtype=float)
        if len(zs) == 1:
            return np.full_like(z, vs[0], dtype=float)
        inside = np.interp(z, zs, vs)
        # 마지막 breakpoint 이후는 마지막 기울기로 연장
        last_slope = (vs[-1] - vs[-2]) / (zs[-1] - zs[-2])
        tail = vs[-1] + last_slope * (z - zs[-1])
        return np.where(z > zs[-1], tail, inside)

    def __call__(self, z: ArrayLike) -> ArrayLike:
        """
        f(z) 평가 (스칼라 또는 numpy 배열)

        z > z_max 이면 +inf
        """
        arr = np.asarray(z, dtype=float)
        values = np.where(self._exceeds_cap(arr), np.inf, self._raw(np.clip(arr, 0.0, None)))
        if np.ndim(values) == 0:
            return float(values)
        return values

    # ------------------------------------------------------------------
    # 미분 / 한계 비용
    # ------------------------------------------------------------------

    def linear_segments(self) -> List[Tuple[float, float]]:
        """
        [0, z_max]를 덮는 (기울기, 길이) 구간 목록 (선형 형태 전용)
        """
        if self.form in ("affine", "power"):
            return [(self.b, self.z_max)] if self.z_max > 0 else []

        segments: List[Tuple[float, float]] = []
        points = self.breakpoints
        slope = 0.0
        for (z0, v0), (z1, v1) in zip(points, points[1:]):
            if z0 >= self.z_max:
                break
            slope = (v1 - v0) / (z1 - z0)
            segments.append((slope, min(z1, self.z_max) - z0))
        last_z = points[-1][0] if points else 0.0
        if self.z_max > last_z:
            segments.append((slope, self.z_max - last_z))
        return segments

    def right_derivative(self, z: float) -> float:
        """우미분 f'_+(z)"""
        if self.form == "affine":
            return self.b
        if self.form == "power":
            if self.p == 1.0:
                return self.b
            return self.b * self.p * z ** (self.p - 1.0)

        position = 0.0
        for slope, length in self.linear_segments():
            position += length
            if z < position:
                return slope
        segments = self.linear_segments()
        return segments[-1][0] if segments else 0.0

    def load_at_threshold(self, theta: float) -> float:
        """
        우미분이 theta 이하인 최대 부하 z ∈ [0, z_max]

        볼록 함수이므로 우미분은 비감소 → 임계값 이하 구간은 [0, z].
        """
        if theta < 0.0 or self.z_max <= 0.0:
            return 0.0
        if self.form == "power" and self.p != 1.0:
            if self.b == 0.0:
                return self.z_max
            z = (theta / (self.b * self.p)) ** (1.0 / (self.p - 1.0))
            return min(z, self.z_max)

        reach = 0.0
        for slope, length in self.linear_segments():
            if slope > theta:
                break
            reach += length
        return min(reach, self.z_max)

    # ------------------------------------------------------------------
    # 변환 / 검증
    # ------------------------------------------------------------------

    def scaled(self, factor: float) -> "CostFunction":
        """factor·f (서브 슬롯 분할 인스턴스에서 사용)"""
        if self.form == "piecewise":
            points = tuple((z, v * factor) for z, v in self.breakpoints)
            return CostFunction(form="piecewise", z_max=self.z_max, breakpoints=points)
        return CostFunction(
            form=self.form, z_max=self.z_max,
            a=self.a * factor, b=self.b * factor, p=self.p
        )

    def violations(self) -> List[str]:
        """불변식 위반 목록 (빈 리스트면 정상)"""
        problems: List[str] = []
        if not math.isfinite(self.z_max) or self.z_max < 0:
            problems.append(f"z_max must be a nonnegative finite number, got {self.z_max:g}")

        if self.form in ("affine", "power"):
            if self.a < 0:
                problems.append(f"a must be >= 0, got {self.a:g}")
            if self.b < 0:
                problems.append(f"b must be >= 0, got {self.b:g}")
            if self.form == "power" and self.p < 1:
                problems.append(f"p must be >= 1, got {self.p:g}")
            return problems

        if self.form != "piecewise":
            problems.append(f"unknown form '{self.form}'")
            return problems

        points = self.breakpoints
        if not points:
            problems.append("piecewise function needs at least one breakpoint")
            return problems
        if points[0][0] != 0.0:
            problems.append(f"first breakpoint must be at z = 0, got {points[0][0]:g}")
        if points[0][1] < 0:
            problems.append(f"f(0) must be >= 0, got {points[0][1]:g}")

        prev_slope = None
        for (z0, v0), (z1, v1) in zip(points, points[1:]):
            if z1 <= z0:
                problems.append(f"breakpoints not strictly increasing: {z0:g} -> {z1:g}")
                return problems
            if v1 < v0:
                problems.append(f"decreasing: f({z1:g}) = {v1:g} < f({z0:g}) = {v0:g}")
            slope = (v1 - v0) / (z1 - z0)
            if prev_slope is not None and slope < prev_slope - 1e-12:
                problems.append(f"non-convex: slope decreases {prev_slope:g}→{slope:g}")
            prev_slope = slope
        return problems

    def describe(self) -> str:
        if self.form == "affine":
            return f"{self.a:g} + {self.b:g}·z (z ≤ {self.z_max:g})"
        if self.form == "power":
            return f"{self.a:g} + {self.b:g}·z^{self.p:g} (z ≤ {self.z_max:g})"
        return f"piecewise{list(self.breakpoints)} (z ≤ {self.z_max:g})"
