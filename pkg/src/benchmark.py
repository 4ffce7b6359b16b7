"""
RightSize Studio - Comparison & Verification Harness
정확해 / 근사해 / 온라인 알고리즘을 한 인스턴스에서 비교하고 CSV 리포트 생성

기능:
1. compare: 실행별 비용·OPT 대비 비율·보장값 (RunReport) + 슬롯별 궤적
2. verify: 전수 탐색 / 격자 탐색 오라클과 교차 검증
3. 결과 저장 (CSV, 결정적 출력)
"""
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from config import settings
from allocation import eval_g_total
from approximation import solve_approx
from model import ProblemInstance, Schedule, costs_close
from offline_solver import LayerGrid, solve_offline
from online_algorithms import competitive_ratio, run_online
from oracle import EnumerationBudget, brute_force_offline, discretization_allowance, grid_search_allocation
from workload import random_tiny_instance

REPORT_COLUMNS = [
    "run_id", "algorithm", "epsilon", "gamma", "operating", "switching",
    "total", "opt", "ratio", "bound", "violation"
]
PER_SLOT_COLUMNS = ["run_id", "algorithm", "t", "j", "x_opt", "x_alg", "lambda"]


@dataclass
class RunReport:
    """실행 한 번의 결과"""
    run_id: int
    algorithm: str
    schedule: Schedule
    operating: float
    switching: float
    total: float
    opt: float
    bound: float
    epsilon: Optional[float] = None
    gamma: Optional[float] = None
    wall_time: float = 0.0

    @property
    def ratio(self) -> float:
        return competitive_ratio(self.total, self.opt)[0]

    @property
    def violation(self) -> bool:
        return self.ratio > self.bound + settings.ratio_tolerance

    def row(self, timing: bool = False) -> dict:
        row = {
            "run_id": self.run_id,
            "algorithm": self.algorithm,
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "operating": self.operating,
            "switching": self.switching,
            "total": self.total,
            "opt": self.opt,
            "ratio": self.ratio,
            "bound": self.bound,
            "violation": int(self.violation),
        }
        if timing:
            row["wall_time"] = self.wall_time
        return row

    def __str__(self):
        emoji = "❌" if self.violation else "✅"
        params = ""
        if self.epsilon is not None:
            params = f" ε={self.epsilon:g}"
        elif self.gamma is not None:
            params = f" γ={self.gamma:g}"
        return (
            f"{emoji} [{self.run_id}] {self.algorithm}{params}: 비용 {self.total:.9f} | "
            f"비율 {self.ratio:.6f} ≤ {self.bound:.6g}"
        )


class ComparisonRunner:
    """
    한 인스턴스에 대해 모든 해법을 실행하고 리포트 수집

    온라인 알고리즘은 적용 조건을 만족할 때만 실행 (A: 시간 무관 비용, 모두: 고정 fleet).
    """

    def __init__(
        self,
        instance: ProblemInstance,
        epsilons: Optional[Sequence[float]] = None,
        timing: bool = False
    ):
        self.instance = instance
        self.epsilons = list(epsilons) if epsilons is not None else settings.epsilons
        self.timing = timing
        self.reports: List[RunReport] = []
        self.optimal: Optional[Schedule] = None

    def _add(self, algorithm: str, schedule: Schedule, breakdown, opt: float, bound: float,
             started: float, epsilon=None, gamma=None) -> RunReport:
        report = RunReport(
            run_id=len(self.reports) + 1,
            algorithm=algorithm,
            schedule=schedule,
            operating=breakdown.operating_total,
            switching=breakdown.switching_total,
            total=breakdown.grand_total,
            opt=opt,
            bound=bound,
            epsilon=epsilon,
            gamma=gamma,
            wall_time=time.perf_counter() - started
        )
        self.reports.append(report)
        logger.info(str(report))
        return report

    def run(self) -> List[RunReport]:
        instance = self.instance
        self.reports = []

        started = time.perf_counter()
        exact = solve_offline(instance)
        opt = exact.cost
        self.optimal = exact.schedule
        self._add("exact", exact.schedule, exact.breakdown, opt, 1.0, started)

        for epsilon in self.epsilons:
            started = time.perf_counter()
            approx = solve_approx(instance, epsilon=epsilon)
            self._add("approx", approx.schedule, approx.breakdown, opt, approx.bound, started,
                      epsilon=epsilon, gamma=approx.gamma)

        if not instance.fleet_constant:
            logger.info("fleet이 시간에 따라 변함: 온라인 알고리즘 생략")
            return self.reports

        online_runs: List[Tuple[str, Optional[float]]] = []
        if instance.time_independent:
            online_runs.append(("a", None))
        online_runs.append(("b", None))
        online_runs.extend(("c", epsilon) for epsilon in self.epsilons)

        for algorithm, epsilon in online_runs:
            started = time.perf_counter()
            result = run_online(instance, algorithm, epsilon=epsilon, audit=False)
            self._add(algorithm.upper(), result.schedule, result.breakdown, opt, result.bound, started,
                      epsilon=epsilon)
        return self.reports

    # ------------------------------------------------------------------
    # Export
    # ------------------------------------------------------------------

    def report_frame(self) -> pd.DataFrame:
        columns = REPORT_COLUMNS + (["wall_time"] if self.timing else [])
        return pd.DataFrame([r.row(self.timing) for r in self.reports], columns=columns)

    def per_slot_frame(self) -> pd.DataFrame:
        rows = []
        for report in self.reports:
            for t, config in enumerate(report.schedule.configs, start=1):
                for j, x in enumerate(config):
                    rows.append({
                        "run_id": report.run_id,
                        "algorithm": report.algorithm,
                        "t": t,
                        "j": j + 1,
                        "x_opt": self.optimal.at(t)[j],
                        "x_alg": x,
                        "lambda": self.instance.volume(t),
                    })
        return pd.DataFrame(rows, columns=PER_SLOT_COLUMNS)

    def save(self, out: Union[str, Path], per_slot_out: Optional[Union[str, Path]] = None):
        Path(out).write_text(frame_to_csv(self.report_frame()), encoding="utf-8")
        logger.info(f"📁 리포트 저장: {out}")
        if per_slot_out is not None:
            Path(per_slot_out).write_text(frame_to_csv(self.per_slot_frame()), encoding="utf-8")
            logger.info(f"📁 슬롯별 궤적 저장: {per_slot_out}")


def frame_to_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format="%.9f", lineterminator="\n")
    return buffer.getvalue()


# ----------------------------------------------------------------------
# Verification suite
# ----------------------------------------------------------------------

@dataclass
class VerificationSummary:
    """오라클 교차 검증 결과"""
    instances: int = 0
    checks: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def merge(self, other: "VerificationSummary"):
        self.instances += other.instances
        self.checks += other.checks
        self.failures.extend(other.failures)

    def __str__(self):
        if self.passed:
            return f"✅ verify: {self.instances} instance(s), {self.checks} check(s) passed"
        lines = [f"❌ verify: {len(self.failures)} of {self.checks} check(s) failed"]
        lines.extend(f"  - {failure}" for failure in self.failures)
        return "\n".join(lines)


def check_allocation(
    config,
    volume: float,
    functions,
    resolution: Optional[int] = None
) -> Optional[str]:
    """
    eval_g_total과 격자 탐색 비교 (문제 없으면 None)

    정확한 최소는 어떤 격자점보다도 크지 않아야 하고, 격자 탐색과의 차이는
    1e-3·(1 + 격자값)에 이산화 허용폭을 더한 값 이하여야 함.
    격자점이 하나도 실행 가능하지 않으면 (용량이 빠듯한 경우) 비교하지 않음.
    """
    exact = eval_g_total(config, volume, functions).cost
    oracle = grid_search_allocation(config, volume, functions, resolution)
    if math.isinf(exact):
        return None if math.isinf(oracle) else f"g=inf but grid finds {oracle:.9f}"
    if math.isinf(oracle):
        return None
    if exact > oracle + 1e-7 * (1.0 + abs(oracle)):
        return f"g={exact:.9f} above grid {oracle:.9f}"
    allowance = 1e-3 * (1.0 + abs(oracle)) + discretization_allowance(config, volume, functions, resolution)
    if oracle - exact > allowance:
        return f"g={exact:.9f} vs grid {oracle:.9f} (allowance {allowance:.6f})"
    return None


def verify_instance(
    instance: ProblemInstance,
    label: str = "instance",
    budget: Optional[EnumerationBudget] = None,
    resolution: Optional[int] = None
) -> VerificationSummary:
    """
    solve_offline vs 전수 탐색, eval_g_total vs 격자 탐색 (d ≤ 3)
    """
    summary = VerificationSummary(instances=1)

    _, brute_cost = brute_force_offline(instance, budget)
    solution = solve_offline(instance)
    summary.checks += 1
    if not costs_close(solution.cost, brute_cost):
        summary.failures.append(f"{label}: solve_offline {solution.cost:.12f} != brute force {brute_cost:.12f}")

    if instance.d > 3:
        return summary
    for t in range(1, instance.T + 1):
        functions = instance.functions_at(t)
        volume = instance.volume(t)
        for config in LayerGrid.box(instance.fleet_at(t)).configs():
            problem = check_allocation(config, volume, functions, resolution)
            summary.checks += 1
            if problem:
                summary.failures.append(f"{label}: slot {t} x={config}: {problem}")
    return summary


def verify_random(count: int, seed: int, resolution: Optional[int] = None) -> VerificationSummary:
    """seed 고정 소형 무작위 인스턴스 count개 검증 (시간 의존 / 가변 fleet 섞음)"""
    rng = np.random.default_rng(seed)
    summary = VerificationSummary()
    for i in range(count):
        instance = random_tiny_instance(
            rng,
            time_dependent=(i % 3 == 1),
            varying_fleet=(i % 4 == 3)
        )
        summary.merge(verify_instance(instance, label=f"random #{i + 1}", resolution=resolution))
    logger.info(str(summary).splitlines()[0])
    return summary
