"""
RightSize Studio - Instance & Schedule I/O
인스턴스 파일(JSON) 읽기/쓰기와 스케줄 CSV 입출력

Instance file fields (exact names, unknown fields rejected):
    T, d, beta, fleet, lambda, cost_functions
"""
import io
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from cost_functions import CostFunction
from exceptions import InstanceFormatError
from model import CostBreakdown, ProblemInstance, Schedule


class CostFunctionSpec(BaseModel):
    """비용 함수 한 개의 파일 표현"""
    model_config = ConfigDict(extra='forbid')

    form: Literal["affine", "power", "piecewise"]
    z_max: float
    a: Optional[float] = None
    b: Optional[float] = None
    p: Optional[float] = None
    breakpoints: Optional[List[Tuple[float, float]]] = None

    def to_function(self) -> CostFunction:
        if self.form == "piecewise":
            if not self.breakpoints:
                raise InstanceFormatError("piecewise cost function needs 'breakpoints'")
            return CostFunction.piecewise(self.breakpoints, self.z_max)
        a = self.a or 0.0
        b = self.b or 0.0
        if self.form == "power":
            return CostFunction.power(a, b, 1.0 if self.p is None else self.p, self.z_max)
        return CostFunction.affine(a, b, self.z_max)

    @classmethod
    def from_function(cls, f: CostFunction) -> "CostFunctionSpec":
        if f.form == "piecewise":
            return cls(form="piecewise", z_max=f.z_max, breakpoints=[tuple(bp) for bp in f.breakpoints])
        if f.form == "power":
            return cls(form="power", z_max=f.z_max, a=f.a, b=f.b, p=f.p)
        return cls(form="affine", z_max=f.z_max, a=f.a, b=f.b)


class InstanceDocument(BaseModel):
    """인스턴스 파일 스키마"""
    model_config = ConfigDict(extra='forbid', populate_by_name=True)

    T: int
    d: int
    beta: List[float]
    fleet: Union[List[int], List[List[int]]]
    volumes: List[float] = Field(alias="lambda")
    cost_functions: Union[List[CostFunctionSpec], List[List[CostFunctionSpec]]]

    def to_instance(self) -> ProblemInstance:
        if self.cost_functions and isinstance(self.cost_functions[0], list):
            functions = tuple(tuple(spec.to_function() for spec in row) for row in self.cost_functions)
        else:
            functions = tuple(spec.to_function() for spec in self.cost_functions)
        if self.fleet and isinstance(self.fleet[0], list):
            fleet = tuple(tuple(row) for row in self.fleet)
        else:
            fleet = tuple(self.fleet)
        # T, d는 선언값 그대로 보존 (불일치는 validate_instance가 보고)
        return ProblemInstance(
            T=self.T, d=self.d, beta=tuple(self.beta), fleet=fleet,
            cost_functions=functions, volumes=tuple(self.volumes)
        )

    @classmethod
    def from_instance(cls, instance: ProblemInstance) -> "InstanceDocument":
        if instance.functions_time_dependent:
            functions = [[CostFunctionSpec.from_function(f) for f in row] for row in instance.cost_functions]
        else:
            functions = [CostFunctionSpec.from_function(f) for f in instance.cost_functions]
        if instance.fleet_time_dependent:
            fleet = [list(row) for row in instance.fleet]
        else:
            fleet = list(instance.fleet)
        return cls(
            T=instance.T, d=instance.d, beta=list(instance.beta), fleet=fleet,
            volumes=list(instance.volumes), cost_functions=functions
        )


def parse_instance(text: str) -> ProblemInstance:
    """JSON 문자열 → ProblemInstance"""
    try:
        document = InstanceDocument.model_validate_json(text)
    except ValidationError as e:
        raise InstanceFormatError(f"invalid instance document: {e}") from e
    return document.to_instance()


def load_instance(path: Union[str, Path]) -> ProblemInstance:
    """인스턴스 파일 로드"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InstanceFormatError(f"cannot read instance file {path}: {e}") from e
    instance = parse_instance(text)
    logger.debug(f"📂 인스턴스 로드: {path} (T={instance.T}, d={instance.d})")
    return instance


def dump_instance(instance: ProblemInstance) -> str:
    """ProblemInstance → JSON 문자열 (결정적 출력)"""
    document = InstanceDocument.from_instance(instance)
    data = document.model_dump(by_alias=True, exclude_none=True)
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def save_instance(instance: ProblemInstance, path: Union[str, Path]):
    Path(path).write_text(dump_instance(instance), encoding="utf-8")


# ----------------------------------------------------------------------
# Schedule CSV: t, x_1, …, x_d, operating, switching
# ----------------------------------------------------------------------

def schedule_frame(schedule: Schedule, breakdown: CostBreakdown) -> pd.DataFrame:
    d = len(schedule.configs[0]) if schedule.configs else 0
    rows = []
    for t, (config, (operating, switching)) in enumerate(zip(schedule.configs, breakdown.per_slot), start=1):
        row = {"t": t}
        row.update({f"x_{j + 1}": int(x) for j, x in enumerate(config)})
        row["operating"] = operating
        row["switching"] = switching
        rows.append(row)
    columns = ["t"] + [f"x_{j + 1}" for j in range(d)] + ["operating", "switching"]
    return pd.DataFrame(rows, columns=columns)


def format_schedule(schedule: Schedule, breakdown: CostBreakdown) -> str:
    """스케줄 CSV 문자열 (비용 소수점 9자리)"""
    buffer = io.StringIO()
    schedule_frame(schedule, breakdown).to_csv(buffer, index=False, float_format="%.9f", lineterminator="\n")
    return buffer.getvalue()


def write_schedule(schedule: Schedule, breakdown: CostBreakdown, path: Union[str, Path]):
    Path(path).write_text(format_schedule(schedule, breakdown), encoding="utf-8")


def read_schedule(path: Union[str, Path]) -> Schedule:
    """스케줄 CSV 로드 (비용 열은 무시하고 구성만 복원)"""
    frame = pd.read_csv(path)
    columns = [c for c in frame.columns if c.startswith("x_")]
    if "t" not in frame.columns or not columns:
        raise InstanceFormatError(f"{path}: not a schedule file (need t, x_1, … columns)")
    frame = frame.sort_values("t")
    return Schedule.from_rows(frame[columns].itertuples(index=False, name=None))
