"""
공통 pytest 설정: src/를 import 경로에 추가하고 자주 쓰는 인스턴스 제공
"""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from cost_functions import CostFunction  # noqa: E402
from model import ProblemInstance  # noqa: E402


@pytest.fixture
def single_server():
    """T=1, d=1, m=1, β=1, f(z)=1+z, λ=(1): 유일한 실행 가능 스케줄 (1), 비용 3"""
    return ProblemInstance.build(
        beta=[1.0], fleet=[1],
        cost_functions=[CostFunction.affine(1.0, 1.0, 1.0)],
        volumes=[1.0]
    )


@pytest.fixture
def two_type_instance():
    return ProblemInstance.build(
        beta=[4.0, 2.5],
        fleet=[3, 2],
        cost_functions=[
            CostFunction.affine(1.0, 1.0, 1.0),
            CostFunction.power(0.5, 2.0, 2.0, 1.5),
        ],
        volumes=[0.5, 2.0, 3.5, 1.0, 0.0, 2.5]
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
