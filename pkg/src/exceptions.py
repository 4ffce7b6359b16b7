"""
RightSize Studio - Exceptions
솔버/입출력 공통 예외 계층
"""
from typing import List, Optional


class RightSizingError(Exception):
    """Base exception for every solver and I/O error"""
    pass


class InstanceValidationError(RightSizingError):
    """인스턴스 검증 실패 (위반 목록 포함)"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("invalid instance: " + "; ".join(self.violations))


class InstanceFormatError(RightSizingError):
    """Instance file could not be parsed"""
    pass


class DimensionMismatchError(RightSizingError):
    """스케줄/인스턴스 차원 불일치"""
    pass


class InfeasibleScheduleError(RightSizingError):
    """Schedule violates a capacity or fleet constraint"""

    def __init__(self, message: str, slot: Optional[int] = None):
        self.slot = slot
        super().__init__(message)


class InfeasibleInstanceError(RightSizingError):
    """유한 비용 경로가 존재하지 않음"""
    pass


class StateSpaceExceededError(RightSizingError):
    """DP grid is larger than the configured state ceiling"""
    pass


class BudgetExceededError(RightSizingError):
    """오라클 전수 탐색 한도 초과"""
    pass


class ParameterError(RightSizingError):
    """Invalid solver parameter (gamma, epsilon, resolution ...)"""
    pass


class UsageError(RightSizingError):
    """알고리즘 사용 조건 위반"""
    pass
