"""
RightSize Studio - Configuration Management
Pydantic Settings for the data-center right-sizing solvers
"""
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import field_validator
from typing import Optional, List

__version__ = "0.1.0"


class Settings(BaseSettings):
    """Application settings loaded from environment variables (prefix RIGHTSIZE_)"""

    model_config = SettingsConfigDict(
        env_prefix='RIGHTSIZE_',
        env_file='.env',
        env_file_encoding='utf-8',
        case_sensitive=False,
        extra='ignore'
    )

    # DP 상태 공간 한도 (레이어당 격자점 수)
    state_ceiling: int = 10_000_000

    # 오라클 전수 탐색 한도 (스케줄 후보 수)
    enumeration_budget: int = 1_000_000

    # 비용 비교 허용 오차
    cost_tolerance: float = 1e-9
    ratio_tolerance: float = 1e-6

    # 할당 이분 탐색
    bisection_max_iter: int = 200
    grid_search_resolution: int = 200

    # 재현성
    default_seed: int = 7
    default_epsilons: str = "0.25,0.5,1.0"

    # Logging
    log_level: str = "INFO"
    log_dir: Optional[str] = None

    @field_validator('state_ceiling', 'enumeration_budget', 'bisection_max_iter', 'grid_search_resolution')
    @classmethod
    def check_positive(cls, v):
        """한도 값은 양수여야 함"""
        if v < 1:
            raise ValueError("must be a positive integer")
        return v

    @property
    def epsilons(self) -> List[float]:
        """
        문자열로 입력된 default_epsilons를 리스트로 변환
        """
        if not self.default_epsilons or not self.default_epsilons.strip():
            return []
        return [float(s.strip()) for s in self.default_epsilons.split(',') if s.strip()]


# Global settings instance
settings = Settings()
